#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "finrank/matrix_measure.hpp"
#include "finrank/perturbation.hpp"

namespace finrank {

/// Default dyadic probe depth for the carrier detectors. At 2^-45 the
/// Poisson value of an atom of relative mass 1e-10 still clears the absolute
/// divergence threshold.
inline constexpr int kDyadicDepth = 45;

/// [2^-1, ..., 2^-N], exactly representable.
inline std::vector<double> dyadic_heights(int n) {
    if (n < 1 || n > 50) throw std::invalid_argument("dyadic_heights: need 1 <= N <= 50");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) out.push_back(std::ldexp(1.0, -k));
    return out;
}

/// Numerical membership in S_mu / F^1: the Poisson value must grow by a
/// factor >= growth_tol on each of the last 5 dyadic steps (the atomic
/// signature is a factor ~2 per halving) and exceed 1e3 * total mass at the
/// deepest height. The growth gate rejects large bounded densities; the
/// absolute gate rejects noise around vanishing values.
inline bool poisson_divergence(const ScalarMeasure& mu, double x, int n = kDyadicDepth,
                               double growth_tol = 1.8) {
    if (n < 10) throw std::invalid_argument("poisson_divergence: need N >= 10");
    const auto heights = dyadic_heights(n);
    std::vector<double> tail;
    tail.reserve(6);
    for (int k = n - 6; k < n; ++k)
        tail.push_back(poisson_value(mu, Complex(x, heights[static_cast<std::size_t>(k)])));
    for (std::size_t i = 1; i < tail.size(); ++i) {
        if (!(tail[i] >= growth_tol * tail[i - 1])) return false;
    }
    return tail.back() > 1e3 * mu.total_mass();
}

/// The y_n = 1/n verdict, probed along the geometric subsequence n = 3^k
/// (heights 1/3^k, k <= depth). Growth is required per height-halving
/// (growth_tol^log2(3) per step) and the absolute threshold is rescaled by
/// 2^-45 / 3^-depth so the detectable-atom-mass floor matches the dyadic
/// detector; by Harnack the two verdicts agree on every probe point.
inline bool poisson_divergence_harmonic(const ScalarMeasure& mu, double x, int depth = 28,
                                        double growth_tol = 1.8) {
    if (depth < 8 || depth > 33)
        throw std::invalid_argument("poisson_divergence_harmonic: need 8 <= depth <= 33");
    std::vector<double> tail;
    tail.reserve(6);
    for (int k = depth - 5; k <= depth; ++k)
        tail.push_back(poisson_value(mu, Complex(x, std::pow(3.0, -k))));
    const double per_step = std::pow(growth_tol, std::log2(3.0));
    for (std::size_t i = 1; i < tail.size(); ++i) {
        if (!(tail[i] >= per_step * tail[i - 1])) return false;
    }
    const double scale = std::ldexp(1.0, -kDyadicDepth) / std::pow(3.0, -depth);
    return tail.back() > 1e3 * scale * mu.total_mass();
}

/// Dyadic density limit W_alpha(x) = lim M(x + i y_n) / mu(x + i y_n) with
/// mu = tr M. Returns the trace-normalized final ratio when (a) the Poisson
/// trace at the deepest height clears the divergence threshold (otherwise
/// both numerator and denominator stay bounded or vanish and the point
/// carries no singular mass), (b) the last five successive ratios differ by
/// <= 1e-6, and (c) the final ratio has norm >= 1e-8. For an atomic measure
/// charged at x this equals M({x})/mu({x}) to machine precision.
inline std::optional<Hermitian> density_limit(const MatrixMeasure& m, double x,
                                              int n = kDyadicDepth,
                                              const Tolerances& = {}) {
    if (n < 10) throw std::invalid_argument("density_limit: need N >= 10");
    const auto heights = dyadic_heights(n);
    std::vector<Hermitian> ratios;
    ratios.reserve(6);
    double last_trace = 0.0;
    for (int k = n - 6; k < n; ++k) {
        const Hermitian p = poisson_extension(m, Complex(x, heights[static_cast<std::size_t>(k)]));
        const double tr = p.mat().real().trace();
        if (!(tr > 0.0)) return std::nullopt;
        ratios.emplace_back(p.mat() / tr);
        last_trace = tr;
    }
    if (!(last_trace > 1e3 * m.total_mass())) return std::nullopt;
    for (std::size_t i = 1; i < ratios.size(); ++i) {
        if (!(operator_norm(Hermitian(ratios[i].mat() - ratios[i - 1].mat())) <= 1e-6))
            return std::nullopt;
    }
    if (!(operator_norm(ratios.back()) >= 1e-8)) return std::nullopt;
    return ratios.back();
}

inline std::optional<Hermitian> density_limit(const PerturbationModel& model,
                                              const Hermitian& alpha, double x,
                                              int n = kDyadicDepth,
                                              const Tolerances& tol = {}) {
    return density_limit(model.spectral_measure(alpha), x, n, tol);
}

/// Per-parameter carrier data: the charged points of mu^alpha with their
/// F^1 / F^2 flags and normalized densities.
struct CarrierReport {
    struct Point {
        double x = 0.0;
        double mass = 0.0;   ///< mu^alpha({x})
        Hermitian density;   ///< W_alpha(x), tr = 1, when limit_ok; zero otherwise
        bool diverged = false;
        bool limit_ok = false;
    };
    Hermitian alpha;
    std::vector<Point> points;

    /// Points in F_alpha (diverged and limit_ok).
    std::vector<Point> carrier() const {
        std::vector<Point> out;
        for (const auto& p : points)
            if (p.diverged && p.limit_ok) out.push_back(p);
        return out;
    }
};

inline CarrierReport carrier_points(const PerturbationModel& model, const Hermitian& alpha,
                                    const Tolerances& tol = {}, int n = kDyadicDepth,
                                    double growth_tol = 1.8) {
    const MatrixMeasure m = model.spectral_measure(alpha);
    const ScalarMeasure mu = trace_measure(m, tol);
    CarrierReport report;
    report.alpha = alpha;
    report.points.reserve(mu.atoms().size());
    for (const auto& atom : mu.atoms()) {
        CarrierReport::Point p;
        p.x = atom.location;
        p.mass = atom.mass;
        p.diverged = poisson_divergence(mu, atom.location, n, growth_tol);
        if (auto w = density_limit(m, atom.location, n, tol)) {
            p.limit_ok = true;
            p.density = *w;
        } else {
            p.density = Hermitian::Zero(m.dim());
        }
        report.points.push_back(std::move(p));
    }
    return report;
}

/// True iff no atom of mu lies within atom_merge of an atom of nu.
/// A.c. parts with positive mass are ignored (they are automatically
/// singular against the atomic comparand); a note is appended to `warnings`
/// when that happens.
inline bool mutually_singular(const ScalarMeasure& mu, const ScalarMeasure& nu,
                              const Tolerances& tol = {},
                              std::vector<std::string>* warnings = nullptr) {
    if (warnings) {
        if (mu.has_ac_part() && mu.ac_mass() > 0.0)
            warnings->push_back("mutually_singular: ignoring a.c. part of first measure");
        if (nu.has_ac_part() && nu.ac_mass() > 0.0)
            warnings->push_back("mutually_singular: ignoring a.c. part of second measure");
    }
    std::size_t i = 0, j = 0;
    const auto& a = mu.atoms();
    const auto& b = nu.atoms();
    while (i < a.size() && j < b.size()) {
        const double diff = a[i].location - b[j].location;
        if (std::abs(diff) <= tol.atom_merge) return false;
        if (diff < 0.0)
            ++i;
        else
            ++j;
    }
    return true;
}

/// Membership of alpha in the extended exceptional set: nu(F_alpha) > 0,
/// i.e. some nu-atom lies within atom_merge of a carrier point of mu^alpha.
inline bool in_extended_exceptional(const PerturbationModel& model, const Hermitian& alpha,
                                    const ScalarMeasure& nu, const Tolerances& tol = {},
                                    int n = kDyadicDepth) {
    if (nu.has_ac_part())
        throw std::invalid_argument("in_extended_exceptional: nu must be atomic singular");
    if (nu.atoms().empty()) return false;
    const auto report = carrier_points(model, alpha, tol, n);
    for (const auto& p : report.points) {
        if (!(p.diverged && p.limit_ok)) continue;
        for (const auto& atom : nu.atoms()) {
            if (std::abs(atom.location - p.x) <= tol.atom_merge) return true;
        }
    }
    return false;
}

}  // namespace finrank
