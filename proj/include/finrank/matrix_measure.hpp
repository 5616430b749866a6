#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "finrank/hermitian.hpp"

namespace finrank {

struct MatrixAtom {
    double location = 0.0;
    Hermitian weight;  // PSD, trace > 0
};

/// One piece of a piecewise-smooth a.c. part: PSD density samples on a
/// uniform grid over [lo, hi], defining the piecewise-linear interpolant.
/// Transforms integrate that interpolant in closed form, so boundary
/// behaviour stays faithful at heights far below the sample pitch (sampled
/// quadrature would degenerate into spurious atoms there).
struct MatrixDensitySegment {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<Hermitian> samples;  // count >= 2, PSD at every node
};

namespace detail {

/// Clamps a nominally-PSD matrix: eigenvalues in [-slack, 0) go to zero,
/// below -slack raises NotPSD with the given context string.
inline Hermitian clamp_psd(const Hermitian& h, double slack, const char* what) {
    const auto es = eigensystem(h);
    const double lo = es.eigenvalues().size() ? es.eigenvalues()(0) : 0.0;
    if (lo >= 0.0) return h;
    if (lo < -slack) throw NotPSD(std::string(what) + ": eigenvalue below PSD slack");
    RealVector fixed = es.eigenvalues().cwiseMax(0.0);
    return Hermitian(es.eigenvectors() * fixed.cast<Complex>().asDiagonal() *
                     es.eigenvectors().adjoint());
}

}  // namespace detail

/// Finite positive matrix-valued Borel measure on R: atoms plus an optional
/// piecewise-smooth absolutely continuous part. Desk-scale singular parts are
/// atomic; exactness there beats approximating Cantor-type measures.
class MatrixMeasure {
  public:
    MatrixMeasure(Eigen::Index dim, std::vector<MatrixAtom> atoms,
                  std::vector<MatrixDensitySegment> ac = {}, const Tolerances& tol = {})
        : dim_(dim), atoms_(std::move(atoms)), ac_(std::move(ac)) {
        tol.validate();
        if (dim_ < 1) throw DimensionMismatch("MatrixMeasure: dim must be >= 1");
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            auto& a = atoms_[i];
            if (a.weight.dim() != dim_)
                throw DimensionMismatch("MatrixMeasure: atom weight dimension mismatch");
            const double slack =
                static_cast<double>(dim_) * tol.eig_residual * (1.0 + operator_norm(a.weight));
            a.weight = detail::clamp_psd(a.weight, slack, "MatrixMeasure atom weight");
            if (!(a.weight.mat().real().trace() > 0.0))
                throw Error("MatrixMeasure: atom weight must have positive trace");
            if (i > 0 && !(atoms_[i].location - atoms_[i - 1].location > tol.atom_merge))
                throw Error("MatrixMeasure: atom locations must increase by more than atom_merge");
        }
        for (auto& seg : ac_) {
            if (!(seg.lo < seg.hi))
                throw Error("MatrixMeasure: density segment needs lo < hi");
            if (seg.samples.size() < 2)
                throw Error("MatrixMeasure: density segment needs at least 2 samples");
            for (auto& s : seg.samples) {
                if (s.dim() != dim_)
                    throw DimensionMismatch("MatrixMeasure: density sample dimension mismatch");
                const double slack =
                    static_cast<double>(dim_) * tol.eig_residual * (1.0 + operator_norm(s));
                s = detail::clamp_psd(s, slack, "MatrixMeasure density sample");
            }
        }
        mass_ = 0.0;
        for (const auto& a : atoms_) mass_ += a.weight.mat().real().trace();
        for (const auto& seg : ac_) {
            const double h = (seg.hi - seg.lo) / static_cast<double>(seg.samples.size() - 1);
            for (std::size_t i = 0; i < seg.samples.size(); ++i) {
                const double w = (i == 0 || i + 1 == seg.samples.size()) ? 0.5 : 1.0;
                mass_ += w * h * seg.samples[i].mat().real().trace();
            }
        }
        if (!std::isfinite(mass_)) throw Error("MatrixMeasure: total mass must be finite");
    }

    Eigen::Index dim() const { return dim_; }
    const std::vector<MatrixAtom>& atoms() const { return atoms_; }
    const std::vector<MatrixDensitySegment>& ac_segments() const { return ac_; }
    bool has_ac_part() const { return !ac_.empty(); }
    /// tr ∫ dM: atom traces plus the trapezoid integral of density traces
    /// (exact for the piecewise-linear density).
    double total_mass() const { return mass_; }

  private:
    Eigen::Index dim_;
    std::vector<MatrixAtom> atoms_;
    std::vector<MatrixDensitySegment> ac_;
    double mass_ = 0.0;
};

struct ScalarAtom {
    double location = 0.0;
    double mass = 0.0;  // > 0
};

struct ScalarDensitySegment {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> samples;  // count >= 2, nonnegative
};

/// The d=1 specialization: weights are positive reals.
class ScalarMeasure {
  public:
    ScalarMeasure() = default;

    ScalarMeasure(std::vector<ScalarAtom> atoms, std::vector<ScalarDensitySegment> ac = {},
                  const Tolerances& tol = {})
        : atoms_(std::move(atoms)), ac_(std::move(ac)) {
        tol.validate();
        for (std::size_t i = 0; i < atoms_.size(); ++i) {
            if (!(atoms_[i].mass > 0.0))
                throw Error("ScalarMeasure: atom mass must be positive");
            if (i > 0 && !(atoms_[i].location - atoms_[i - 1].location > tol.atom_merge))
                throw Error("ScalarMeasure: atom locations must increase by more than atom_merge");
        }
        mass_ = 0.0;
        for (const auto& a : atoms_) mass_ += a.mass;
        for (const auto& seg : ac_) {
            if (!(seg.lo < seg.hi) || seg.samples.size() < 2)
                throw Error("ScalarMeasure: invalid density segment");
            const double h = (seg.hi - seg.lo) / static_cast<double>(seg.samples.size() - 1);
            for (std::size_t i = 0; i < seg.samples.size(); ++i) {
                if (seg.samples[i] < 0.0) throw Error("ScalarMeasure: negative density sample");
                const double w = (i == 0 || i + 1 == seg.samples.size()) ? 0.5 : 1.0;
                mass_ += w * h * seg.samples[i];
            }
        }
        if (!std::isfinite(mass_)) throw Error("ScalarMeasure: total mass must be finite");
    }

    const std::vector<ScalarAtom>& atoms() const { return atoms_; }
    const std::vector<ScalarDensitySegment>& ac_segments() const { return ac_; }
    bool has_ac_part() const { return !ac_.empty(); }
    double total_mass() const { return mass_; }
    double ac_mass() const {
        double m = 0.0;
        for (const auto& seg : ac_) {
            const double h = (seg.hi - seg.lo) / static_cast<double>(seg.samples.size() - 1);
            for (std::size_t i = 0; i < seg.samples.size(); ++i)
                m += ((i == 0 || i + 1 == seg.samples.size()) ? 0.5 : 1.0) * h * seg.samples[i];
        }
        return m;
    }

  private:
    std::vector<ScalarAtom> atoms_;
    std::vector<ScalarDensitySegment> ac_;
    double mass_ = 0.0;
};

namespace detail {

inline void require_upper_half_plane(Complex z) {
    if (!(z.imag() > 0.0))
        throw NotUpperHalfPlane("Cauchy/Poisson transform requires Im z > 0");
}

/// ∫_{s0}^{s1} (s - z)^{-1} ds for Im z > 0. Both endpoints sit in the lower
/// half-plane relative to z, so the principal log branch is safe; a short
/// series handles the far-field cancellation.
inline Complex cauchy_kernel_integral(double s0, double s1, Complex z) {
    const Complex u = Complex(s1 - s0, 0.0) / (Complex(s0, 0.0) - z);
    if (std::abs(u) < 1e-4)
        return u * (1.0 + u * (-0.5 + u * (1.0 / 3.0 + u * (-0.25))));
    return std::log((Complex(s1, 0.0) - z) / (Complex(s0, 0.0) - z));
}

/// ∫_{s0}^{s1} y/((s-x)^2 + y^2) ds, in (0, pi); atan2 form avoids the
/// cancellation of differencing two near-equal arctangents.
inline double poisson_angle(double s0, double s1, double x, double y) {
    return std::atan2((s1 - s0) * y, y * y + (s1 - x) * (s0 - x));
}

/// (1/2) ln(((s1-x)^2+y^2) / ((s0-x)^2+y^2)).
inline double poisson_log(double s0, double s1, double x, double y) {
    const double d0 = s0 - x, d1 = s1 - x;
    return 0.5 * std::log1p((d1 - d0) * (d1 + d0) / (d0 * d0 + y * y));
}

}  // namespace detail

/// CM(z) = ∫ (s - z)^{-1} dM(s); exact for atoms and for the piecewise-linear
/// density (per-interval closed form with the principal log).
inline Matrix cauchy_transform(const MatrixMeasure& m, Complex z) {
    detail::require_upper_half_plane(z);
    Matrix out = Matrix::Zero(m.dim(), m.dim());
    for (const auto& a : m.atoms()) out += a.weight.mat() / (Complex(a.location, 0.0) - z);
    for (const auto& seg : m.ac_segments()) {
        const double h = (seg.hi - seg.lo) / static_cast<double>(seg.samples.size() - 1);
        for (std::size_t i = 0; i + 1 < seg.samples.size(); ++i) {
            const double s0 = seg.lo + h * static_cast<double>(i);
            const Matrix& w0 = seg.samples[i].mat();
            const Matrix slope = (seg.samples[i + 1].mat() - w0) / h;
            const Complex el = detail::cauchy_kernel_integral(s0, s0 + h, z);
            out += slope * h + el * (w0 + (z - Complex(s0, 0.0)) * slope);
        }
    }
    return out;
}

inline Complex cauchy_transform(const ScalarMeasure& m, Complex z) {
    detail::require_upper_half_plane(z);
    Complex out(0.0, 0.0);
    for (const auto& a : m.atoms()) out += a.mass / (Complex(a.location, 0.0) - z);
    for (const auto& seg : m.ac_segments()) {
        const double h = (seg.hi - seg.lo) / static_cast<double>(seg.samples.size() - 1);
        for (std::size_t i = 0; i + 1 < seg.samples.size(); ++i) {
            const double s0 = seg.lo + h * static_cast<double>(i);
            const double w0 = seg.samples[i];
            const double slope = (seg.samples[i + 1] - w0) / h;
            const Complex el = detail::cauchy_kernel_integral(s0, s0 + h, z);
            out += slope * h + el * (w0 + (z - Complex(s0, 0.0)) * slope);
        }
    }
    return out;
}

/// Poisson extension M(z) = pi^{-1} Im CM(z): atoms contribute PSD weights
/// times the positive kernel pi^{-1} y/((s-x)^2+y^2), density intervals their
/// closed-form kernel integrals. This equals (2i pi)^{-1}(CM(z) - CM(z)*)
/// exactly but carries no cancellation noise at small y, which the carrier
/// detectors rely on. Result is clamped PSD.
inline Hermitian poisson_extension(const MatrixMeasure& m, Complex z) {
    detail::require_upper_half_plane(z);
    const double x = z.real(), y = z.imag();
    Matrix out = Matrix::Zero(m.dim(), m.dim());
    constexpr double inv_pi = 0.3183098861837906715;
    for (const auto& a : m.atoms()) {
        const double dx = a.location - x;
        out += (inv_pi * y / (dx * dx + y * y)) * a.weight.mat();
    }
    for (const auto& seg : m.ac_segments()) {
        const double h = (seg.hi - seg.lo) / static_cast<double>(seg.samples.size() - 1);
        for (std::size_t i = 0; i + 1 < seg.samples.size(); ++i) {
            const double s0 = seg.lo + h * static_cast<double>(i);
            const Matrix& w0 = seg.samples[i].mat();
            const Matrix slope = (seg.samples[i + 1].mat() - w0) / h;
            const double ang = detail::poisson_angle(s0, s0 + h, x, y);
            const double lg = detail::poisson_log(s0, s0 + h, x, y);
            out += inv_pi * (ang * (w0 + (x - s0) * slope) + (y * lg) * slope);
        }
    }
    Hermitian p(out);
    // Slack scales with max(mass, ||P||): Poisson values near atoms dwarf the
    // total mass and rounding scales with the value, not the mass.
    const double slack = static_cast<double>(m.dim()) * Tolerances{}.eig_residual *
                         std::max(m.total_mass(), operator_norm(p));
    return detail::clamp_psd(p, slack, "poisson_extension");
}

/// Scalar Poisson extension mu(z) = pi^{-1} Im Cmu(z) >= 0.
inline double poisson_value(const ScalarMeasure& m, Complex z) {
    detail::require_upper_half_plane(z);
    const double x = z.real(), y = z.imag();
    constexpr double inv_pi = 0.3183098861837906715;
    double out = 0.0;
    for (const auto& a : m.atoms()) {
        const double dx = a.location - x;
        out += inv_pi * y * a.mass / (dx * dx + y * y);
    }
    for (const auto& seg : m.ac_segments()) {
        const double h = (seg.hi - seg.lo) / static_cast<double>(seg.samples.size() - 1);
        for (std::size_t i = 0; i + 1 < seg.samples.size(); ++i) {
            const double s0 = seg.lo + h * static_cast<double>(i);
            const double w0 = seg.samples[i];
            const double slope = (seg.samples[i + 1] - w0) / h;
            const double ang = detail::poisson_angle(s0, s0 + h, x, y);
            const double lg = detail::poisson_log(s0, s0 + h, x, y);
            out += inv_pi * (ang * (w0 + (x - s0) * slope) + y * lg * slope);
        }
    }
    return out;
}

/// mu = tr M: atom weights and density samples replaced by their traces.
inline ScalarMeasure trace_measure(const MatrixMeasure& m, const Tolerances& tol = {}) {
    std::vector<ScalarAtom> atoms;
    atoms.reserve(m.atoms().size());
    for (const auto& a : m.atoms())
        atoms.push_back({a.location, a.weight.mat().real().trace()});
    std::vector<ScalarDensitySegment> ac;
    ac.reserve(m.ac_segments().size());
    for (const auto& seg : m.ac_segments()) {
        ScalarDensitySegment s{seg.lo, seg.hi, {}};
        s.samples.reserve(seg.samples.size());
        for (const auto& d : seg.samples) s.samples.push_back(d.mat().real().trace());
        ac.push_back(std::move(s));
    }
    return ScalarMeasure(std::move(atoms), std::move(ac), tol);
}

/// The unique atom within atom_merge of x; none when zero or several match.
inline std::optional<MatrixAtom> atom_at(const MatrixMeasure& m, double x,
                                         const Tolerances& tol = {}) {
    std::optional<MatrixAtom> found;
    for (const auto& a : m.atoms()) {
        if (std::abs(a.location - x) <= tol.atom_merge) {
            if (found) return std::nullopt;  // not unique
            found = a;
        }
    }
    return found;
}

inline std::optional<ScalarAtom> atom_at(const ScalarMeasure& m, double x,
                                         const Tolerances& tol = {}) {
    std::optional<ScalarAtom> found;
    for (const auto& a : m.atoms()) {
        if (std::abs(a.location - x) <= tol.atom_merge) {
            if (found) return std::nullopt;
            found = a;
        }
    }
    return found;
}

}  // namespace finrank
