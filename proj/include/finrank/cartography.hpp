#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "finrank/carrier.hpp"
#include "finrank/hermitian.hpp"
#include "finrank/parallel.hpp"
#include "finrank/perturbation.hpp"

namespace finrank {

/// A line alpha(t) = alpha0 + t * direction with direction in the open
/// positive-definite cone — the directions along which the extended
/// exceptional set meets the line in at most countably many points.
struct LineSpec {
    Hermitian alpha0;
    Hermitian direction;
    double t_min = 0.0;
    double t_max = 0.0;
    int resolution = 0;  ///< number of grid points

    void validate(const Tolerances& tol = {}) const {
        if (!(t_min < t_max)) throw std::invalid_argument("LineSpec: need t_min < t_max");
        if (resolution < 2) throw std::invalid_argument("LineSpec: resolution must be >= 2");
        if (alpha0.dim() != direction.dim())
            throw DimensionMismatch("LineSpec: alpha0/direction dimension mismatch");
        if (!is_positive_definite(direction, tol))
            throw NotPositiveDefinite("LineSpec: direction must be positive definite");
    }
};

/// An affine slice of H(d) spanned by m <= 3 directions, orthonormalized in
/// the Frobenius inner product at construction.
class SliceSpec {
  public:
    SliceSpec(Hermitian base, std::vector<Hermitian> axes,
              std::vector<std::pair<double, double>> ranges, std::vector<int> counts)
        : base_(std::move(base)), ranges_(std::move(ranges)), counts_(std::move(counts)) {
        const std::size_t m = axes.size();
        if (m < 1 || m > 3)
            throw std::invalid_argument("SliceSpec: need 1 <= m <= 3 axes");
        if (ranges_.size() != m || counts_.size() != m)
            throw std::invalid_argument("SliceSpec: ranges/counts must match axis count");
        for (std::size_t i = 0; i < m; ++i) {
            if (axes[i].dim() != base_.dim())
                throw DimensionMismatch("SliceSpec: axis dimension mismatch");
            if (!(ranges_[i].first < ranges_[i].second))
                throw std::invalid_argument("SliceSpec: empty axis range");
            if (counts_[i] < 2) throw std::invalid_argument("SliceSpec: need >= 2 grid points");
        }
        const auto frob = [](const Hermitian& x, const Hermitian& y) {
            return (x.mat().adjoint() * y.mat()).real().trace();
        };
        Eigen::MatrixXd gram(m, m);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) gram(i, j) = frob(axes[i], axes[j]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(m - 1);
        if (!(lo > 0.0) || hi / lo >= 1e8)
            throw std::invalid_argument("SliceSpec: axes not numerically independent");
        // Modified Gram-Schmidt in the Frobenius inner product.
        axes_.reserve(m);
        for (std::size_t i = 0; i < m; ++i) {
            Matrix v = axes[i].mat();
            for (const auto& prev : axes_) v -= frob(prev, Hermitian(v)) * prev.mat();
            const double norm = std::sqrt(frob(Hermitian(v), Hermitian(v)));
            axes_.emplace_back(v / norm);
        }
    }

    const Hermitian& base() const { return base_; }
    const std::vector<Hermitian>& axes() const { return axes_; }
    const std::vector<std::pair<double, double>>& ranges() const { return ranges_; }
    const std::vector<int>& counts() const { return counts_; }

    std::vector<double> axis_grid(std::size_t i) const {
        std::vector<double> g(static_cast<std::size_t>(counts_[i]));
        const double lo = ranges_[i].first, hi = ranges_[i].second;
        const double h = (hi - lo) / static_cast<double>(counts_[i] - 1);
        for (std::size_t k = 0; k < g.size(); ++k) g[k] = lo + h * static_cast<double>(k);
        return g;
    }

    Hermitian point(const std::vector<double>& coords) const {
        Matrix m = base_.mat();
        for (std::size_t i = 0; i < axes_.size(); ++i) m += coords[i] * axes_[i].mat();
        return Hermitian(m);
    }

  private:
    Hermitian base_;
    std::vector<Hermitian> axes_;
    std::vector<std::pair<double, double>> ranges_;
    std::vector<int> counts_;
};

struct DimensionEstimate {
    std::vector<double> scales;       ///< strictly decreasing
    std::vector<std::size_t> counts;  ///< occupied boxes, nondecreasing
    double slope = 0.0;               ///< least-squares fit of log N vs log 1/eps
    double r_squared = 0.0;
};

/// The finite intersection of the line with the extended exceptional set:
/// per nu-atom x, eigenvalue branches of A_{alpha(t)} are scanned on the
/// resolution grid for upward crossings of x and refined by bisection to
/// |lambda - x| <= 1e-11. Branches are monotone nondecreasing (direction is
/// positive definite), so each (branch, atom) pair contributes at most one
/// root; duplicates within 1e-9 in t are merged.
inline std::vector<double> line_exceptional_ts(const PerturbationModel& model,
                                               const LineSpec& line, const ScalarMeasure& nu,
                                               const Tolerances& tol = {}) {
    line.validate(tol);
    if (nu.has_ac_part())
        throw std::invalid_argument("line_exceptional_ts: nu must be atomic");
    if (nu.atoms().empty()) return {};
    const Matrix base = model.a().mat() +
                        model.b() * line.alpha0.mat() * model.b().adjoint();
    const Matrix step = model.b() * line.direction.mat() * model.b().adjoint();
    const auto branches_at = [&](double t) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(base + t * step, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success)
            throw EigensolverFailure("line_exceptional_ts: eigensolver failed");
        return RealVector(es.eigenvalues());
    };

    const int res = line.resolution;
    const double h = (line.t_max - line.t_min) / static_cast<double>(res - 1);
    std::vector<RealVector> grid(static_cast<std::size_t>(res));
    for (int i = 0; i < res; ++i)
        grid[static_cast<std::size_t>(i)] = branches_at(line.t_min + h * i);

    constexpr double kEigTol = 1e-11;
    std::vector<double> roots;
    for (const auto& atom : nu.atoms()) {
        const double x = atom.location;
        for (Eigen::Index k = 0; k < model.n(); ++k) {
            // Grid nodes that already sit on the atom count as roots.
            bool found = false;
            for (int i = 0; i < res && !found; ++i) {
                if (std::abs(grid[static_cast<std::size_t>(i)](k) - x) <= kEigTol) {
                    roots.push_back(line.t_min + h * i);
                    found = true;
                }
            }
            if (found) continue;
            for (int i = 0; i + 1 < res; ++i) {
                const double g0 = grid[static_cast<std::size_t>(i)](k) - x;
                const double g1 = grid[static_cast<std::size_t>(i + 1)](k) - x;
                if (!(g0 < 0.0 && g1 > 0.0)) continue;
                double lo = line.t_min + h * i, hi = lo + h;
                double t_root = 0.5 * (lo + hi);
                for (int it = 0; it < 200; ++it) {
                    t_root = 0.5 * (lo + hi);
                    const double g = branches_at(t_root)(k) - x;
                    if (std::abs(g) <= kEigTol) break;
                    if (g < 0.0)
                        lo = t_root;
                    else
                        hi = t_root;
                }
                roots.push_back(t_root);
                break;  // monotone branch: at most one crossing
            }
        }
    }
    std::sort(roots.begin(), roots.end());
    std::vector<double> merged;
    for (std::size_t i = 0; i < roots.size();) {
        std::size_t j = i + 1;
        double sum = roots[i];
        while (j < roots.size() && roots[j] - roots[j - 1] <= 1e-9) sum += roots[j++];
        merged.push_back(sum / static_cast<double>(j - i));
        i = j;
    }
    return merged;
}

struct SliceSweepResult {
    std::vector<int> shape;                            ///< grid counts per axis
    std::vector<std::vector<double>> axis_grids;       ///< coordinates per axis
    std::vector<std::uint8_t> flags;                   ///< row-major, last axis fastest
    std::vector<std::vector<double>> exceptional_points;
};

/// Evaluates in_extended_exceptional at every grid node of the slice.
/// Nodes are independent work items; the result is deterministic and
/// order-independent regardless of thread count.
inline SliceSweepResult slice_sweep(const PerturbationModel& model, const SliceSpec& slice,
                                    const ScalarMeasure& nu, const Tolerances& tol = {},
                                    unsigned threads = 0, int n = kDyadicDepth) {
    SliceSweepResult result;
    result.shape = slice.counts();
    const std::size_t m = result.shape.size();
    for (std::size_t i = 0; i < m; ++i) result.axis_grids.push_back(slice.axis_grid(i));
    std::size_t total = 1;
    for (int c : result.shape) total *= static_cast<std::size_t>(c);
    result.flags.assign(total, 0);

    parallel_for(
        total,
        [&](std::size_t idx) {
            std::vector<double> coords(m);
            std::size_t rem = idx;
            for (std::size_t i = m; i-- > 0;) {
                const std::size_t c = static_cast<std::size_t>(result.shape[i]);
                coords[i] = result.axis_grids[i][rem % c];
                rem /= c;
            }
            const Hermitian alpha = slice.point(coords);
            result.flags[idx] =
                in_extended_exceptional(model, alpha, nu, tol, n) ? 1 : 0;
        },
        threads);

    for (std::size_t idx = 0; idx < total; ++idx) {
        if (!result.flags[idx]) continue;
        std::vector<double> coords(m);
        std::size_t rem = idx;
        for (std::size_t i = m; i-- > 0;) {
            const std::size_t c = static_cast<std::size_t>(result.shape[i]);
            coords[i] = result.axis_grids[i][rem % c];
            rem /= c;
        }
        result.exceptional_points.push_back(std::move(coords));
    }
    return result;
}

/// Box-counting dimension estimate: occupied eps-boxes are counted on an
/// axis-aligned lattice anchored at the bounding-box corner (fixed anchor
/// removes nondeterminism; anchor sensitivity is reported in tests). The
/// smallest usable eps is the caller's duty: scales below twice the sweep
/// grid pitch saturate the count and the slope is meaningless.
inline DimensionEstimate box_counting_dimension(const std::vector<std::vector<double>>& points,
                                                std::vector<double> scales) {
    if (points.size() < 100)
        throw std::invalid_argument("box_counting_dimension: need >= 100 points");
    const std::size_t m = points.front().size();
    if (m < 1 || m > 3)
        throw std::invalid_argument("box_counting_dimension: need 1 <= m <= 3 coordinates");
    for (const auto& p : points)
        if (p.size() != m)
            throw std::invalid_argument("box_counting_dimension: inconsistent coordinate count");
    std::sort(scales.begin(), scales.end(), std::greater<double>());
    scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
    if (scales.size() < 4)
        throw std::invalid_argument("box_counting_dimension: need >= 4 distinct scales");
    for (double s : scales)
        if (!(s > 0.0)) throw std::invalid_argument("box_counting_dimension: scales must be > 0");
    if (scales.front() / scales.back() < 100.0 * (1.0 - 1e-9))
        throw std::invalid_argument("box_counting_dimension: scales must span >= 2 decades");

    std::array<double, 3> lo{}, hi{};
    for (std::size_t i = 0; i < m; ++i) {
        lo[i] = hi[i] = points.front()[i];
        for (const auto& p : points) {
            lo[i] = std::min(lo[i], p[i]);
            hi[i] = std::max(hi[i], p[i]);
        }
    }
    double extent = 0.0;
    for (std::size_t i = 0; i < m; ++i) extent = std::max(extent, hi[i] - lo[i]);
    if (extent == 0.0)
        throw DegenerateInput("box_counting_dimension: all points identical");

    DimensionEstimate est;
    est.scales = scales;
    est.counts.reserve(scales.size());
    for (double eps : scales) {
        if (extent / eps >= 2097150.0)
            throw std::invalid_argument("box_counting_dimension: scale too small for lattice");
        std::unordered_set<std::uint64_t> boxes;
        boxes.reserve(points.size());
        for (const auto& p : points) {
            std::uint64_t key = 0;
            for (std::size_t i = 0; i < m; ++i) {
                const auto idx =
                    static_cast<std::uint64_t>(std::floor((p[i] - lo[i]) / eps));
                key = (key << 21) | (idx & 0x1FFFFFu);
            }
            boxes.insert(key);
        }
        est.counts.push_back(boxes.size());
    }
    for (std::size_t i = 1; i < est.counts.size(); ++i)
        if (est.counts[i] < est.counts[i - 1])
            throw Error("box_counting_dimension: counts decreased at finer scale");

    const std::size_t k = scales.size();
    double sx = 0.0, sy = 0.0;
    std::vector<double> xs(k), ys(k);
    for (std::size_t i = 0; i < k; ++i) {
        xs[i] = std::log(1.0 / scales[i]);
        ys[i] = std::log(static_cast<double>(est.counts[i]));
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / static_cast<double>(k), my = sy / static_cast<double>(k);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    est.slope = sxy / sxx;
    est.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return est;
}

}  // namespace finrank
