#pragma once

/**
 * @file lsmc.hpp
 * @brief Least-squares Monte Carlo solution of the adjoint BSDE on
 *        indicator (hypercube / Voronoi) bases.
 *
 * With indicator bases the least-squares coefficient of a cell is the sample
 * mean of the target over the paths in that cell, so each regression is O(L).
 *
 * Backward sweep for n = N-1 .. 0, on the paths' states y_n:
 *   Q_n = E[ dW_{n+1} P_{n+1} / dt | y_n ]
 *   P_n = E[ P_{n+1} + f(t_n, y_n, P_{n+1}, Q_n, u_n) dt | y_n ]
 * with f = h_y + p b_y + q sigma_y (+ mu for the shifted BSDE).
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scgp/error.hpp"
#include "scgp/grid.hpp"
#include "scgp/paths.hpp"
#include "scgp/problems.hpp"

namespace scgp {

enum class BasisKind { Hypercube, Voronoi };

enum class RegressionTarget { P, Q };

/// How the Q regression treats the constant part of P_{n+1} within a cell.
enum class QEstimator {
    /// Cell mean of dW (P_{n+1} - mean_cell P_{n+1}) / dt. Uses E[dW | y_n] = 0,
    /// so adding any cell-constant to P_{n+1} leaves Q unchanged.
    Centered,
    /// Cell mean of dW P_{n+1} / dt, the raw target.
    Raw,
};

struct BasisSpec {
    BasisKind kind = BasisKind::Voronoi;
    std::size_t cells = 16;    // K, P-regression
    std::size_t q_cells = 16;  // K~, Q-regression
    QEstimator q_estimator = QEstimator::Centered;
    /// Hypercube sizing by edge length tau = tau_scale * dt^{3/2} instead of a fixed K.
    bool tau_rule = false;
    double tau_scale = 1.0;
    std::size_t max_cells = 4096;

    [[nodiscard]] std::size_t cells_for(RegressionTarget which) const {
        return which == RegressionTarget::P ? cells : q_cells;
    }
};

inline const char* to_string(BasisKind k) { return k == BasisKind::Hypercube ? "HC" : "VP"; }

class Partition {
public:
    /// Single cell covering the real line.
    static Partition single(BasisKind kind) {
        Partition p;
        p.kind_ = kind;
        p.cells_ = 1;
        return p;
    }

    static Partition hypercube(double lo, double hi, std::size_t cells) {
        if (cells < 1) throw ConfigError("partition needs at least one cell");
        if (!(hi > lo) || cells == 1) return single(BasisKind::Hypercube);
        Partition p;
        p.kind_ = BasisKind::Hypercube;
        p.cells_ = cells;
        p.lo_ = lo;
        p.hi_ = hi;
        p.width_ = (hi - lo) / static_cast<double>(cells);
        return p;
    }

    /// Nearest-centre cells; centres must be sorted ascending.
    static Partition voronoi(std::vector<double> centers) {
        if (centers.empty()) throw ConfigError("partition needs at least one cell");
        if (centers.size() == 1) return single(BasisKind::Voronoi);
        Partition p;
        p.kind_ = BasisKind::Voronoi;
        p.cells_ = centers.size();
        p.midpoints_.resize(centers.size() - 1);
        for (std::size_t k = 0; k + 1 < centers.size(); ++k) {
            p.midpoints_[k] = 0.5 * (centers[k] + centers[k + 1]);
        }
        p.centers_ = std::move(centers);
        return p;
    }

    [[nodiscard]] BasisKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t cells() const noexcept { return cells_; }
    [[nodiscard]] std::span<const double> centers() const noexcept { return centers_; }
    [[nodiscard]] double lo() const noexcept { return lo_; }
    [[nodiscard]] double hi() const noexcept { return hi_; }
    [[nodiscard]] double width() const noexcept { return width_; }

    [[nodiscard]] std::size_t locate(double y) const noexcept {
        if (cells_ == 1) return 0;
        if (kind_ == BasisKind::Hypercube) {
            if (!(y > lo_)) return 0;
            const auto k = static_cast<std::size_t>((y - lo_) / width_);
            return std::min(k, cells_ - 1);
        }
        // number of midpoints strictly below y; ties go to the lower centre
        return static_cast<std::size_t>(
            std::lower_bound(midpoints_.begin(), midpoints_.end(), y) - midpoints_.begin());
    }

    [[nodiscard]] std::vector<std::uint32_t> assign(std::span<const double> samples) const {
        std::vector<std::uint32_t> out(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            out[i] = static_cast<std::uint32_t>(locate(samples[i]));
        }
        return out;
    }

private:
    BasisKind kind_ = BasisKind::Hypercube;
    std::size_t cells_ = 1;
    double lo_ = 0.0;
    double hi_ = 0.0;
    double width_ = 0.0;
    std::vector<double> centers_;
    std::vector<double> midpoints_;
};

/// Linear-interpolated empirical quantile of sorted data (type 7).
inline double sorted_quantile(std::span<const double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Partition of the sample range for one time step.
/// Hypercube: K equal cells on [min, max]. Voronoi: centres at the k/(K+1)
/// sample quantiles. A degenerate sample collapses to a single cell.
inline Partition build_partition(std::span<const double> samples, const BasisSpec& spec,
                                 RegressionTarget which, double dt = 0.0) {
    if (samples.empty()) throw ConfigError("cannot partition an empty sample");
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *mn;
    const double hi = *mx;
    if (!(hi > lo)) return Partition::single(spec.kind);

    std::size_t K = spec.cells_for(which);
    if (spec.kind == BasisKind::Hypercube && spec.tau_rule && dt > 0.0) {
        const double tau = spec.tau_scale * std::pow(dt, 1.5);
        K = static_cast<std::size_t>(std::ceil((hi - lo) / tau));
        K = std::clamp<std::size_t>(K, 1, spec.max_cells);
    }
    if (K < 1) throw ConfigError("basis needs at least one cell");
    if (spec.kind == BasisKind::Hypercube) return Partition::hypercube(lo, hi, K);

    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> centers(K);
    for (std::size_t k = 1; k <= K; ++k) {
        centers[k - 1] = sorted_quantile(sorted, static_cast<double>(k) / static_cast<double>(K + 1));
    }
    return Partition::voronoi(std::move(centers));
}

struct CellFit {
    std::vector<double> coefficients;  // per cell; 0 for empty cells
    std::vector<std::size_t> counts;
};

/// Per-cell sample mean of z given precomputed cell indices.
inline CellFit cell_means(std::size_t cells, std::span<const std::uint32_t> cell_of,
                          std::span<const double> z) {
    CellFit fit{std::vector<double>(cells, 0.0), std::vector<std::size_t>(cells, 0)};
    for (std::size_t i = 0; i < z.size(); ++i) {
        fit.coefficients[cell_of[i]] += z[i];
        ++fit.counts[cell_of[i]];
    }
    for (std::size_t c = 0; c < cells; ++c) {
        if (fit.counts[c]) fit.coefficients[c] /= static_cast<double>(fit.counts[c]);
    }
    return fit;
}

struct Regression {
    CellFit fit;
    std::vector<double> fitted;
};

/// Least squares of z on the indicator basis of `partition`, evaluated at x.
inline Regression regress(const Partition& partition, std::span<const double> x,
                          std::span<const double> z) {
    if (x.size() != z.size()) throw GridMismatch("regress: x and z differ in length");
    const auto cell_of = partition.assign(x);
    Regression r{cell_means(partition.cells(), cell_of, z), std::vector<double>(x.size())};
    for (std::size_t i = 0; i < x.size(); ++i) r.fitted[i] = r.fit.coefficients[cell_of[i]];
    return r;
}

class BsdeSolution {
public:
    BsdeSolution(TimeGrid grid, std::size_t paths)
        : grid_(grid),
          paths_(paths),
          p_((grid.steps() + 1) * paths, 0.0),
          q_(grid.steps() * paths, 0.0),
          p_partitions_(grid.steps(), Partition::single(BasisKind::Hypercube)),
          q_partitions_(grid.steps(), Partition::single(BasisKind::Hypercube)),
          p_coefficients_(grid.steps()),
          q_coefficients_(grid.steps()) {}

    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t paths() const noexcept { return paths_; }

    /// P^ on path lambda at node n (n = 0..N).
    [[nodiscard]] double p(std::size_t lambda, std::size_t n) const { return p_[n * paths_ + lambda]; }
    /// Q^ on path lambda at node n (n = 0..N-1).
    [[nodiscard]] double q(std::size_t lambda, std::size_t n) const { return q_[n * paths_ + lambda]; }

    [[nodiscard]] std::span<const double> p_step(std::size_t n) const {
        return {p_.data() + n * paths_, paths_};
    }
    [[nodiscard]] std::span<const double> q_step(std::size_t n) const {
        return {q_.data() + n * paths_, paths_};
    }
    std::span<double> p_step(std::size_t n) { return {p_.data() + n * paths_, paths_}; }
    std::span<double> q_step(std::size_t n) { return {q_.data() + n * paths_, paths_}; }

    [[nodiscard]] const Partition& p_partition(std::size_t n) const { return p_partitions_[n]; }
    [[nodiscard]] const Partition& q_partition(std::size_t n) const { return q_partitions_[n]; }
    [[nodiscard]] const std::vector<double>& p_coefficients(std::size_t n) const {
        return p_coefficients_[n];
    }
    [[nodiscard]] const std::vector<double>& q_coefficients(std::size_t n) const {
        return q_coefficients_[n];
    }

    void set_step_metadata(std::size_t n, Partition pp, Partition qp, std::vector<double> pc,
                           std::vector<double> qc) {
        p_partitions_[n] = std::move(pp);
        q_partitions_[n] = std::move(qp);
        p_coefficients_[n] = std::move(pc);
        q_coefficients_[n] = std::move(qc);
    }

private:
    TimeGrid grid_;
    std::size_t paths_;
    std::vector<double> p_;
    std::vector<double> q_;
    std::vector<Partition> p_partitions_;
    std::vector<Partition> q_partitions_;
    std::vector<std::vector<double>> p_coefficients_;
    std::vector<std::vector<double>> q_coefficients_;
};

namespace detail {

inline void require_finite(std::span<const double> z, std::size_t n, const char* which) {
    for (const double v : z) {
        if (!std::isfinite(v)) {
            throw RegressionFailure(std::string("non-finite ") + which +
                                    " regression target at step " + std::to_string(n));
        }
    }
}

/// Backward sweep shared by the plain and multiplier-shifted BSDEs; the
/// driver is f^ + driver_shift.
inline BsdeSolution backward_sweep(const PathEnsemble& paths, const BrownianEnsemble& bw,
                                   const ProblemSpec& problem, const StepFunction& control,
                                   const BasisSpec& spec, double driver_shift) {
    require_same_grid(paths.grid(), bw.grid(), "solve_bsde");
    require_same_grid(paths.grid(), control.grid(), "solve_bsde");
    if (paths.paths() != bw.paths()) throw GridMismatch("solve_bsde: path counts differ");

    const auto& grid = paths.grid();
    const std::size_t N = grid.steps();
    const std::size_t L = paths.paths();
    const double dt = grid.dt();
    BsdeSolution sol(grid, L);

    {
        const auto yN = paths.step(N);
        auto pN = sol.p_step(N);
        for (std::size_t l = 0; l < L; ++l) pN[l] = problem.costs.g(yN[l]);
        detail::require_finite(pN, N, "terminal");
    }

    const bool shared = spec.cells == spec.q_cells;
    std::vector<double> zq(L);
    std::vector<double> zp(L);
    for (std::size_t n = N; n-- > 0;) {
        const double t = grid.node(n);
        const double u = control[n];
        const double by = problem.drift.b_y(t);
        const auto y = paths.step(n);
        const auto dw = bw.step(n);
        const auto p_next = sol.p_step(n + 1);

        Partition q_part = build_partition(y, spec, RegressionTarget::Q, dt);
        const auto q_cell = q_part.assign(y);
        if (spec.q_estimator == QEstimator::Centered) {
            const auto level = cell_means(q_part.cells(), q_cell, p_next);
            for (std::size_t l = 0; l < L; ++l) {
                zq[l] = dw[l] * (p_next[l] - level.coefficients[q_cell[l]]) / dt;
            }
        } else {
            for (std::size_t l = 0; l < L; ++l) zq[l] = dw[l] * p_next[l] / dt;
        }
        detail::require_finite(zq, n, "Q");
        auto q_fit = cell_means(q_part.cells(), q_cell, zq);
        auto qn = sol.q_step(n);
        for (std::size_t l = 0; l < L; ++l) qn[l] = q_fit.coefficients[q_cell[l]];

        const auto& sy = problem.diffusion.sigma_y;
        const auto& hy = problem.costs.h_y;
        for (std::size_t l = 0; l < L; ++l) {
            const double f = hy(t, y[l]) + p_next[l] * by + qn[l] * sy(y[l], u) + driver_shift;
            zp[l] = p_next[l] + f * dt;
        }
        detail::require_finite(zp, n, "P");

        Partition p_part = shared ? q_part : build_partition(y, spec, RegressionTarget::P, dt);
        const auto p_cell = shared ? q_cell : p_part.assign(y);
        auto p_fit = cell_means(p_part.cells(), p_cell, zp);
        auto pn = sol.p_step(n);
        for (std::size_t l = 0; l < L; ++l) pn[l] = p_fit.coefficients[p_cell[l]];

        sol.set_step_metadata(n, std::move(p_part), std::move(q_part), std::move(p_fit.coefficients),
                              std::move(q_fit.coefficients));
    }
    return sol;
}

}  // namespace detail

/// LSMC solution (P^, Q^) of the adjoint BSDE without the multiplier term.
inline BsdeSolution solve_bsde_hat(const PathEnsemble& paths, const BrownianEnsemble& bw,
                                   const ProblemSpec& problem, const StepFunction& control,
                                   const BasisSpec& spec) {
    return detail::backward_sweep(paths, bw, problem, control, spec, 0.0);
}

/// LSMC solution (P, Q) with driver f^ + mu. Satisfies P = P^ + mu psi and
/// Q = Q^ on shared paths (psi from solve_psi) when the Q target is centred.
inline BsdeSolution solve_bsde_full(const PathEnsemble& paths, const BrownianEnsemble& bw,
                                    const ProblemSpec& problem, const StepFunction& control,
                                    const BasisSpec& spec, double mu,
                                    std::span<const double> psi) {
    if (psi.size() != paths.grid().steps() + 1) throw GridMismatch("psi has the wrong length");
    return detail::backward_sweep(paths, bw, problem, control, spec, mu);
}

}  // namespace scgp
