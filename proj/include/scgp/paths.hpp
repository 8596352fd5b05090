#pragma once

/**
 * @file paths.hpp
 * @brief Seeded Brownian increments and forward Euler simulation.
 *
 * Both ensembles are stored time-major (all paths of step n are contiguous)
 * because the backward regression sweeps one time step at a time.
 */

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scgp/error.hpp"
#include "scgp/grid.hpp"
#include "scgp/problems.hpp"

namespace scgp {

/// SplitMix64 finaliser, used to derive independent sub-seeds.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class BrownianEnsemble {
public:
    BrownianEnsemble(TimeGrid grid, std::size_t paths, std::uint64_t seed,
                     std::vector<double> increments)
        : grid_(grid), paths_(paths), seed_(seed), increments_(std::move(increments)) {
        if (increments_.size() != paths_ * grid_.steps()) {
            throw GridMismatch("Brownian ensemble has the wrong number of increments");
        }
    }

    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t paths() const noexcept { return paths_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// Increment W(t_{n+1}) - W(t_n) of path lambda.
    [[nodiscard]] double operator()(std::size_t lambda, std::size_t n) const {
        return increments_[n * paths_ + lambda];
    }
    /// All L increments of step n.
    [[nodiscard]] std::span<const double> step(std::size_t n) const {
        return {increments_.data() + n * paths_, paths_};
    }
    [[nodiscard]] std::span<const double> raw() const noexcept { return increments_; }

private:
    TimeGrid grid_;
    std::size_t paths_;
    std::uint64_t seed_;
    std::vector<double> increments_;
};

/// L independent N(0, dt) increment paths. Path lambda draws from its own
/// mt19937_64 stream keyed by (seed, lambda), so it does not depend on L.
/// With `centered`, the cross-path mean of every step is subtracted so that
/// sum_l dW_{n+1}^l = 0 (first-moment matching).
inline BrownianEnsemble generate_brownian(std::uint64_t seed, std::size_t paths,
                                          const TimeGrid& grid, bool centered = false) {
    if (paths < 1) throw ConfigError("need at least one Brownian path");
    const std::size_t steps = grid.steps();
    const double scale = std::sqrt(grid.dt());
    std::vector<double> inc(paths * steps);
    for (std::size_t lambda = 0; lambda < paths; ++lambda) {
        const std::uint64_t key = mix_seed(seed, lambda);
        std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                          static_cast<std::uint32_t>(lambda)};
        std::mt19937_64 gen(seq);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t n = 0; n < steps; ++n) inc[n * paths + lambda] = scale * normal(gen);
    }
    if (centered) {
        for (std::size_t n = 0; n < steps; ++n) {
            const std::span<double> row(inc.data() + n * paths, paths);
            double mean = 0.0;
            for (const double w : row) mean += w;
            mean /= static_cast<double>(paths);
            for (double& w : row) w -= mean;
        }
    }
    return {grid, paths, seed, std::move(inc)};
}

class PathEnsemble {
public:
    PathEnsemble(TimeGrid grid, std::size_t paths)
        : grid_(grid), paths_(paths), states_((grid.steps() + 1) * paths, 0.0) {}

    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t paths() const noexcept { return paths_; }

    [[nodiscard]] double operator()(std::size_t lambda, std::size_t n) const {
        return states_[n * paths_ + lambda];
    }
    double& at(std::size_t lambda, std::size_t n) { return states_[n * paths_ + lambda]; }

    [[nodiscard]] std::span<const double> step(std::size_t n) const {
        return {states_.data() + n * paths_, paths_};
    }
    [[nodiscard]] std::span<double> step(std::size_t n) {
        return {states_.data() + n * paths_, paths_};
    }

    friend bool operator==(const PathEnsemble& a, const PathEnsemble& b) {
        return a.grid_ == b.grid_ && a.paths_ == b.paths_ && a.states_ == b.states_;
    }

private:
    TimeGrid grid_;
    std::size_t paths_;
    std::vector<double> states_;
};

/// y_{n+1} = y_n + b(y_n, u_n) dt + sigma(y_n, u_n) dW_{n+1}, path by path.
inline PathEnsemble euler_simulate(const ProblemSpec& problem, const StepFunction& control,
                                   const BrownianEnsemble& bw) {
    require_same_grid(control.grid(), bw.grid(), "euler_simulate");
    const auto& grid = bw.grid();
    const std::size_t L = bw.paths();
    const double dt = grid.dt();
    PathEnsemble out(grid, L);
    for (auto& y : out.step(0)) y = problem.y0;
    for (std::size_t n = 0; n < grid.steps(); ++n) {
        const double t = grid.node(n);
        const double u = control[n];
        const double by = problem.drift.b_y(t);
        const double bu_u_m = problem.drift.b_u(t) * u + problem.drift.m(t);
        const auto cur = out.step(n);
        const auto next = out.step(n + 1);
        const auto dw = bw.step(n);
        for (std::size_t lambda = 0; lambda < L; ++lambda) {
            const double y = cur[lambda];
            const double ynext = y + (by * y + bu_u_m) * dt + problem.diffusion.sigma(y, u) * dw[lambda];
            next[lambda] = ynext;
        }
        for (const double y : next) {
            if (!std::isfinite(y)) {
                throw SimulationBlowUp("non-finite state at step " + std::to_string(n + 1) +
                                       " of " + problem.name);
            }
        }
    }
    return out;
}

/// Cross-path sample mean at every node, summed in path order.
inline std::vector<double> nodal_means(const PathEnsemble& paths) {
    const std::size_t N = paths.grid().steps();
    std::vector<double> means(N + 1);
    const double inv = 1.0 / static_cast<double>(paths.paths());
    for (std::size_t n = 0; n <= N; ++n) {
        double s = 0.0;
        for (const double y : paths.step(n)) s += y;
        means[n] = s * inv;
    }
    return means;
}

/// Trapezoidal estimate of int_0^T E[y_t] dt.
inline double mean_state_integral(const PathEnsemble& paths) {
    const auto means = nodal_means(paths);
    return trapezoid(means, paths.grid());
}

/// One row per path, nodes as columns.
inline void write_paths_csv(std::ostream& os, const PathEnsemble& paths) {
    os.precision(17);
    for (std::size_t lambda = 0; lambda < paths.paths(); ++lambda) {
        for (std::size_t n = 0; n <= paths.grid().steps(); ++n) {
            if (n) os << ',';
            os << paths(lambda, n);
        }
        os << '\n';
    }
}

}  // namespace scgp
