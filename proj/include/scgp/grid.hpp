#pragma once

/**
 * @file grid.hpp
 * @brief Uniform time grids, piecewise-constant controls and the quadratures
 *        used to measure them.
 *
 * A StepFunction on a grid with N steps holds one coefficient per interval
 * I_n = [t_n, t_{n+1}); the last interval is closed at T.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "scgp/error.hpp"

namespace scgp {

using TimeFn = std::function<double(double)>;

class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw ConfigError("time grid horizon must be positive and finite");
        }
        if (steps < 2) {
            throw ConfigError("time grid needs at least 2 steps, got " + std::to_string(steps));
        }
        dt_ = horizon_ / static_cast<double>(steps_);
    }

    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }

    /// t_n = n * dt, with t_N pinned to T exactly.
    [[nodiscard]] double node(std::size_t n) const noexcept {
        return n == steps_ ? horizon_ : static_cast<double>(n) * dt_;
    }

    [[nodiscard]] std::vector<double> nodes() const {
        std::vector<double> out(steps_ + 1);
        for (std::size_t n = 0; n <= steps_; ++n) out[n] = node(n);
        return out;
    }

    /// Index of the interval containing t; t outside [0, T] is clamped.
    [[nodiscard]] std::size_t interval_of(double t) const noexcept {
        if (t <= 0.0) return 0;
        auto n = static_cast<std::size_t>(std::floor(t / dt_));
        // t_{n} may round just above t when t sits on a node
        if (n < steps_ && node(n) > t) --n;
        return std::min(n, steps_ - 1);
    }

    friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
        return a.horizon_ == b.horizon_ && a.steps_ == b.steps_;
    }

private:
    double horizon_;
    std::size_t steps_;
    double dt_{};
};

inline void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
    if (!(a == b)) {
        throw GridMismatch(std::string(what) + ": grids differ (N=" + std::to_string(a.steps()) +
                           " vs N=" + std::to_string(b.steps()) + ")");
    }
}

class StepFunction {
public:
    explicit StepFunction(TimeGrid grid, double fill = 0.0)
        : grid_(grid), values_(grid.steps(), fill) {}

    StepFunction(TimeGrid grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.steps()) {
            throw GridMismatch("step function needs " + std::to_string(grid_.steps()) +
                               " coefficients, got " + std::to_string(values_.size()));
        }
    }

    [[nodiscard]] const TimeGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }

    double& operator[](std::size_t n) { return values_[n]; }
    double operator[](std::size_t n) const { return values_[n]; }

    /// Evaluate at time t (right-closed on the final interval).
    [[nodiscard]] double operator()(double t) const { return values_[grid_.interval_of(t)]; }

    friend bool operator==(const StepFunction& a, const StepFunction& b) {
        return a.grid_ == b.grid_ && a.values_ == b.values_;
    }

private:
    TimeGrid grid_;
    std::vector<double> values_;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule gauss_legendre(std::size_t order) {
    if (order < 1) throw ConfigError("Gauss-Legendre order must be >= 1");
    GaussRule rule{std::vector<double>(order), std::vector<double>(order)};
    const auto q = static_cast<double>(order);
    for (std::size_t i = 0; i < (order + 1) / 2; ++i) {
        // Tricomi initial guess, then Newton on P_q
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (q + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= order; ++k) {
                const auto kk = static_cast<double>(k);
                const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            dp = q * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
    return rule;
}

/// Integral of f over [a, b] with a q-point Gauss-Legendre rule.
inline double gauss_integrate(const TimeFn& f, double a, double b, const GaussRule& rule) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    double sum = 0.0;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        sum += rule.weights[k] * f(mid + half * rule.nodes[k]);
    }
    return half * sum;
}

/// Left-endpoint sampling: beta_n = f(t_n). This is the projection used by
/// the iteration itself.
inline StepFunction nodal_sample(const TimeFn& f, const TimeGrid& grid) {
    StepFunction out(grid);
    for (std::size_t n = 0; n < grid.steps(); ++n) out[n] = f(grid.node(n));
    return out;
}

/// Exact L2 projection onto step functions (interval averages).
inline StepFunction l2_project(const TimeFn& f, const TimeGrid& grid, std::size_t order = 5) {
    if (order < 2) throw ConfigError("l2_project needs quadrature order >= 2");
    const auto rule = gauss_legendre(order);
    StepFunction out(grid);
    for (std::size_t n = 0; n < grid.steps(); ++n) {
        out[n] = gauss_integrate(f, grid.node(n), grid.node(n + 1), rule) / grid.dt();
    }
    return out;
}

inline double linf_dist(const StepFunction& u, const StepFunction& v) {
    require_same_grid(u.grid(), v.grid(), "linf_dist");
    double worst = 0.0;
    for (std::size_t n = 0; n < u.size(); ++n) worst = std::max(worst, std::abs(u[n] - v[n]));
    return worst;
}

/// ||f - u||_{L2(0,T)} with per-interval Gauss-Legendre quadrature.
inline double l2_dist_to_function(const StepFunction& u, const TimeFn& f, std::size_t order = 5) {
    if (order < 3) throw ConfigError("l2_dist_to_function needs quadrature order >= 3");
    const auto rule = gauss_legendre(order);
    const auto& grid = u.grid();
    double sum = 0.0;
    for (std::size_t n = 0; n < grid.steps(); ++n) {
        const double beta = u[n];
        sum += gauss_integrate(
            [&](double t) {
                const double d = f(t) - beta;
                return d * d;
            },
            grid.node(n), grid.node(n + 1), rule);
    }
    return std::sqrt(sum);
}

/// Discrete L2 distance on the nodes: sqrt(dt * sum_n (beta_n - f(t_n))^2).
inline double l2_nodal_dist(const StepFunction& u, const TimeFn& f) {
    const auto& grid = u.grid();
    double sum = 0.0;
    for (std::size_t n = 0; n < grid.steps(); ++n) {
        const double d = u[n] - f(grid.node(n));
        sum += d * d;
    }
    return std::sqrt(grid.dt() * sum);
}

/// Composite trapezoid of nodal values x_0..x_N.
inline double trapezoid(std::span<const double> x, const TimeGrid& grid) {
    if (x.size() != grid.steps() + 1) {
        throw GridMismatch("trapezoid needs " + std::to_string(grid.steps() + 1) +
                           " nodal values, got " + std::to_string(x.size()));
    }
    double sum = 0.5 * (x.front() + x.back());
    for (std::size_t n = 1; n + 1 < x.size(); ++n) sum += x[n];
    return grid.dt() * sum;
}

}  // namespace scgp
