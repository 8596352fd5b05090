#pragma once

/**
 * @file problems.hpp
 * @brief Scalar state-constrained control problems with linear drift
 *
 *   dy = (b_y(t) y + b_u(t) u + m(t)) dt + sigma(y, u) dW,   y(0) = y0,
 *   J(u) = E[ int_0^T (h(t, y) + j(u)) dt + k(y_T) ],
 *   int_0^T E[y_t] dt <= delta.
 *
 * Only the derivatives h_y, j_u and g = k' enter the solver.
 */

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "scgp/error.hpp"
#include "scgp/grid.hpp"

namespace scgp {

using StateControlFn = std::function<double(double /*y*/, double /*u*/)>;

struct LinearDrift {
    TimeFn b_y;
    TimeFn b_u;
    TimeFn m;
    double lip_bound = 1.0;    // C_b >= |b_y| + |b_u|
    double lower_bound = 1.0;  // c_b <= |b_u|

    [[nodiscard]] double operator()(double t, double y, double u) const {
        return b_y(t) * y + b_u(t) * u + m(t);
    }
};

struct Diffusion {
    StateControlFn sigma;
    StateControlFn sigma_y;
    StateControlFn sigma_u;
    double derivative_bound = 0.0;  // C_sigma >= |sigma_y| + |sigma_u|
    /// sigma_y vanishes identically; enables the exact feasibility check.
    bool state_independent = false;
    /// sigma_u vanishes identically; the Q-term drops out of the gradient.
    bool control_independent = false;
};

struct CostDerivatives {
    std::function<double(double /*t*/, double /*y*/)> h_y;
    std::function<double(double /*u*/)> j_u;
    std::function<double(double /*y*/)> g;
};

struct ProblemSpec {
    std::string name;
    LinearDrift drift;
    Diffusion diffusion;
    CostDerivatives costs;
    double y0 = 0.0;
    double horizon = 1.0;
    double delta = 0.0;
    std::optional<TimeFn> u_star;
    std::optional<double> mu_star;

    [[nodiscard]] TimeGrid grid(std::size_t steps) const { return TimeGrid(horizon, steps); }
};

/// d independent scalar problems, each with its own Brownian driver.
struct VectorProblem {
    std::vector<ProblemSpec> components;

    [[nodiscard]] std::vector<double> deltas() const {
        std::vector<double> out;
        out.reserve(components.size());
        for (const auto& c : components) out.push_back(c.delta);
        return out;
    }
    [[nodiscard]] std::vector<double> mu_stars() const {
        std::vector<double> out;
        out.reserve(components.size());
        for (const auto& c : components) out.push_back(c.mu_star.value_or(0.0));
        return out;
    }
};

/// Control-independent constant diffusion sigma = alpha.
inline Diffusion additive_noise(double alpha) {
    return Diffusion{
        [alpha](double, double) { return alpha; },
        [](double, double) { return 0.0; },
        [](double, double) { return 0.0; },
        0.0,
        true,
        true,
    };
}

inline TimeFn constant_fn(double c) {
    return [c](double) { return c; };
}

/// Tracking problem in d decoupled components with dyn = u^n dt + alpha dW^n and
/// exact optimum u*_n(t) = (T^2 - t^2) / n, mu*_n = mu / n.
inline VectorProblem example1(std::size_t d, double mu, double alpha, double horizon = 1.0) {
    if (d < 1) throw ConfigError("example1 needs d >= 1");
    if (mu < 0.0) throw ConfigError("example1 needs a non-negative multiplier");
    const double T = horizon;
    auto y_d = [T, mu](double t) { return -t * t * t / 3.0 + (T * T + 2.0) * t + mu; };

    VectorProblem vp;
    for (std::size_t k = 1; k <= d; ++k) {
        const auto n = static_cast<double>(k);
        ProblemSpec p;
        p.name = "example1[" + std::to_string(k) + "]";
        p.drift = LinearDrift{constant_fn(0.0), constant_fn(1.0), constant_fn(0.0), 1.0, 1.0};
        p.diffusion = additive_noise(alpha);
        p.costs.h_y = [y_d, n](double t, double y) { return y - y_d(t) / n; };
        p.costs.j_u = [](double u) { return u; };
        p.costs.g = [](double) { return 0.0; };
        p.y0 = 0.0;
        p.horizon = T;
        p.delta = 5.0 * T * T * T * T / (12.0 * n);
        p.u_star = [T, n](double t) { return (T * T - t * t) / n; };
        p.mu_star = mu / n;
        vp.components.push_back(std::move(p));
    }
    return vp;
}

/// dy = (u - r) dt + alpha u dW with u* = (T - t)/(alpha^2 (T - t) + 1), r = u*/2, mu* = 0.2.
inline ProblemSpec example2(double alpha, double horizon = 1.0) {
    if (alpha == 0.0) throw ConfigError("example2 needs alpha != 0");
    const double T = horizon;
    const double a2 = alpha * alpha;
    const double mu = 0.2;
    auto u_star = [T, a2](double t) { return (T - t) / (a2 * (T - t) + 1.0); };
    auto y_d = [T, a2, mu](double t) {
        return t / (2.0 * a2) - std::log((a2 * T + 1.0) / (a2 * (T - t) + 1.0)) / (2.0 * a2 * a2) +
               1.0 + mu;
    };

    ProblemSpec p;
    p.name = "example2";
    p.drift = LinearDrift{constant_fn(0.0), constant_fn(1.0),
                          [u_star](double t) { return -0.5 * u_star(t); }, 1.0, 1.0};
    p.diffusion = Diffusion{
        [alpha](double, double u) { return alpha * u; },
        [](double, double) { return 0.0; },
        [alpha](double, double) { return alpha; },
        std::abs(alpha),
        true,
        false,
    };
    p.costs.h_y = [y_d](double t, double y) { return y - y_d(t); };
    p.costs.j_u = [](double u) { return u; };
    p.costs.g = [](double) { return 0.0; };
    p.y0 = 0.0;
    p.horizon = T;
    p.delta = 0.16543;
    p.u_star = u_star;
    p.mu_star = mu;
    return p;
}

/// dy = (u + y) dt + alpha sqrt(1 + y^2) dW, y0 = 1, tracking target 1 + mu*.
/// No closed-form control; mu* = 1 is the multiplier of the delta = 1.34150 case.
inline ProblemSpec example3(double alpha, double delta, double mu_star = 1.0, double horizon = 1.0) {
    if (alpha == 0.0) throw ConfigError("example3 needs alpha != 0");
    ProblemSpec p;
    p.name = "example3";
    p.drift = LinearDrift{constant_fn(1.0), constant_fn(1.0), constant_fn(0.0), 2.0, 1.0};
    p.diffusion = Diffusion{
        [alpha](double y, double) { return alpha * std::sqrt(1.0 + y * y); },
        [alpha](double y, double) { return alpha * y / std::sqrt(1.0 + y * y); },
        [](double, double) { return 0.0; },
        std::abs(alpha),
        false,
        true,
    };
    p.costs.h_y = [mu_star](double, double y) { return y - 1.0 - mu_star; };
    p.costs.j_u = [](double u) { return u; };
    p.costs.g = [](double) { return 0.0; };
    p.y0 = 1.0;
    p.horizon = horizon;
    p.delta = delta;
    p.mu_star = mu_star;
    return p;
}

inline constexpr double kExample3ActiveDelta = 1.34150;

/// Deterministic check problem: dy = u dt, only the control cost u - 1 acts and the
/// constraint never binds, so the iteration is the contraction u <- u - rho (u - 1).
inline ProblemSpec zero_noise_problem(double horizon = 1.0) {
    ProblemSpec p;
    p.name = "zero_noise";
    p.drift = LinearDrift{constant_fn(0.0), constant_fn(1.0), constant_fn(0.0), 1.0, 1.0};
    p.diffusion = additive_noise(0.0);
    p.costs.h_y = [](double, double) { return 0.0; };
    p.costs.j_u = [](double u) { return u - 1.0; };
    p.costs.g = [](double) { return 0.0; };
    p.horizon = horizon;
    p.delta = 1e6;
    p.u_star = constant_fn(1.0);
    p.mu_star = 0.0;
    return p;
}

/// Sampled check of the standing assumptions on [0, T] x [-box, box]^2.
/// Returns a human-readable list of violations (empty when none are found).
inline std::vector<std::string> assumption_violations(const ProblemSpec& p, double box = 5.0,
                                                      std::size_t samples = 257) {
    std::vector<std::string> out;
    if (!(p.horizon > 0.0)) out.emplace_back("horizon must be positive");
    if (!(p.drift.lower_bound > 0.0)) out.emplace_back("c_b must be positive");
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = p.horizon * static_cast<double>(k) / static_cast<double>(samples - 1);
        const double by = p.drift.b_y(t);
        const double bu = p.drift.b_u(t);
        if (std::abs(bu) < p.drift.lower_bound) {
            out.push_back("|b_u| < c_b at t=" + std::to_string(t));
            break;
        }
        if (std::abs(by) + std::abs(bu) > p.drift.lip_bound * (1.0 + 1e-12)) {
            out.push_back("|b_y| + |b_u| > C_b at t=" + std::to_string(t));
            break;
        }
    }
    std::mt19937_64 rng(0x5eedULL);
    std::uniform_real_distribution<double> coord(-box, box);
    for (std::size_t k = 0; k < samples; ++k) {
        const double y = coord(rng);
        const double u = coord(rng);
        const double s = std::abs(p.diffusion.sigma_y(y, u)) + std::abs(p.diffusion.sigma_u(y, u));
        if (s > p.diffusion.derivative_bound * (1.0 + 1e-12)) {
            out.push_back("|sigma_y| + |sigma_u| > C_sigma at (y,u)=(" + std::to_string(y) + "," +
                          std::to_string(u) + ")");
            break;
        }
    }
    return out;
}

/// Largest relative mismatch between the declared sigma derivatives and centred
/// finite differences of sigma at random points of [-box, box]^2.
inline double diffusion_derivative_mismatch(const Diffusion& d, double box = 3.0,
                                            std::size_t samples = 200,
                                            std::uint64_t seed = 7) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-box, box);
    double worst = 0.0;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    for (std::size_t k = 0; k < samples; ++k) {
        const double y = coord(rng);
        const double u = coord(rng);
        const double h = 1e-5;
        const double fd_y = (d.sigma(y + h, u) - d.sigma(y - h, u)) / (2.0 * h);
        const double fd_u = (d.sigma(y, u + h) - d.sigma(y, u - h)) / (2.0 * h);
        worst = std::max({worst, rel(fd_y, d.sigma_y(y, u)), rel(fd_u, d.sigma_u(y, u))});
    }
    return worst;
}

}  // namespace scgp
