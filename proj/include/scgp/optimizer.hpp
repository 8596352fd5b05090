#pragma once

/**
 * @file optimizer.hpp
 * @brief Gradient projection with an explicit multiplier for the expected
 *        integral state constraint.
 *
 * One iteration, starting from u = u^{i-1}:
 *   1. simulate y under u on the fixed Brownian ensemble
 *   2. psi and the LSMC adjoint (P^, Q^)
 *   3. u^ = u - rho_i J'(u)
 *   4. re-simulate under u^, I^ = trapezoid of the mean state
 *   5. varphi~ and I~ = trapezoid of varphi~
 *   6. mu = max(I^ - delta, 0) / (rho_i I~)
 *   7. u^{i} = u^ - rho_i mu psi b_u, stop when ||u^{i} - u^{i-1}||_inf <= eps0
 */

#include <chrono>
#include <cstdint>
#include <span>
#include <vector>

#include "scgp/error.hpp"
#include "scgp/grid.hpp"
#include "scgp/kernel.hpp"
#include "scgp/lsmc.hpp"
#include "scgp/paths.hpp"
#include "scgp/problems.hpp"

namespace scgp {

enum class StepSchedule { Constant, Harmonic };

struct SolveConfig {
    double rho = 0.1;
    StepSchedule schedule = StepSchedule::Constant;
    double eps0 = 1e-4;
    std::size_t max_iters = 500;
    std::size_t paths = 2000;
    BasisSpec basis{};
    std::uint64_t seed = 20240101;
    /// Subtract the cross-path mean of each Brownian step.
    bool center_increments = true;

    [[nodiscard]] double rho_at(std::size_t i) const {
        return schedule == StepSchedule::Harmonic ? rho / static_cast<double>(i) : rho;
    }

    void validate() const {
        if (!(rho > 0.0)) throw ConfigError("rho must be positive");
        if (!(eps0 > 0.0)) throw ConfigError("eps0 must be positive");
        if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
        if (paths < 1) throw ConfigError("need at least one path");
        if (basis.cells < 1 || basis.q_cells < 1) throw ConfigError("basis needs at least one cell");
    }
};

struct IterationRecord {
    std::size_t i = 0;
    double rho = 0.0;
    double mu = 0.0;
    double I_hat = 0.0;
    double I_tilde = 0.0;
    /// Integral of the mean state under u^{i-1}, i.e. the previous update.
    double I_previous = 0.0;
    double error = 0.0;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

struct SolveResult {
    StepFunction u_final;
    double mu_final = 0.0;
    std::size_t iterations = 0;
    std::vector<IterationRecord> history;
    bool converged = false;
    /// Integral of the mean state under u_final on the solve's ensemble.
    double state_integral = 0.0;
    double wall_time = 0.0;
};

/// J_N'(u)_n = mean_l [ P^_n b_u(t_n) + Q^_n sigma_u(y_n, u_n) ] + j_u(u_n).
inline StepFunction gradient(const StepFunction& control, const PathEnsemble& paths,
                             const BsdeSolution& adj, const ProblemSpec& problem) {
    require_same_grid(control.grid(), paths.grid(), "gradient");
    require_same_grid(control.grid(), adj.grid(), "gradient");
    if (paths.paths() != adj.paths()) throw GridMismatch("gradient: path counts differ");
    const auto& grid = control.grid();
    const std::size_t L = paths.paths();
    const double inv = 1.0 / static_cast<double>(L);
    StepFunction out(grid);
    for (std::size_t n = 0; n < grid.steps(); ++n) {
        const double u = control[n];
        const double bu = problem.drift.b_u(grid.node(n));
        const auto p = adj.p_step(n);
        double sum = 0.0;
        if (problem.diffusion.control_independent) {
            for (std::size_t l = 0; l < L; ++l) sum += p[l] * bu;
        } else {
            const auto q = adj.q_step(n);
            const auto y = paths.step(n);
            for (std::size_t l = 0; l < L; ++l) {
                sum += p[l] * bu + q[l] * problem.diffusion.sigma_u(y[l], u);
            }
        }
        out[n] = sum * inv + problem.costs.j_u(u);
    }
    return out;
}

inline double compute_multiplier(double I_hat, double delta, double I_tilde, double rho_i) {
    if (!(I_tilde > 0.0)) {
        throw DegenerateKernel("multiplier normaliser I~ must be positive (is b_u zero?)");
    }
    if (!(rho_i > 0.0)) throw ConfigError("step size must be positive");
    const double excess = I_hat - delta;
    return excess > 0.0 ? excess / (rho_i * I_tilde) : 0.0;
}

/// u_n = u^_n - rho_i mu psi_n b_u(t_n).
inline StepFunction project_update(const StepFunction& u_half, double mu, std::span<const double> psi,
                                   const TimeFn& b_u, double rho_i) {
    const auto& grid = u_half.grid();
    if (psi.size() != grid.steps() + 1) throw GridMismatch("psi has the wrong length");
    StepFunction out = u_half;
    if (mu == 0.0) return out;
    for (std::size_t n = 0; n < grid.steps(); ++n) {
        out[n] -= rho_i * mu * psi[n] * b_u(grid.node(n));
    }
    return out;
}

/// u^ = u - rho_i g.
inline StepFunction gradient_step(const StepFunction& u, const StepFunction& g, double rho_i) {
    require_same_grid(u.grid(), g.grid(), "gradient_step");
    StepFunction out = u;
    for (std::size_t n = 0; n < u.size(); ++n) out[n] -= rho_i * g[n];
    return out;
}

/// Gradient projection iteration on a fixed Brownian ensemble drawn from config.seed.
inline SolveResult solve(const ProblemSpec& problem, const SolveConfig& config,
                         const StepFunction& u0) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    const TimeGrid& grid = u0.grid();
    if (grid.horizon() != problem.horizon) throw GridMismatch("u0 grid horizon differs from problem");

    const auto bw = generate_brownian(config.seed, config.paths, grid, config.center_increments);
    const auto kernel = KernelSolution::solve(grid, problem.drift);
    const double I_tilde = kernel.varphi_integral();

    SolveResult result{u0, 0.0, 0, {}, false, 0.0, 0.0};
    StepFunction u = u0;
    for (std::size_t i = 1; i <= config.max_iters; ++i) {
        const double rho_i = config.rho_at(i);
        const auto paths = euler_simulate(problem, u, bw);
        const auto adj = solve_bsde_hat(paths, bw, problem, u, config.basis);
        const auto g = gradient(u, paths, adj, problem);
        const auto u_half = gradient_step(u, g, rho_i);

        const auto paths_half = euler_simulate(problem, u_half, bw);
        const double I_hat = mean_state_integral(paths_half);
        const double mu = compute_multiplier(I_hat, problem.delta, I_tilde, rho_i);
        auto u_next = project_update(u_half, mu, kernel.psi, problem.drift.b_u, rho_i);

        const double err = linf_dist(u_next, u);
        result.history.push_back(
            {i, rho_i, mu, I_hat, I_tilde, mean_state_integral(paths), err});
        result.mu_final = mu;
        result.iterations = i;
        u = std::move(u_next);
        if (err <= config.eps0) {
            result.converged = true;
            break;
        }
    }
    result.state_integral = mean_state_integral(euler_simulate(problem, u, bw));
    result.u_final = std::move(u);
    result.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

inline SolveResult solve(const ProblemSpec& problem, const SolveConfig& config, std::size_t steps) {
    return solve(problem, config, StepFunction(problem.grid(steps)));
}

/// Independent scalar solves; component k > 0 uses a seed derived from config.seed.
inline std::vector<SolveResult> solve_vector(const VectorProblem& vp, const SolveConfig& config,
                                             std::size_t steps) {
    std::vector<SolveResult> out;
    out.reserve(vp.components.size());
    for (std::size_t k = 0; k < vp.components.size(); ++k) {
        SolveConfig c = config;
        if (k > 0) c.seed = mix_seed(config.seed, 1000 + k);
        out.push_back(solve(vp.components[k], c, steps));
    }
    return out;
}

}  // namespace scgp
