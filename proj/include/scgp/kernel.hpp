#pragma once

/**
 * @file kernel.hpp
 * @brief Deterministic kernels of the projection step.
 *
 * psi solves -psi' = 1 + b_y psi, psi(T) = 0, and shifts the adjoint by mu psi.
 * varphi~ solves varphi~' = b_y varphi~ + b_u^2 psi, varphi~(0) = 0, and is the
 * mean-state response to a unit multiplier push. Its integral normalises mu.
 */

#include <cmath>
#include <span>
#include <vector>

#include "scgp/grid.hpp"
#include "scgp/problems.hpp"

namespace scgp {

/// psi_n = psi_{n+1} + (1 + psi_{n+1} b_y(t_n)) dt, psi_N = 0.
/// b_y is taken at the left node t_n so that p = p^ + mu psi holds exactly
/// for the explicit backward scheme.
inline std::vector<double> solve_psi(const TimeGrid& grid, const TimeFn& b_y) {
    const std::size_t N = grid.steps();
    const double dt = grid.dt();
    std::vector<double> psi(N + 1, 0.0);
    for (std::size_t n = N; n-- > 0;) {
        psi[n] = psi[n + 1] + (1.0 + psi[n + 1] * b_y(grid.node(n))) * dt;
    }
    return psi;
}

/// Textbook explicit variant with b_y(t_{n+1}); kept for comparison only.
inline std::vector<double> solve_psi_explicit(const TimeGrid& grid, const TimeFn& b_y) {
    const std::size_t N = grid.steps();
    const double dt = grid.dt();
    std::vector<double> psi(N + 1, 0.0);
    for (std::size_t n = N; n-- > 0;) {
        psi[n] = psi[n + 1] + (1.0 + psi[n + 1] * b_y(grid.node(n + 1))) * dt;
    }
    return psi;
}

/// varphi~_{n+1} = varphi~_n + (b_y(t_n) varphi~_n + b_u(t_n)^2 psi_n) dt, forward Euler.
inline std::vector<double> solve_varphi_tilde(const TimeGrid& grid, const TimeFn& b_y,
                                              const TimeFn& b_u, std::span<const double> psi) {
    const std::size_t N = grid.steps();
    if (psi.size() != N + 1) throw GridMismatch("psi has the wrong length for this grid");
    const double dt = grid.dt();
    std::vector<double> phi(N + 1, 0.0);
    for (std::size_t n = 0; n < N; ++n) {
        const double t = grid.node(n);
        const double bu = b_u(t);
        phi[n + 1] = phi[n] + (b_y(t) * phi[n] + bu * bu * psi[n]) * dt;
    }
    return phi;
}

/// Closed form of psi for constant b_y = c; c = 0 is the limit T - t.
inline double analytic_psi_constant(double c, double horizon, double t) {
    const double tau = horizon - t;
    if (c == 0.0) return tau;
    return std::expm1(c * tau) / c;
}

struct KernelSolution {
    TimeGrid grid;
    std::vector<double> psi;
    std::vector<double> varphi_tilde;

    static KernelSolution solve(const TimeGrid& grid, const LinearDrift& drift) {
        auto psi = solve_psi(grid, drift.b_y);
        auto phi = solve_varphi_tilde(grid, drift.b_y, drift.b_u, psi);
        return {grid, std::move(psi), std::move(phi)};
    }

    /// Trapezoid of varphi~ over all N + 1 nodes.
    [[nodiscard]] double varphi_integral() const { return trapezoid(varphi_tilde, grid); }
};

/// |int (psi b_u)^2 - int varphi~| with both integrals by the trapezoid rule.
/// The continuous kernels satisfy the identity exactly; the discrete residual is O(dt).
inline double kernel_identity_residual(const TimeGrid& grid, const TimeFn& b_y, const TimeFn& b_u) {
    const auto psi = solve_psi(grid, b_y);
    const auto phi = solve_varphi_tilde(grid, b_y, b_u, psi);
    std::vector<double> lhs(grid.steps() + 1);
    for (std::size_t n = 0; n <= grid.steps(); ++n) {
        const double v = psi[n] * b_u(grid.node(n));
        lhs[n] = v * v;
    }
    return std::abs(trapezoid(lhs, grid) - trapezoid(phi, grid));
}

}  // namespace scgp
