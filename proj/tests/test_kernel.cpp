#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "scgp/kernel.hpp"

using namespace scgp;

TEST(Psi, ZeroDrift) {
    const auto psi = solve_psi(TimeGrid(1.0, 4), constant_fn(0.0));
    const std::vector<double> expect{1, 0.75, 0.5, 0.25, 0};
    for (std::size_t n = 0; n <= 4; ++n) EXPECT_NEAR(psi[n], expect[n], 1e-15);
}

TEST(Psi, TwoStepHandRecursion) {
    const auto psi = solve_psi(TimeGrid(1.0, 2), constant_fn(1.0));
    EXPECT_EQ(psi[2], 0.0);
    EXPECT_EQ(psi[1], 0.5);
    EXPECT_EQ(psi[0], 1.25);
}

TEST(Psi, UnitDriftConvergesToClosedForm) {
    const double e1 = std::numbers::e - 1.0;
    double prev = 0.0;
    for (std::size_t N : {64, 128, 256}) {
        const auto psi = solve_psi(TimeGrid(1.0, N), constant_fn(1.0));
        const double err = std::abs(psi[0] - e1);
        if (N == 64) { EXPECT_LE(err, 0.05); }
        if (prev > 0.0) { EXPECT_NEAR(prev / err, 2.0, 0.15); }
        prev = err;
    }
}

TEST(Psi, ExplicitVariantAgreesToFirstOrder) {
    const TimeFn by = [](double t) { return std::sin(3.0 * t); };
    double prev = 0.0;
    for (std::size_t N : {32, 64, 128, 256}) {
        const TimeGrid g(1.0, N);
        const auto a = solve_psi(g, by);
        const auto b = solve_psi_explicit(g, by);
        double worst = 0.0;
        for (std::size_t n = 0; n <= N; ++n) worst = std::max(worst, std::abs(a[n] - b[n]));
        EXPECT_LE(worst, 2.0 * g.dt());
        if (prev > 0.0) { EXPECT_NEAR(prev / worst, 2.0, 0.3); }
        prev = worst;
    }
}

TEST(PsiProperties, NonnegativeAndNonincreasing) {
    for (const TimeFn& by : {constant_fn(0.0), constant_fn(1.0), constant_fn(-0.9),
                             TimeFn([](double t) { return 1.0 - 2.0 * t; })}) {
        const TimeGrid g(1.0, 40);
        const auto psi = solve_psi(g, by);
        for (std::size_t n = 0; n <= 40; ++n) {
            EXPECT_GE(psi[n], 0.0);
            if (n) { EXPECT_LE(psi[n], psi[n - 1]); }
        }
    }
}

TEST(PsiProperties, NodalErrorIsFirstOrder) {
    std::vector<double> errs;
    for (std::size_t N : {16, 32, 64, 128}) {
        const TimeGrid g(1.0, N);
        const auto psi = solve_psi(g, constant_fn(1.0));
        double worst = 0.0;
        for (std::size_t n = 0; n <= N; ++n) {
            worst = std::max(worst, std::abs(psi[n] - analytic_psi_constant(1.0, 1.0, g.node(n))));
        }
        errs.push_back(worst);
        EXPECT_LE(worst, 1.5 * g.dt());
    }
    for (std::size_t k = 1; k < errs.size(); ++k) EXPECT_NEAR(errs[k - 1] / errs[k], 2.0, 0.2);
}

TEST(VarphiTilde, ZeroControlCoefficient) {
    const TimeGrid g(1.0, 8);
    const auto psi = solve_psi(g, constant_fn(1.0));
    for (double v : solve_varphi_tilde(g, constant_fn(1.0), constant_fn(0.0), psi)) EXPECT_EQ(v, 0.0);
}

TEST(VarphiTilde, HandRecursion) {
    const TimeGrid g(1.0, 2);
    const std::vector<double> psi{1, 0.5, 0};
    const auto phi = solve_varphi_tilde(g, constant_fn(0.0), constant_fn(1.0), psi);
    EXPECT_EQ(phi, (std::vector<double>{0, 0.5, 0.75}));
    EXPECT_THROW(solve_varphi_tilde(TimeGrid(1.0, 3), constant_fn(0.0), constant_fn(1.0), psi),
                 GridMismatch);
}

TEST(VarphiTilde, IntegralTendsToOneThird) {
    double prev = 0.0;
    for (std::size_t N : {32, 64, 128, 256}) {
        const auto k = KernelSolution::solve(TimeGrid(1.0, N),
                                             LinearDrift{constant_fn(0.0), constant_fn(1.0), constant_fn(0.0)});
        const double err = std::abs(k.varphi_integral() - 1.0 / 3.0);
        if (prev > 0.0) { EXPECT_NEAR(prev / err, 2.0, 0.15); }
        prev = err;
    }
    EXPECT_LE(prev, 0.01);
}

TEST(AnalyticPsi, Values) {
    EXPECT_EQ(analytic_psi_constant(0.0, 1.0, 0.25), 0.75);
    EXPECT_NEAR(analytic_psi_constant(1.0, 1.0, 0.0), std::numbers::e - 1.0, 1e-15);
    for (double c : {-2.0, 0.0, 0.5, 3.0}) EXPECT_EQ(analytic_psi_constant(c, 2.0, 2.0), 0.0);
    EXPECT_NEAR(analytic_psi_constant(1e-12, 1.0, 0.0), 1.0, 1e-11);
}

TEST(KernelIdentity, ZeroControlCoefficient) {
    EXPECT_EQ(kernel_identity_residual(TimeGrid(1.0, 16), constant_fn(1.0), constant_fn(0.0)), 0.0);
}

TEST(KernelIdentity, FirstOrderResidual) {
    for (const TimeFn& by : {constant_fn(0.0), constant_fn(1.0), TimeFn([](double t) { return std::cos(2 * t); })}) {
        double prev = 0.0;
        for (std::size_t N : {64, 128, 256, 512}) {
            const double r = kernel_identity_residual(TimeGrid(1.0, N), by, constant_fn(1.0));
            if (N == 512) { EXPECT_LE(r, 0.01); }
            if (prev > 0.0) { EXPECT_NEAR(prev / r, 2.0, 0.15); }
            prev = r;
        }
    }
}
