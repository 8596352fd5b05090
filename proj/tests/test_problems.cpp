#include <cmath>

#include <gtest/gtest.h>

#include "scgp/optimizer.hpp"
#include "scgp/paths.hpp"
#include "scgp/problems.hpp"

using namespace scgp;

TEST(Example1, Deltas) {
    const auto vp = example1(5, 0.3, 0.1);
    const auto d = vp.deltas();
    ASSERT_EQ(d.size(), 5u);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(d[k], 5.0 / (12.0 * (k + 1.0)), 1e-15);
    const auto mu = vp.mu_stars();
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(mu[k], 0.3 / (k + 1.0), 1e-15);
}

TEST(Example1, ExactControl) {
    const auto vp = example1(5, 0.3, 0.1);
    EXPECT_DOUBLE_EQ((*vp.components[0].u_star)(0.0), 1.0);
    EXPECT_DOUBLE_EQ((*vp.components[3].u_star)(0.5), 0.75 / 4.0);
    EXPECT_EQ((*vp.components[4].u_star)(1.0), 0.0);
}

TEST(Example1, ZeroMultiplier) {
    for (double m : example1(3, 0.0, 0.1).mu_stars()) EXPECT_EQ(m, 0.0);
    EXPECT_THROW(example1(0, 0.3, 0.1), ConfigError);
    EXPECT_THROW(example1(2, -1.0, 0.1), ConfigError);
}

TEST(Example2, Values) {
    const auto p = example2(0.1);
    EXPECT_EQ(p.delta, 0.16543);
    EXPECT_NEAR((*p.u_star)(0.0), 1.0 / 1.01, 1e-15);
    EXPECT_NEAR((*p.u_star)(0.0), 0.990099, 1e-6);
    EXPECT_EQ((*p.u_star)(1.0), 0.0);
    EXPECT_EQ(*p.mu_star, 0.2);
    EXPECT_TRUE(p.diffusion.state_independent);
    EXPECT_FALSE(p.diffusion.control_independent);
    EXPECT_THROW(example2(0.0), ConfigError);
}

TEST(Example3, Values) {
    const auto p = example3(0.1, kExample3ActiveDelta);
    EXPECT_EQ(p.delta, 1.34150);
    EXPECT_FALSE(p.u_star.has_value());
    EXPECT_EQ(*p.mu_star, 1.0);
    EXPECT_EQ(p.y0, 1.0);
    EXPECT_TRUE(p.diffusion.control_independent);
    EXPECT_EQ(example3(0.1, 1.0).delta, 1.0);
    EXPECT_EQ(example3(0.1, 0.5).delta, 0.5);
    EXPECT_THROW(example3(0.0, 1.0), ConfigError);
}

TEST(Example3, QTermDropsFromGradient) {
    // with sigma_u = 0 any q leaves the gradient unchanged
    const auto p = example3(0.1, 1.0);
    const TimeGrid g(1.0, 4);
    const StepFunction u(g, 0.3);
    const auto bw = generate_brownian(1, 50, g);
    const auto paths = euler_simulate(p, u, bw);
    BsdeSolution a(g, 50);
    BsdeSolution b(g, 50);
    for (std::size_t n = 0; n < 4; ++n) {
        for (auto& q : b.q_step(n)) q = 123.0;
    }
    EXPECT_EQ(gradient(u, paths, a, p), gradient(u, paths, b, p));
}

TEST(Problems, AssumptionsHoldForBuiltins) {
    for (const auto& p : example1(5, 0.3, 0.1).components) {
        EXPECT_TRUE(assumption_violations(p).empty()) << p.name;
    }
    EXPECT_TRUE(assumption_violations(example2(0.1)).empty());
    EXPECT_TRUE(assumption_violations(example3(0.1, 1.0)).empty());
    EXPECT_TRUE(assumption_violations(zero_noise_problem()).empty());
}

TEST(Problems, AssumptionViolationsReported) {
    auto p = example2(0.1);
    p.drift.b_u = constant_fn(0.0);
    EXPECT_FALSE(assumption_violations(p).empty());
    auto q = example3(0.1, 1.0);
    q.diffusion.derivative_bound = 0.01;
    EXPECT_FALSE(assumption_violations(q).empty());
}

TEST(Problems, DeclaredDerivativesMatchFiniteDifferences) {
    EXPECT_LE(diffusion_derivative_mismatch(example2(0.1).diffusion), 1e-6);
    EXPECT_LE(diffusion_derivative_mismatch(example3(0.1, 1.0).diffusion), 1e-6);
    EXPECT_LE(diffusion_derivative_mismatch(example1(2, 0.3, 0.1).components[1].diffusion), 1e-6);

    auto wrong = example3(0.1, 1.0).diffusion;
    wrong.sigma_y = [](double, double) { return 0.0; };
    EXPECT_GT(diffusion_derivative_mismatch(wrong), 1e-3);
}

namespace {

// trapezoid of E[y] under u* with no noise contribution, as a fine-grid check of delta
double mean_integral_at_optimum(const ProblemSpec& p, std::size_t N, std::size_t L,
                                double* stderr_out) {
    const TimeGrid g = p.grid(N);
    const auto bw = generate_brownian(99, L, g);
    const auto paths = euler_simulate(p, nodal_sample(*p.u_star, g), bw);
    std::vector<double> per_path(L);
    for (std::size_t l = 0; l < L; ++l) {
        std::vector<double> y(N + 1);
        for (std::size_t n = 0; n <= N; ++n) y[n] = paths(l, n);
        per_path[l] = trapezoid(y, g);
    }
    double mean = 0.0;
    for (double v : per_path) mean += v;
    mean /= L;
    double var = 0.0;
    for (double v : per_path) var += (v - mean) * (v - mean);
    *stderr_out = std::sqrt(var / (L - 1) / L);
    return mean;
}

}  // namespace

TEST(Problems, DeltaIsIntegralOfMeanOptimalState) {
    const std::size_t N = 2000;
    for (const auto& p : {example2(0.1), example1(5, 0.3, 0.1).components[0],
                          example1(5, 0.3, 0.1).components[2]}) {
        double se = 0.0;
        const double I = mean_integral_at_optimum(p, N, 2000, &se);
        // O(dt) bias of the left-node Euler scheme plus 3 standard errors
        EXPECT_NEAR(I, p.delta, 3.0 * se + 2.0 / N) << p.name;
    }
}

TEST(Problems, ZeroNoiseProblem) {
    const auto p = zero_noise_problem();
    EXPECT_EQ((*p.u_star)(0.3), 1.0);
    EXPECT_EQ(p.diffusion.sigma(2.0, 3.0), 0.0);
    EXPECT_EQ(p.costs.j_u(1.0), 0.0);
}
