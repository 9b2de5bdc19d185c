#include <bit>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oamqec/quadrature.hpp"

using namespace oamqec;

namespace {

IntegrationRequest<3> cube(std::function<std::complex<double>(const Point<3>&)> f) {
    IntegrationRequest<3> req;
    req.integrand = std::move(f);
    req.lower = {0.0, 0.0, 0.0};
    req.upper = {1.0, 1.0, 1.0};
    return req;
}

TEST(Integrate3d, Constant) {
    const auto res = integrate_3d(cube([](const Point<3>&) { return 1.0; }));
    ASSERT_TRUE(res.converged);
    EXPECT_NEAR(res.value.real(), 1.0, 1e-14);
}

TEST(Integrate3d, SeparablePolynomial) {
    const auto res = integrate_3d(cube([](const Point<3>& x) { return x[0] * x[1] * x[2]; }));
    ASSERT_TRUE(res.converged);
    EXPECT_NEAR(res.value.real(), 0.125, 1e-12);
}

TEST(Integrate3d, TruncatedGaussianDisk) {
    IntegrationRequest<3> req;
    req.lower = {0.0, 0.0, 0.0};
    req.upper = {5.0, 2.0 * std::numbers::pi, 1.0};
    req.options.rel_tol = 1e-10;
    req.integrand = [](const Point<3>& x) { return std::exp(-x[0] * x[0]) * x[0]; };
    const auto res = integrate_3d(req);
    ASSERT_TRUE(res.converged);
    EXPECT_NEAR(res.value.real(), std::numbers::pi * (1.0 - std::exp(-25.0)), 1e-9);
}

TEST(Integrate3d, ComplexComponentsShareTree) {
    const auto res = integrate_3d(cube([](const Point<3>& x) {
        return std::complex<double>(std::cos(x[0] + x[1]), std::sin(x[2]));
    }));
    ASSERT_TRUE(res.converged);
    const double re = 2.0 * std::cos(1.0) - std::cos(2.0) - 1.0;  // int int cos(x+y)
    EXPECT_NEAR(res.value.real(), re, 1e-8);
    EXPECT_NEAR(res.value.imag(), 1.0 - std::cos(1.0), 1e-8);
}

TEST(Integrate3d, ConvergedImpliesBound) {
    auto req = cube([](const Point<3>& x) { return std::exp(-10.0 * (x[0] * x[1] + x[2])); });
    req.options.rel_tol = 1e-8;
    req.options.abs_tol = 0.0;
    const auto res = integrate_3d(req);
    ASSERT_TRUE(res.converged);
    EXPECT_LE(res.error_estimate, req.options.rel_tol * std::abs(res.value));
}

TEST(Integrate3d, BudgetExhaustion) {
    auto req = cube([](const Point<3>& x) { return 1.0 / std::sqrt(x[0] + 1e-12); });
    req.options.rel_tol = 1e-14;
    req.options.abs_tol = 0.0;
    req.options.max_evaluations = 2000;
    const auto res = integrate_3d(req);
    EXPECT_FALSE(res.converged);
    EXPECT_GT(res.value.real(), 1.0);
}

TEST(Integrate3d, Deterministic) {
    auto req = cube([](const Point<3>& x) { return std::exp(std::complex<double>(-x[0], 3.0 * x[1] * x[2])); });
    req.options.rel_tol = 1e-9;
    const auto a = integrate_3d(req);
    const auto b = integrate_3d(req);
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a.value.real()), std::bit_cast<std::uint64_t>(b.value.real()));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(a.value.imag()), std::bit_cast<std::uint64_t>(b.value.imag()));
    EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(Integrate3d, RefinementDoesNotIncreaseError) {
    auto f = [](const Point<3>& x) { return std::exp(-4.0 * (x[0] * x[0] + x[1] * x[1])) * std::cos(x[2]); };
    double prev = INFINITY;
    for (double tol = 1e-4; tol >= 1e-10; tol /= 2.0) {
        auto req = cube(f);
        req.options.rel_tol = tol;
        req.options.abs_tol = 0.0;
        const auto res = integrate_3d(req);
        ASSERT_TRUE(res.converged);
        EXPECT_LE(res.error_estimate, prev);
        prev = res.error_estimate;
    }
}

TEST(Integrate3d, Linearity) {
    auto f = [](const Point<3>& x) { return std::sin(3.0 * x[0]) * x[1]; };
    auto g = [](const Point<3>& x) { return std::exp(x[2] - x[0]); };
    const auto F = integrate_3d(cube(f));
    const auto G = integrate_3d(cube(g));
    const auto H = integrate_3d(cube([&](const Point<3>& x) { return 2.5 * f(x) - 0.7 * g(x); }));
    EXPECT_NEAR(std::abs(H.value - (2.5 * F.value - 0.7 * G.value)),
                0.0, 2.5 * F.error_estimate + 0.7 * G.error_estimate + H.error_estimate + 1e-12);
}

TEST(Integrate2d, Polynomial) {
    IntegrationRequest<2> req;
    req.lower = {-1.0, 0.0};
    req.upper = {1.0, 2.0};
    req.integrand = [](const Point<2>& x) { return x[0] * x[0] * x[1]; };
    const auto res = integrate_2d(req);
    EXPECT_NEAR(res.value.real(), 4.0 / 3.0, 1e-13);
}

TEST(Integrate1d, KinkAndOscillation) {
    IntegrationOptions opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 1e-13;
    const auto kink = integrate_1d([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, opts);
    ASSERT_TRUE(kink.converged);
    EXPECT_NEAR(kink.value.real(), 0.5 * (0.09 + 0.49), kink.error_estimate);
    EXPECT_LE(kink.error_estimate, 1e-12 * 0.29);
    const auto osc = integrate_1d([](double x) { return std::exp(std::complex<double>(0.0, 20.0 * x)); }, 0.0,
                                  std::numbers::pi, opts);
    EXPECT_NEAR(std::abs(osc.value), 0.0, 1e-12);
}

TEST(Integrate1dVector, SharedSubdivision) {
    const auto res = integrate_1d_vector(
        [](double x, std::span<double> out) {
            out[0] = 1.0;
            out[1] = std::cos(2.0 * x);
            out[2] = std::exp(-x);
        },
        3, 0.0, std::numbers::pi);
    ASSERT_TRUE(res.converged);
    EXPECT_NEAR(res.values[0], std::numbers::pi, 1e-12);
    EXPECT_NEAR(res.values[1], 0.0, 1e-12);
    EXPECT_NEAR(res.values[2], 1.0 - std::exp(-std::numbers::pi), 1e-12);
}

TEST(GaussLegendre, ExactForPolynomials) {
    for (std::size_t n : {1u, 2u, 5u, 16u}) {
        const auto rule = gauss_legendre(n);
        for (std::size_t deg = 0; deg < 2 * n; ++deg) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                s += rule.weights[i] * std::pow(rule.nodes[i], static_cast<double>(deg));
            }
            const double exact = deg % 2 == 1 ? 0.0 : 2.0 / static_cast<double>(deg + 1);
            EXPECT_NEAR(s, exact, 1e-14) << "n=" << n << " deg=" << deg;
        }
    }
}

TEST(GaussLegendre, Composite) {
    const auto rule = composite_gauss_legendre(0.0, 3.0, 4, 8);
    ASSERT_EQ(rule.nodes.size(), 32u);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        s += rule.weights[i] * std::exp(-rule.nodes[i]);
    }
    EXPECT_NEAR(s, 1.0 - std::exp(-3.0), 1e-14);
}

TEST(IntegrationOptions, Validation) {
    IntegrationOptions bad;
    bad.rel_tol = 0.0;
    bad.abs_tol = 0.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    IntegrationOptions none;
    none.max_evaluations = 0;
    EXPECT_THROW(none.validate(), std::invalid_argument);
}

}  // namespace
