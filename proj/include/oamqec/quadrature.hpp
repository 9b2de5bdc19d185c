#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace oamqec {

struct IntegrationOptions {
    double rel_tol = 1e-6;
    double abs_tol = 1e-10;
    std::size_t max_evaluations = 50'000'000;

    /// Throws std::invalid_argument when both tolerances are non-positive or
    /// the evaluation budget is zero.
    void validate() const;
};

struct IntegrationResult {
    std::complex<double> value{};
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

template <std::size_t Dim>
using Point = std::array<double, Dim>;

/// A box integral of a complex integrand. The real and imaginary parts share
/// one subdivision tree.
template <std::size_t Dim>
struct IntegrationRequest {
    std::function<std::complex<double>(const Point<Dim>&)> integrand;
    Point<Dim> lower{};
    Point<Dim> upper{};
    IntegrationOptions options{};
};

/// Globally adaptive Gauss-Kronrod (7/15) integration on [lower, upper].
IntegrationResult integrate_1d(const IntegrationRequest<1>& req);

/// Globally adaptive Genz-Malik (degree 7 with embedded degree 5) cubature.
/// Deterministic: identical requests give bit-identical results.
IntegrationResult integrate_2d(const IntegrationRequest<2>& req);
IntegrationResult integrate_3d(const IntegrationRequest<3>& req);

/// Convenience overload for scalar 1-D integrands.
IntegrationResult integrate_1d(const std::function<std::complex<double>(double)>& f, double a,
                               double b, const IntegrationOptions& options = {});

struct VectorIntegrationResult {
    std::vector<double> values;
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

/// Adaptive Gauss-Kronrod for a real vector integrand sharing one subdivision.
/// The integrand writes `components` values into its output span. Convergence
/// is judged on the largest component error against max(abs_tol, rel_tol * max|value|).
VectorIntegrationResult integrate_1d_vector(
    const std::function<void(double, std::span<double>)>& integrand, std::size_t components,
    double a, double b, const IntegrationOptions& options = {});

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
GaussLegendreRule gauss_legendre(std::size_t n);

/// Composite Gauss-Legendre rule: `panels` equal panels on [a, b] with `order` nodes each.
GaussLegendreRule composite_gauss_legendre(double a, double b, std::size_t panels,
                                           std::size_t order);

}  // namespace oamqec
