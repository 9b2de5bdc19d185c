#include "oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <stdexcept>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_gamma.h>
#include <gsl/gsl_sf_laguerre.h>

namespace oamqec::oracle {

namespace {

using Fn = std::function<double(double)>;

double trampoline(double x, void* params) { return (*static_cast<const Fn*>(params))(x); }

struct Workspace {
    explicit Workspace(std::size_t n) : ptr(gsl_integration_workspace_alloc(n)) {}
    ~Workspace() { gsl_integration_workspace_free(ptr); }
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;
    gsl_integration_workspace* ptr;
};

constexpr std::size_t kLimit = 2000;

void check(int status, const char* where) {
    if (status != GSL_SUCCESS) {
        throw std::runtime_error(std::string("GSL integration failed in ") + where + ": " +
                                 gsl_strerror(status));
    }
}

double qag(const Fn& f, double a, double b, double abs_tol, double rel_tol, Workspace& ws,
           const char* where = "qag") {
    gsl_function g{&trampoline, const_cast<Fn*>(&f)};
    double result = 0.0;
    double err = 0.0;
    const int status = gsl_integration_qag(&g, a, b, abs_tol, rel_tol, kLimit, GSL_INTEG_GAUSS21,
                                           ws.ptr, &result, &err);
    // Roundoff stalls are accepted when the estimate is still close to the request.
    if (status == GSL_EROUND && err <= 1e3 * std::max(abs_tol, rel_tol * std::abs(result))) {
        return result;
    }
    check(status, where);
    return result;
}

struct Beam {
    double w0, lambda, k, zr;
    Beam(double w0_, double lambda_)
        : w0(w0_), lambda(lambda_), k(2.0 * std::numbers::pi / lambda_), zr(0.5 * k * w0_ * w0_) {}
    double width(double z) const { return w0 * std::sqrt(1.0 + (z / zr) * (z / zr)); }
};

class GslErrorsOff {
public:
    GslErrorsOff() : previous_(gsl_set_error_handler_off()) {}
    ~GslErrorsOff() { gsl_set_error_handler(previous_); }

private:
    gsl_error_handler_t* previous_;
};

}  // namespace

std::complex<double> lg_radial(double w0, double lambda, int l, int p, double r, double z) {
    const Beam b(w0, lambda);
    const int al = std::abs(l);
    const double w = b.width(z);
    const double norm = std::sqrt(4.0 * std::exp(gsl_sf_lnfact(static_cast<unsigned>(p)) -
                                                 gsl_sf_lnfact(static_cast<unsigned>(p + al))));
    const double x = 2.0 * r * r / (w * w);
    const double amp = norm / w * std::pow(std::sqrt(2.0) * r / w, al) *
                       gsl_sf_laguerre_n(p, al, x) * std::exp(-r * r / (w * w));
    double phase = (2 * p + al + 1) * std::atan(z / b.zr);
    if (z > 0.0) {
        const double R = z * (1.0 + (b.zr / z) * (b.zr / z));
        phase -= b.k * r * r / (2.0 * R);
    }
    return amp * std::exp(std::complex<double>(0.0, phase));
}

std::complex<double> nested_superop_element(const ElementIndex& e, double w0, double lambda,
                                            double cn2, double z, const NestedOptions& opts) {
    if (e.out_col.l != e.in_col.l + e.out_row.l - e.in_row.l) {
        return 0.0;
    }
    GslErrorsOff guard;
    const Beam b(w0, lambda);
    // D = 2 (24/5 Gamma(6/5))^(5/6) (dr/r0)^(5/3)
    double coef = 0.0;
    if (cn2 > 0.0) {
        const double r0 = std::pow(16.6 * cn2 * z / (lambda * lambda), -0.6);
        coef = 2.0 * std::pow(4.8 * gsl_sf_gamma(1.2), 5.0 / 6.0) / std::pow(r0, 5.0 / 3.0);
    }
    const int m = e.in_row.l - e.out_row.l;
    auto mode = [&](const ModeIndex& q, double r) { return lg_radial(w0, lambda, q.l, q.p, r, z); };

    // Integrate in units of w(z) so every level is O(1). Inner levels run
    // tighter so their noise stays below the outer tolerance.
    const double w = b.width(z);
    const double extent = opts.extent_in_w;
    Workspace ws_r(kLimit), ws_rp(kLimit), ws_mu(kLimit);
    auto angular = [&](double r, double rp) {
        if (coef == 0.0) {
            return m == 0 ? 2.0 * std::numbers::pi : 0.0;
        }
        Fn f = [&](double mu) {
            const double s2 = std::max(r * r + rp * rp - 2.0 * r * rp * std::cos(mu), 0.0);
            return 2.0 * std::cos(m * mu) * std::exp(-0.5 * coef * std::pow(s2, 5.0 / 6.0));
        };
        return qag(f, 0.0, std::numbers::pi, 0.01 * opts.abs_tol, 0.01 * opts.rel_tol, ws_mu, "mu");
    };
    auto part = [&](bool imag) {
        Fn outer = [&](double x) {
            const double r = x * w;
            const std::complex<double> first = std::conj(mode(e.out_row, r)) * mode(e.in_row, r);
            Fn inner = [&](double xp) {
                const double rp = xp * w;
                const std::complex<double> v =
                    first * mode(e.out_col, rp) * std::conj(mode(e.in_col, rp)) * (r * rp * w * w);
                const double c = imag ? v.imag() : v.real();
                return c == 0.0 ? 0.0 : c * angular(r, rp);
            };
            const double ta = 0.1 * opts.abs_tol;
            const double tr = 0.1 * opts.rel_tol;
            if (x <= 0.0 || x >= extent) {
                return qag(inner, 0.0, extent, ta, tr, ws_rp, "r'");
            }
            // the coherence factor has a kink at r' = r
            return qag(inner, 0.0, x, ta, tr, ws_rp, "r'") + qag(inner, x, extent, ta, tr, ws_rp, "r'");
        };
        return qag(outer, 0.0, extent, opts.abs_tol, opts.rel_tol, ws_r, "r") /
               (2.0 * std::numbers::pi);
    };
    return {part(false), part(true)};
}

Eigen::MatrixXcd radial_gram(const BeamGeometry& geom, int max_order, double z) {
    GslErrorsOff guard;
    const ModeBasis basis(max_order);
    const auto n = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXcd G = Eigen::MatrixXcd::Zero(n, n);
    Workspace ws(kLimit);
    gsl_function g;
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index c = 0; c < n; ++c) {
            const auto& ma = basis[static_cast<std::size_t>(a)];
            const auto& mc = basis[static_cast<std::size_t>(c)];
            if (ma.l != mc.l) {
                continue;
            }
            double parts[2];
            for (int imag = 0; imag < 2; ++imag) {
                Fn f = [&](double r) {
                    const auto v = std::conj(radial_mode(geom, ma, r, z)) * radial_mode(geom, mc, r, z) * r;
                    return imag ? v.imag() : v.real();
                };
                g = {&trampoline, &f};
                double err = 0.0;
                check(gsl_integration_qagiu(&g, 0.0, 1e-14, 1e-12, kLimit, ws.ptr, &parts[imag], &err),
                      "qagiu");
            }
            G(a, c) = {parts[0], parts[1]};
        }
    }
    return G;
}

namespace {

Eigen::MatrixXcd ginibre(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXcd G(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            G(i, j) = {normal(rng), normal(rng)};
        }
    }
    return G;
}

}  // namespace

Eigen::MatrixXcd random_unitary(Eigen::Index n, std::mt19937_64& rng) {
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(ginibre(n, n, rng));
    Eigen::MatrixXcd Q = qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd Rm = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto d = Rm(i, i);
        Q.col(i) *= d / std::abs(d);
    }
    return Q;
}

Eigen::MatrixXcd random_density_matrix(Eigen::Index n, std::mt19937_64& rng) {
    const Eigen::MatrixXcd G = ginibre(n, n, rng);
    Eigen::MatrixXcd rho = G * G.adjoint();
    return rho / rho.trace().real();
}

Eigen::MatrixXcd random_psd(Eigen::Index n, Eigen::Index rank, std::mt19937_64& rng) {
    const Eigen::MatrixXcd G = ginibre(n, rank, rng);
    return G * G.adjoint();
}

Eigen::MatrixXcd inverse_sqrt_svd(const Eigen::MatrixXcd& M, double rank_tol) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(M.rows(), M.cols());
    if (s.size() == 0 || s(0) <= 0.0) {
        return out;
    }
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > rank_tol * s(0)) {
            out += svd.matrixV().col(i) * svd.matrixU().col(i).adjoint() / std::sqrt(s(i));
        }
    }
    return out;
}

double entanglement_fidelity(const std::vector<Eigen::MatrixXcd>& recovery,
                             const std::vector<Eigen::MatrixXcd>& channel, const CodeSpec& code) {
    double sum = 0.0;
    for (const auto& R : recovery) {
        for (const auto& A : channel) {
            sum += std::norm((R * A * code.projector).trace());
        }
    }
    return sum / 4.0;
}

ToyChannel correctable_toy_channel(double p, std::mt19937_64& rng) {
    const Eigen::MatrixXcd V = random_unitary(4, rng);
    // basis |ab> -> index 2a + b
    Eigen::MatrixXcd flip = Eigen::MatrixXcd::Zero(4, 4);
    flip(1, 0) = flip(0, 1) = flip(3, 2) = flip(2, 3) = 1.0;
    ToyChannel toy;
    toy.kraus.dim_in = toy.kraus.dim_out = 4;
    toy.kraus.operators = {std::sqrt(p) * Eigen::MatrixXcd::Identity(4, 4),
                           std::sqrt(1.0 - p) * V * flip * V.adjoint()};
    toy.kraus.eigenvalues = {4.0 * p, 4.0 * (1.0 - p)};
    Eigen::VectorXcd zero = V.col(0);
    Eigen::VectorXcd one = V.col(2);
    toy.code = make_code(zero, one);
    const Eigen::MatrixXcd P = toy.code.projector;
    const Eigen::MatrixXcd F = V * flip * V.adjoint();
    toy.syndrome_recovery = {P, P * F};
    return toy;
}

}  // namespace oamqec::oracle
