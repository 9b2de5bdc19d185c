#include "oamqec/beam_modes.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace oamqec {

int ModeIndex::order() const { return 2 * p + std::abs(l); }

BeamGeometry::BeamGeometry(double waist, double wavelength)
    : waist_(waist), wavelength_(wavelength) {
    if (!(waist > 0.0) || !std::isfinite(waist)) {
        throw std::invalid_argument("beam waist must be positive and finite");
    }
    if (!(wavelength > 0.0) || !std::isfinite(wavelength)) {
        throw std::invalid_argument("wavelength must be positive and finite");
    }
    wavenumber_ = 2.0 * std::numbers::pi / wavelength_;
    rayleigh_range_ = 0.5 * wavenumber_ * waist_ * waist_;
}

void TruncationSpec::validate() const {
    if (max_in < 1) {
        throw std::invalid_argument("max_in must be at least 1");
    }
    if (max_out < max_in) {
        throw std::invalid_argument("max_out must be at least max_in");
    }
}

std::size_t TruncationSpec::dim_in() const { return basis_dimension(max_in); }
std::size_t TruncationSpec::dim_out() const { return basis_dimension(max_out); }

std::size_t basis_dimension(int max_order) {
    if (max_order < 0) {
        throw std::invalid_argument("truncation order must be non-negative");
    }
    const auto m = static_cast<std::size_t>(max_order);
    return (2 * m + 1) * (m + 1);
}

ModeBasis::ModeBasis(int max_order) : max_order_(max_order) {
    modes_.reserve(basis_dimension(max_order));
    for (int l = -max_order; l <= max_order; ++l) {
        for (int p = 0; p <= max_order; ++p) {
            modes_.push_back({l, p});
        }
    }
}

bool ModeBasis::contains(const ModeIndex& m) const {
    return std::abs(m.l) <= max_order_ && m.p >= 0 && m.p <= max_order_;
}

std::optional<std::size_t> ModeBasis::index_of(const ModeIndex& m) const {
    if (!contains(m)) {
        return std::nullopt;
    }
    const auto stride = static_cast<std::size_t>(max_order_ + 1);
    return static_cast<std::size_t>(m.l + max_order_) * stride + static_cast<std::size_t>(m.p);
}

double beam_width(const BeamGeometry& geom, double z) {
    const double s = z / geom.rayleigh_range();
    return geom.waist() * std::sqrt(1.0 + s * s);
}

double radius_of_curvature(const BeamGeometry& geom, double z) {
    if (!(z > 0.0)) {
        throw std::domain_error("radius of curvature is singular at z = 0");
    }
    const double s = geom.rayleigh_range() / z;
    return z * (1.0 + s * s);
}

double gouy_phase(const BeamGeometry& geom, double z) {
    return std::atan(z / geom.rayleigh_range());
}

double generalized_laguerre(int n, double alpha, double x) {
    if (n < 0) {
        throw std::invalid_argument("Laguerre degree must be non-negative");
    }
    double prev = 1.0;
    if (n == 0) {
        return prev;
    }
    double curr = 1.0 + alpha - x;
    // (k+1) L_{k+1} = (2k+1+alpha-x) L_k - (k+alpha) L_{k-1}
    for (int k = 1; k < n; ++k) {
        const double next = ((2.0 * k + 1.0 + alpha - x) * curr - (k + alpha) * prev) / (k + 1.0);
        prev = curr;
        curr = next;
    }
    return curr;
}

double mode_normalization(const ModeIndex& mode) {
    const int al = std::abs(mode.l);
    const double log_ratio = std::lgamma(mode.p + 1.0) - std::lgamma(mode.p + al + 1.0);
    return 2.0 * std::exp(0.5 * log_ratio);
}

double radial_envelope(const BeamGeometry& geom, const ModeIndex& mode, double r, double z) {
    const double w = beam_width(geom, z);
    const int al = std::abs(mode.l);
    const double rho = r / w;
    const double x = 2.0 * rho * rho;
    const double power = al == 0 ? 1.0 : std::pow(std::numbers::sqrt2 * rho, al);
    return mode_normalization(mode) / w * power * generalized_laguerre(mode.p, al, x) *
           std::exp(-rho * rho);
}

std::complex<double> radial_mode(const BeamGeometry& geom, const ModeIndex& mode, double r,
                                 double z) {
    const double envelope = radial_envelope(geom, mode, r, z);
    double phase = (mode.order() + 1) * gouy_phase(geom, z);
    if (z > 0.0) {
        phase -= geom.wavenumber() * r * r / (2.0 * radius_of_curvature(geom, z));
    }
    return envelope * std::polar(1.0, phase);
}

std::complex<double> mode_field(const BeamGeometry& geom, const ModeIndex& mode, double r,
                                double theta, double z) {
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    return inv_sqrt_2pi * radial_mode(geom, mode, r, z) *
           std::polar(1.0, static_cast<double>(mode.l) * theta);
}

}  // namespace oamqec
