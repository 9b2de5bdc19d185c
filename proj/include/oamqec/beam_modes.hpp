#pragma once

#include <compare>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

namespace oamqec {

/// OAM eigenstate label |l,p>: azimuthal number l (any sign) and radial number p >= 0.
struct ModeIndex {
    int l = 0;
    int p = 0;

    /// 2p + |l|, the mode order that sets the Gouy phase and the radial extent.
    int order() const;

    friend auto operator<=>(const ModeIndex&, const ModeIndex&) = default;
};

/// Gaussian beam geometry. Wavenumber and Rayleigh range are derived once at
/// construction so every consumer sees identical values.
class BeamGeometry {
public:
    BeamGeometry(double waist, double wavelength);

    double waist() const { return waist_; }
    double wavelength() const { return wavelength_; }
    double wavenumber() const { return wavenumber_; }
    double rayleigh_range() const { return rayleigh_range_; }

private:
    double waist_;
    double wavelength_;
    double wavenumber_;
    double rayleigh_range_;
};

/// Hilbert-space truncation for the channel input and output spaces.
struct TruncationSpec {
    int max_in = 1;
    int max_out = 1;

    /// Throws std::invalid_argument unless max_out >= max_in >= 1.
    void validate() const;
    std::size_t dim_in() const;
    std::size_t dim_out() const;
};

/// Dimension of the truncated space {(l,p) : |l| <= m, 0 <= p <= m}.
std::size_t basis_dimension(int max_order);

/// Ordered truncated basis, l ascending then p ascending.
class ModeBasis {
public:
    explicit ModeBasis(int max_order);

    int max_order() const { return max_order_; }
    std::size_t size() const { return modes_.size(); }
    const ModeIndex& operator[](std::size_t i) const { return modes_[i]; }
    const std::vector<ModeIndex>& modes() const { return modes_; }

    bool contains(const ModeIndex& m) const;
    /// Position of m in the ordering, or nullopt when m is outside the truncation.
    std::optional<std::size_t> index_of(const ModeIndex& m) const;

    auto begin() const { return modes_.begin(); }
    auto end() const { return modes_.end(); }

private:
    int max_order_;
    std::vector<ModeIndex> modes_;
};

double beam_width(const BeamGeometry& geom, double z);

/// R(z) = z (1 + (zR/z)^2). Throws std::domain_error for z <= 0, where the
/// wavefront is flat and the curvature phase factor is 1.
double radius_of_curvature(const BeamGeometry& geom, double z);

/// arctan(z / zR).
double gouy_phase(const BeamGeometry& geom, double z);

/// Generalized Laguerre polynomial L_n^alpha(x) by upward three-term recurrence in n.
double generalized_laguerre(int n, double alpha, double x);

/// Normalization constant A = 2 sqrt(p! / (p+|l|)!) giving unit radial norm.
double mode_normalization(const ModeIndex& mode);

/// Real radial profile of the Laguerre-Gauss mode without the curvature and
/// Gouy phase factors.
double radial_envelope(const BeamGeometry& geom, const ModeIndex& mode, double r, double z);

/// Radial function R_{l,p}(r,z) including curvature phase exp(-i k r^2 / 2R(z))
/// and Gouy phase exp(+i (2p+|l|+1) arctan(z/zR)).
std::complex<double> radial_mode(const BeamGeometry& geom, const ModeIndex& mode, double r,
                                 double z);

/// <r|l,p> = R_{l,p}(r,z) exp(i l theta) / sqrt(2 pi).
std::complex<double> mode_field(const BeamGeometry& geom, const ModeIndex& mode, double r,
                                double theta, double z);

}  // namespace oamqec
