#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "oamqec/aqec.hpp"
#include "oamqec/channel_superop.hpp"
#include "oamqec/kraus.hpp"

// Independent reference computations used by the tests and `oamqec verify`.
namespace oamqec::oracle {

/// Laguerre-Gauss radial function from GSL special functions.
std::complex<double> lg_radial(double w0, double lambda, int l, int p, double r, double z);

struct NestedOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-14;
    /// Radial integration range in units of w(z).
    double extent_in_w = 8.0;
};

/// Ensemble-averaged element by three nested 1-D GSL adaptive integrations
/// (mu innermost, then r', then r), real and imaginary parts separately.
std::complex<double> nested_superop_element(const ElementIndex& index, double w0, double lambda,
                                            double cn2, double z, const NestedOptions& opts = {});

/// Radial overlaps int r conj(R_a) R_b dr of the library's modes, set to 0
/// across different l, by GSL QAGIU.
Eigen::MatrixXcd radial_gram(const BeamGeometry& geom, int max_order, double z);

Eigen::MatrixXcd random_unitary(Eigen::Index n, std::mt19937_64& rng);
/// Ginibre-distributed density matrix, unit trace.
Eigen::MatrixXcd random_density_matrix(Eigen::Index n, std::mt19937_64& rng);
/// Random Hermitian PSD matrix of the given rank.
Eigen::MatrixXcd random_psd(Eigen::Index n, Eigen::Index rank, std::mt19937_64& rng);

/// Pseudoinverse square root through a singular value decomposition.
Eigen::MatrixXcd inverse_sqrt_svd(const Eigen::MatrixXcd& M, double rank_tol);

/// sum_{m,k} |tr(R_m A_k P)|^2 / d^2 for the composed channel on the maximally
/// mixed code state.
double entanglement_fidelity(const std::vector<Eigen::MatrixXcd>& recovery,
                             const std::vector<Eigen::MatrixXcd>& channel, const CodeSpec& code);

struct ToyChannel {
    KrausSet kraus;
    CodeSpec code;
    /// Explicit syndrome-measurement recovery for the instance.
    std::vector<Eigen::MatrixXcd> syndrome_recovery;
};

/// 4-dim channel {sqrt(p) V, sqrt(1-p) V (I x X) } V^dagger-conjugated by a
/// random unitary V, with the code V span{|00>, |10>}. Exactly correctable.
ToyChannel correctable_toy_channel(double p, std::mt19937_64& rng);

}  // namespace oamqec::oracle
