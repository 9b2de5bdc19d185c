#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "oamqec/beam_modes.hpp"
#include "oamqec/kraus.hpp"

namespace oamqec {

/// Two-dimensional code subspace of the input space.
struct CodeSpec {
    Eigen::VectorXcd logical_zero;
    Eigen::VectorXcd logical_one;
    Eigen::MatrixXcd projector;

    std::size_t dim() const { return static_cast<std::size_t>(projector.rows()); }
    /// dim x 2 matrix with the logical vectors as columns.
    Eigen::MatrixXcd codewords() const;
};

/// Validates orthonormality and builds the projector.
CodeSpec make_code(Eigen::VectorXcd logical_zero, Eigen::VectorXcd logical_one);

/// |0_L> = (|-m,0> + |-m,1>)/sqrt2, |1_L> = (|m,m-1> + |m,m>)/sqrt2 with m = max_in.
CodeSpec build_code(const TruncationSpec& trunc);

/// E(P) = sum_k A_k P A_k^dagger on the output space.
Eigen::MatrixXcd error_on_projector(const KrausSet& K, const Eigen::MatrixXcd& P);

class IndefiniteMatrix : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultRankTol = 1e-10;

struct InverseSqrt {
    Eigen::MatrixXcd inverse_sqrt;
    Eigen::MatrixXcd support;
    std::size_t rank = 0;
};

/// Pseudoinverse square root of a Hermitian PSD matrix. Eigenvalues at or below
/// rank_tol * sigma_max count as null. Throws IndefiniteMatrix when an
/// eigenvalue is below -1e-8 * sigma_max.
InverseSqrt inverse_sqrt_psd_with_support(const Eigen::MatrixXcd& M,
                                          double rank_tol = kDefaultRankTol);
Eigen::MatrixXcd inverse_sqrt_psd(const Eigen::MatrixXcd& M, double rank_tol = kDefaultRankTol);

/// Transpose-channel recovery R_k = P A_k^dagger E(P)^(-1/2), d_in x d_out each.
struct RecoveryMap {
    std::vector<Eigen::MatrixXcd> kraus_operators;
    Eigen::MatrixXcd support_projector;
};

RecoveryMap transpose_recovery(const KrausSet& K, const CodeSpec& code,
                               double rank_tol = kDefaultRankTol);

/// (1/4) sum_{k,l} |tr(P A_k^dagger E(P)^(-1/2) A_l)|^2.
double channel_fidelity(const KrausSet& K, const CodeSpec& code, double rank_tol = kDefaultRankTol);

/// sum_m R_m (sum_k A_k rho A_k^dagger) R_m^dagger, back on the input space.
Eigen::MatrixXcd apply_channel_and_recover(const KrausSet& K, const RecoveryMap& R,
                                           const Eigen::MatrixXcd& rho);

}  // namespace oamqec
