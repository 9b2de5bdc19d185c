#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "oamqec/channel_superop.hpp"

namespace oamqec {

/// Square Hermitian rearrangement of a superoperator, indexed by
/// (output mode, input mode) pairs: row (c, a) -> c * dim_in + a.
struct ChoiLikeMatrix {
    std::size_t dim_in = 0;
    std::size_t dim_out = 0;
    Eigen::MatrixXcd values;
    /// Present when built from an OAM superoperator; enables mode labels.
    std::optional<TruncationSpec> truncation;
    std::optional<SuperopMetadata> metadata;
};

/// Dense superoperator, rows (c,d) -> c * dim_out + d, columns (a,b) -> a * dim_in + b.
Eigen::MatrixXcd dense_superop(const SuperopMatrix& T);

/// R_{(c,a),(d,b)} = T_{(c,d),(a,b)} for a dense superoperator.
Eigen::MatrixXcd rearrange_dense(const Eigen::MatrixXcd& T, std::size_t dim_in, std::size_t dim_out);
/// Inverse permutation of rearrange_dense.
Eigen::MatrixXcd unrearrange_dense(const Eigen::MatrixXcd& R, std::size_t dim_in,
                                   std::size_t dim_out);

ChoiLikeMatrix rearrange(const SuperopMatrix& T);

/// Back to sparse form; stores every selection-rule-allowed tuple. Needs the
/// truncation of the source superoperator.
SuperopMatrix inverse_rearrange(const ChoiLikeMatrix& R);

/// Kraus operators A_k (dim_out x dim_in) with eigenvalues in non-increasing order.
struct KrausSet {
    std::size_t dim_in = 0;
    std::size_t dim_out = 0;
    std::vector<double> eigenvalues;
    std::vector<Eigen::MatrixXcd> operators;
    std::optional<TruncationSpec> truncation;
    std::optional<SuperopMetadata> metadata;
    /// Eigenvalues in [-eps_psd, 0) that were set to zero.
    std::size_t clamped = 0;
    /// Eigenvalues dropped by the cutoff (including clamped ones).
    std::size_t dropped = 0;

    std::size_t size() const { return operators.size(); }
};

class PositivityViolation : public std::runtime_error {
public:
    PositivityViolation(double eigenvalue, double leading);
    double eigenvalue() const { return eigenvalue_; }

private:
    double eigenvalue_;
};

struct KrausOptions {
    /// Eigenvalues below cutoff_ratio * lambda_1 are dropped.
    double cutoff_ratio = 1e-12;
    /// Eigenvalues in [-psd_ratio * lambda_1, 0) are clamped; below is an error.
    double psd_ratio = 1e-8;
};

/// Hermitian eigendecomposition of R and the Kraus operators
/// A_k = sqrt(lambda_k) reshape(v_k). R is split into the connected components
/// of its sparsity pattern first; for OAM channels these are the fixed-OAM-shift
/// blocks, so every operator changes l by a single definite amount.
KrausSet kraus_decompose(const ChoiLikeMatrix& R, const KrausOptions& options = {});
KrausSet kraus_decompose(const ChoiLikeMatrix& R, double cutoff_ratio);

/// sum_k A_k rho A_k^dagger.
Eigen::MatrixXcd apply_kraus(const KrausSet& K, const Eigen::MatrixXcd& rho);

/// Direct superoperator contraction (T rho)_{cd} = sum_{ab} T_{(c,d),(a,b)} rho_{ab}.
Eigen::MatrixXcd apply_superop(const SuperopMatrix& T, const Eigen::MatrixXcd& rho);

struct CompletenessDeficiency {
    /// I - sum_k A_k^dagger A_k on the input space.
    Eigen::MatrixXcd matrix;
    /// Eigenvalue of largest magnitude (the worst-case leakage probability).
    double largest = 0.0;
};

CompletenessDeficiency completeness_deficiency(const KrausSet& K);

/// Isometry embedding the input space into the output space. Uses mode labels
/// when the Kraus set carries a truncation, the leading coordinates otherwise.
Eigen::MatrixXcd embedding_isometry(const KrausSet& K);

/// Net OAM change l_out - l_in carrying most of the operator's weight; 0 without mode labels.
int dominant_oam_shift(const KrausSet& K, std::size_t k);

struct KrausPair {
    std::size_t first = 0;
    std::size_t second = 0;
    double gap = 0.0;
    int shift_first = 0;
    int shift_second = 0;

    bool raises_and_lowers() const {
        return shift_first != 0 && shift_first == -shift_second;
    }
};

struct LeadingKrausReport {
    /// c = tr(E^dagger A_1) / dim_in.
    std::complex<double> scale{};
    /// Spectral norm of A_1 - c E.
    double residual = 0.0;
    double relative_residual = 0.0;
    std::vector<KrausPair> pairs;
};

struct PairingOptions {
    /// |lambda_k - lambda_{k+1}| < degeneracy_ratio * lambda_1 marks a pair.
    double degeneracy_ratio = 1e-6;
    /// Eigenvalues below significance_ratio * lambda_1 are not examined.
    double significance_ratio = 1e-4;
};

LeadingKrausReport leading_kraus_analysis(const KrausSet& K, const PairingOptions& options = {});

/// Writes `path` (binary: per operator lambda, then dim_out*dim_in complex
/// doubles, row-major, little-endian) and `path`.json with the metadata.
void export_kraus(const KrausSet& K, const std::filesystem::path& path);

}  // namespace oamqec
