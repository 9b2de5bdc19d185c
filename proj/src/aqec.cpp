#include "oamqec/aqec.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

namespace oamqec {

Eigen::MatrixXcd CodeSpec::codewords() const {
    Eigen::MatrixXcd C(logical_zero.size(), 2);
    C.col(0) = logical_zero;
    C.col(1) = logical_one;
    return C;
}

CodeSpec make_code(Eigen::VectorXcd logical_zero, Eigen::VectorXcd logical_one) {
    if (logical_zero.size() != logical_one.size() || logical_zero.size() < 2) {
        throw std::invalid_argument("logical vectors must share a dimension of at least 2");
    }
    if (std::abs(logical_zero.norm() - 1.0) > 1e-9 || std::abs(logical_one.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("logical vectors must have unit norm");
    }
    if (std::abs(logical_zero.dot(logical_one)) > 1e-9) {
        throw std::invalid_argument("logical vectors must be orthogonal");
    }
    CodeSpec code;
    code.projector = logical_zero * logical_zero.adjoint() + logical_one * logical_one.adjoint();
    code.logical_zero = std::move(logical_zero);
    code.logical_one = std::move(logical_one);
    return code;
}

CodeSpec build_code(const TruncationSpec& trunc) {
    if (trunc.max_in < 1) {
        throw std::invalid_argument("the code needs max_in >= 1");
    }
    const ModeBasis basis(trunc.max_in);
    const int m = trunc.max_in;
    const auto n = static_cast<Eigen::Index>(basis.size());
    const double h = 1.0 / std::sqrt(2.0);
    auto at = [&](int l, int p) { return static_cast<Eigen::Index>(basis.index_of({l, p}).value()); };
    Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(n);
    Eigen::VectorXcd one = Eigen::VectorXcd::Zero(n);
    zero(at(-m, 0)) = h;
    zero(at(-m, 1)) = h;
    one(at(m, m - 1)) = h;
    one(at(m, m)) = h;
    return make_code(std::move(zero), std::move(one));
}

Eigen::MatrixXcd error_on_projector(const KrausSet& K, const Eigen::MatrixXcd& P) {
    if (P.rows() != static_cast<Eigen::Index>(K.dim_in) || P.cols() != P.rows()) {
        throw std::invalid_argument("projector does not match the channel input space");
    }
    const auto dout = static_cast<Eigen::Index>(K.dim_out);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dout, dout);
    for (const auto& A : K.operators) {
        out.noalias() += A * P * A.adjoint();
    }
    return 0.5 * (out + out.adjoint());
}

InverseSqrt inverse_sqrt_psd_with_support(const Eigen::MatrixXcd& M, double rank_tol) {
    if (M.rows() != M.cols()) {
        throw std::invalid_argument("inverse_sqrt_psd needs a square matrix");
    }
    const auto n = M.rows();
    InverseSqrt result{Eigen::MatrixXcd::Zero(n, n), Eigen::MatrixXcd::Zero(n, n), 0};
    if (n == 0) {
        return result;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(0.5 * (M + M.adjoint()));
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("Hermitian eigensolver failed");
    }
    const auto& ev = solver.eigenvalues();
    const double sigma_max = ev(n - 1);
    if (!(sigma_max > 0.0)) {
        return result;
    }
    if (ev(0) < -1e-8 * sigma_max) {
        throw IndefiniteMatrix(
            fmt::format("matrix is indefinite: eigenvalue {:.3e} against {:.3e}", ev(0), sigma_max));
    }
    const double thresh = rank_tol * sigma_max;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (ev(i) > thresh) {
            const auto u = solver.eigenvectors().col(i);
            result.inverse_sqrt.noalias() += (1.0 / std::sqrt(ev(i))) * u * u.adjoint();
            result.support.noalias() += u * u.adjoint();
            ++result.rank;
        }
    }
    return result;
}

Eigen::MatrixXcd inverse_sqrt_psd(const Eigen::MatrixXcd& M, double rank_tol) {
    return inverse_sqrt_psd_with_support(M, rank_tol).inverse_sqrt;
}

RecoveryMap transpose_recovery(const KrausSet& K, const CodeSpec& code, double rank_tol) {
    const auto inv = inverse_sqrt_psd_with_support(error_on_projector(K, code.projector), rank_tol);
    RecoveryMap R;
    R.support_projector = inv.support;
    R.kraus_operators.reserve(K.size());
    for (const auto& A : K.operators) {
        R.kraus_operators.push_back(code.projector * A.adjoint() * inv.inverse_sqrt);
    }
    return R;
}

double channel_fidelity(const KrausSet& K, const CodeSpec& code, double rank_tol) {
    if (code.dim() != K.dim_in) {
        throw std::invalid_argument("code does not match the channel input space");
    }
    const Eigen::MatrixXcd M = inverse_sqrt_psd(error_on_projector(K, code.projector), rank_tol);
    const Eigen::MatrixXcd C = code.codewords();
    const auto dout = static_cast<Eigen::Index>(K.dim_out);
    const auto n = static_cast<Eigen::Index>(K.size());
    // tr(P A_k^+ M A_l) = sum_i (A_k c_i)^+ M (A_l c_i)
    Eigen::MatrixXcd B(2 * dout, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::MatrixXcd AC = K.operators[static_cast<std::size_t>(k)] * C;
        B.col(k).head(dout) = AC.col(0);
        B.col(k).tail(dout) = AC.col(1);
    }
    Eigen::MatrixXcd MB(2 * dout, n);
    MB.topRows(dout).noalias() = M * B.topRows(dout);
    MB.bottomRows(dout).noalias() = M * B.bottomRows(dout);
    const Eigen::MatrixXcd G = B.adjoint() * MB;
    return G.cwiseAbs2().sum() / 4.0;
}

Eigen::MatrixXcd apply_channel_and_recover(const KrausSet& K, const RecoveryMap& R,
                                           const Eigen::MatrixXcd& rho) {
    const Eigen::MatrixXcd noisy = apply_kraus(K, rho);
    const auto din = static_cast<Eigen::Index>(K.dim_in);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(din, din);
    for (const auto& Rm : R.kraus_operators) {
        out.noalias() += Rm * noisy * Rm.adjoint();
    }
    return out;
}

}  // namespace oamqec
