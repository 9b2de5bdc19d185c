#include "oamqec/kraus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>
#include <json.hpp>

#include "oamqec/io_util.hpp"
#include "oamqec/superop_io.hpp"

namespace oamqec {

Eigen::MatrixXcd dense_superop(const SuperopMatrix& T) {
    Eigen::MatrixXcd dense = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(T.rows()),
                                                    static_cast<Eigen::Index>(T.cols()));
    for (const auto& e : T.entries()) {
        const auto row = T.row_of(e.index.out_row, e.index.out_col);
        const auto col = T.col_of(e.index.in_row, e.index.in_col);
        dense(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = e.value;
    }
    return dense;
}

Eigen::MatrixXcd rearrange_dense(const Eigen::MatrixXcd& T, std::size_t dim_in,
                                 std::size_t dim_out) {
    const auto din = static_cast<Eigen::Index>(dim_in);
    const auto dout = static_cast<Eigen::Index>(dim_out);
    if (T.rows() != dout * dout || T.cols() != din * din) {
        throw std::invalid_argument("superoperator shape does not match the dimensions");
    }
    Eigen::MatrixXcd R(dout * din, dout * din);
    for (Eigen::Index c = 0; c < dout; ++c) {
        for (Eigen::Index d = 0; d < dout; ++d) {
            for (Eigen::Index a = 0; a < din; ++a) {
                for (Eigen::Index b = 0; b < din; ++b) {
                    R(c * din + a, d * din + b) = T(c * dout + d, a * din + b);
                }
            }
        }
    }
    return R;
}

Eigen::MatrixXcd unrearrange_dense(const Eigen::MatrixXcd& R, std::size_t dim_in,
                                   std::size_t dim_out) {
    const auto din = static_cast<Eigen::Index>(dim_in);
    const auto dout = static_cast<Eigen::Index>(dim_out);
    if (R.rows() != dout * din || R.cols() != dout * din) {
        throw std::invalid_argument("rearranged matrix shape does not match the dimensions");
    }
    Eigen::MatrixXcd T(dout * dout, din * din);
    for (Eigen::Index c = 0; c < dout; ++c) {
        for (Eigen::Index d = 0; d < dout; ++d) {
            for (Eigen::Index a = 0; a < din; ++a) {
                for (Eigen::Index b = 0; b < din; ++b) {
                    T(c * dout + d, a * din + b) = R(c * din + a, d * din + b);
                }
            }
        }
    }
    return T;
}

ChoiLikeMatrix rearrange(const SuperopMatrix& T) {
    ChoiLikeMatrix R;
    R.dim_in = T.input_basis().size();
    R.dim_out = T.output_basis().size();
    R.truncation = T.truncation();
    R.metadata = T.metadata();
    const auto din = R.dim_in;
    const auto n = static_cast<Eigen::Index>(R.dim_in * R.dim_out);
    R.values = Eigen::MatrixXcd::Zero(n, n);
    const auto& in = T.input_basis();
    const auto& out = T.output_basis();
    for (const auto& e : T.entries()) {
        const auto c = out.index_of(e.index.out_row).value();
        const auto d = out.index_of(e.index.out_col).value();
        const auto a = in.index_of(e.index.in_row).value();
        const auto b = in.index_of(e.index.in_col).value();
        R.values(static_cast<Eigen::Index>(c * din + a), static_cast<Eigen::Index>(d * din + b)) =
            e.value;
    }
    return R;
}

SuperopMatrix inverse_rearrange(const ChoiLikeMatrix& R) {
    if (!R.truncation) {
        throw std::invalid_argument("inverse_rearrange needs the mode truncation");
    }
    SuperopMetadata meta = R.metadata.value_or(SuperopMetadata{});
    SuperopMatrix T(*R.truncation, meta);
    const auto& in = T.input_basis();
    const auto& out = T.output_basis();
    const auto din = in.size();
    std::vector<SuperopMatrix::Entry> entries;
    for (const auto& e : allowed_elements(*R.truncation)) {
        const auto c = out.index_of(e.out_row).value();
        const auto d = out.index_of(e.out_col).value();
        const auto a = in.index_of(e.in_row).value();
        const auto b = in.index_of(e.in_col).value();
        entries.push_back(
            {e, R.values(static_cast<Eigen::Index>(c * din + a), static_cast<Eigen::Index>(d * din + b))});
    }
    T.assign(std::move(entries));
    return T;
}

PositivityViolation::PositivityViolation(double eigenvalue, double leading)
    : std::runtime_error(fmt::format(
          "rearranged channel matrix has eigenvalue {:.3e} (leading {:.3e}); integration "
          "tolerances are too loose",
          eigenvalue, leading)),
      eigenvalue_(eigenvalue) {}

namespace {

// Connected components of the sparsity graph of a Hermitian matrix.
std::vector<std::vector<Eigen::Index>> sparsity_components(const Eigen::MatrixXcd& M) {
    const Eigen::Index n = M.rows();
    std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
    auto find = [&](Eigen::Index x) {
        while (parent[static_cast<std::size_t>(x)] != x) {
            auto& px = parent[static_cast<std::size_t>(x)];
            px = parent[static_cast<std::size_t>(px)];
            x = px;
        }
        return x;
    };
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (i != j && M(i, j) != std::complex<double>{}) {
                const auto ri = find(i);
                const auto rj = find(j);
                if (ri != rj) {
                    parent[static_cast<std::size_t>(std::max(ri, rj))] = std::min(ri, rj);
                }
            }
        }
    }
    std::vector<std::vector<Eigen::Index>> components;
    std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto root = find(i);
        auto& s = slot[static_cast<std::size_t>(root)];
        if (s < 0) {
            s = static_cast<Eigen::Index>(components.size());
            components.emplace_back();
        }
        components[static_cast<std::size_t>(s)].push_back(i);
    }
    return components;
}

struct EigenPair {
    double value;
    std::size_t component;
    Eigen::Index local;
    Eigen::VectorXcd vector;
};

}  // namespace

KrausSet kraus_decompose(const ChoiLikeMatrix& R, const KrausOptions& options) {
    const auto n = static_cast<Eigen::Index>(R.dim_in * R.dim_out);
    if (R.values.rows() != n || R.values.cols() != n) {
        throw std::invalid_argument("rearranged matrix shape does not match its dimensions");
    }
    const double scale = std::max(R.values.cwiseAbs().maxCoeff(), 1e-300);
    const double asymmetry = (R.values - R.values.adjoint()).cwiseAbs().maxCoeff();
    if (asymmetry > 1e-6 * scale) {
        throw std::invalid_argument(
            fmt::format("rearranged matrix is not Hermitian (deviation {:.3e})", asymmetry));
    }
    const Eigen::MatrixXcd H = 0.5 * (R.values + R.values.adjoint());

    std::vector<EigenPair> pairs;
    pairs.reserve(static_cast<std::size_t>(n));
    const auto components = sparsity_components(H);
    for (std::size_t ci = 0; ci < components.size(); ++ci) {
        const auto& idx = components[ci];
        const auto m = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXcd block(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) {
                block(i, j) = H(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(block);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("Hermitian eigensolver failed");
        }
        for (Eigen::Index k = 0; k < m; ++k) {
            Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n);
            for (Eigen::Index i = 0; i < m; ++i) {
                v(idx[static_cast<std::size_t>(i)]) = solver.eigenvectors()(i, k);
            }
            // Fix the phase: largest-magnitude coefficient real positive.
            Eigen::Index arg = 0;
            v.cwiseAbs().maxCoeff(&arg);
            if (std::abs(v(arg)) > 0.0) {
                v *= std::conj(v(arg)) / std::abs(v(arg));
            }
            pairs.push_back({solver.eigenvalues()(k), ci, k, std::move(v)});
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const EigenPair& a, const EigenPair& b) {
        if (a.value != b.value) {
            return a.value > b.value;
        }
        if (a.component != b.component) {
            return a.component < b.component;
        }
        return a.local < b.local;
    });

    KrausSet K;
    K.dim_in = R.dim_in;
    K.dim_out = R.dim_out;
    K.truncation = R.truncation;
    K.metadata = R.metadata;
    if (pairs.empty() || !(pairs.front().value > 0.0)) {
        return K;
    }
    const double leading = pairs.front().value;
    const double psd_floor = -options.psd_ratio * leading;
    const auto din = static_cast<Eigen::Index>(R.dim_in);
    const auto dout = static_cast<Eigen::Index>(R.dim_out);
    for (auto& p : pairs) {
        double lambda = p.value;
        if (lambda < psd_floor) {
            throw PositivityViolation(lambda, leading);
        }
        if (lambda < 0.0) {
            lambda = 0.0;
            ++K.clamped;
        }
        if (lambda < options.cutoff_ratio * leading || lambda == 0.0) {
            ++K.dropped;
            continue;
        }
        Eigen::MatrixXcd A(dout, din);
        const double s = std::sqrt(lambda);
        for (Eigen::Index c = 0; c < dout; ++c) {
            for (Eigen::Index a = 0; a < din; ++a) {
                A(c, a) = s * p.vector(c * din + a);
            }
        }
        K.eigenvalues.push_back(lambda);
        K.operators.push_back(std::move(A));
    }
    return K;
}

KrausSet kraus_decompose(const ChoiLikeMatrix& R, double cutoff_ratio) {
    KrausOptions options;
    options.cutoff_ratio = cutoff_ratio;
    return kraus_decompose(R, options);
}

Eigen::MatrixXcd apply_kraus(const KrausSet& K, const Eigen::MatrixXcd& rho) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(K.dim_out),
                                                  static_cast<Eigen::Index>(K.dim_out));
    for (const auto& A : K.operators) {
        out.noalias() += A * rho * A.adjoint();
    }
    return out;
}

Eigen::MatrixXcd apply_superop(const SuperopMatrix& T, const Eigen::MatrixXcd& rho) {
    const auto& in = T.input_basis();
    const auto& out = T.output_basis();
    if (rho.rows() != static_cast<Eigen::Index>(in.size()) || rho.cols() != rho.rows()) {
        throw std::invalid_argument("density matrix does not match the input space");
    }
    Eigen::MatrixXcd result = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(out.size()),
                                                     static_cast<Eigen::Index>(out.size()));
    for (const auto& e : T.entries()) {
        const auto c = static_cast<Eigen::Index>(out.index_of(e.index.out_row).value());
        const auto d = static_cast<Eigen::Index>(out.index_of(e.index.out_col).value());
        const auto a = static_cast<Eigen::Index>(in.index_of(e.index.in_row).value());
        const auto b = static_cast<Eigen::Index>(in.index_of(e.index.in_col).value());
        result(c, d) += e.value * rho(a, b);
    }
    return result;
}

CompletenessDeficiency completeness_deficiency(const KrausSet& K) {
    const auto din = static_cast<Eigen::Index>(K.dim_in);
    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(din, din);
    for (const auto& A : K.operators) {
        sum.noalias() += A.adjoint() * A;
    }
    CompletenessDeficiency d;
    d.matrix = Eigen::MatrixXcd::Identity(din, din) - sum;
    const Eigen::MatrixXcd herm = 0.5 * (d.matrix + d.matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    d.largest = std::abs(ev(0)) > std::abs(ev(ev.size() - 1)) ? ev(0) : ev(ev.size() - 1);
    return d;
}

Eigen::MatrixXcd embedding_isometry(const KrausSet& K) {
    const auto din = static_cast<Eigen::Index>(K.dim_in);
    const auto dout = static_cast<Eigen::Index>(K.dim_out);
    Eigen::MatrixXcd E = Eigen::MatrixXcd::Zero(dout, din);
    if (K.truncation) {
        const ModeBasis in(K.truncation->max_in);
        const ModeBasis out(K.truncation->max_out);
        for (std::size_t a = 0; a < in.size(); ++a) {
            E(static_cast<Eigen::Index>(out.index_of(in[a]).value()), static_cast<Eigen::Index>(a)) = 1.0;
        }
    } else {
        for (Eigen::Index a = 0; a < din; ++a) {
            E(a, a) = 1.0;
        }
    }
    return E;
}

int dominant_oam_shift(const KrausSet& K, std::size_t k) {
    if (!K.truncation) {
        return 0;
    }
    const ModeBasis in(K.truncation->max_in);
    const ModeBasis out(K.truncation->max_out);
    const auto& A = K.operators.at(k);
    std::vector<double> weight(static_cast<std::size_t>(2 * (in.max_order() + out.max_order()) + 1), 0.0);
    const int offset = in.max_order() + out.max_order();
    for (Eigen::Index c = 0; c < A.rows(); ++c) {
        for (Eigen::Index a = 0; a < A.cols(); ++a) {
            const int shift = out[static_cast<std::size_t>(c)].l - in[static_cast<std::size_t>(a)].l;
            weight[static_cast<std::size_t>(shift + offset)] += std::norm(A(c, a));
        }
    }
    const auto best = std::max_element(weight.begin(), weight.end());
    return static_cast<int>(best - weight.begin()) - offset;
}

LeadingKrausReport leading_kraus_analysis(const KrausSet& K, const PairingOptions& options) {
    if (K.operators.empty()) {
        throw std::invalid_argument("leading Kraus analysis needs at least one operator");
    }
    LeadingKrausReport report;
    const Eigen::MatrixXcd E = embedding_isometry(K);
    const auto& A1 = K.operators.front();
    report.scale = (E.adjoint() * A1).trace() / static_cast<double>(K.dim_in);
    const Eigen::MatrixXcd residual = A1 - report.scale * E;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(residual);
    report.residual = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
    report.relative_residual =
        std::abs(report.scale) > 0.0 ? report.residual / std::abs(report.scale) : INFINITY;

    const double leading = K.eigenvalues.front();
    for (std::size_t k = 1; k + 1 < K.size(); ++k) {
        const double a = K.eigenvalues[k];
        const double b = K.eigenvalues[k + 1];
        if (b < options.significance_ratio * leading) {
            break;
        }
        if (std::abs(a - b) < options.degeneracy_ratio * leading) {
            report.pairs.push_back({k, k + 1, std::abs(a - b), dominant_oam_shift(K, k),
                                    dominant_oam_shift(K, k + 1)});
            ++k;
        }
    }
    return report;
}

void export_kraus(const KrausSet& K, const std::filesystem::path& path) {
    ByteWriter w;
    for (std::size_t k = 0; k < K.size(); ++k) {
        w.put_f64(K.eigenvalues[k]);
        const auto& A = K.operators[k];
        for (Eigen::Index r = 0; r < A.rows(); ++r) {
            for (Eigen::Index c = 0; c < A.cols(); ++c) {
                w.put_f64(A(r, c).real());
                w.put_f64(A(r, c).imag());
            }
        }
    }
    nlohmann::json j;
    j["format_version"] = kSuperopFormatVersion;
    j["dim_in"] = K.dim_in;
    j["dim_out"] = K.dim_out;
    j["operator_count"] = K.size();
    j["layout"] = "per operator: lambda (f64), then dim_out*dim_in complex (re, im f64) row-major";
    j["basis_order"] = kBasisOrder;
    j["eigenvalues"] = K.eigenvalues;
    j["clamped"] = K.clamped;
    j["dropped"] = K.dropped;
    if (K.truncation) {
        j["max_in"] = K.truncation->max_in;
        j["max_out"] = K.truncation->max_out;
    }
    if (K.metadata) {
        j["w0"] = K.metadata->geometry.waist();
        j["lambda"] = K.metadata->geometry.wavelength();
        j["cn2"] = K.metadata->turbulence.cn2;
        j["z"] = K.metadata->z;
        j["rel_tol"] = K.metadata->tolerance.rel_tol;
        j["abs_tol"] = K.metadata->tolerance.abs_tol;
    }
    j["sha256"] = sha256_hex(w.bytes());
    write_file_atomic(path, w.bytes());
    write_file_atomic(sidecar_path(path), j.dump(2) + "\n");
}

}  // namespace oamqec
