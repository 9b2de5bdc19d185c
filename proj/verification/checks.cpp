#include "checks.hpp"

#include <cmath>
#include <random>

#include <fmt/format.h>

#include "oamqec/aqec.hpp"
#include "oamqec/channel_superop.hpp"
#include "oamqec/kraus.hpp"
#include "oracle.hpp"

namespace oamqec::oracle {

namespace {

constexpr double kW0 = 0.01;
constexpr double kLambda = 1e-6;
constexpr double kCn2 = 1e-14;

ChannelParams reference_channel(double z, double cn2 = kCn2) {
    TurbulenceParams turb;
    turb.cn2 = cn2;
    return {BeamGeometry(kW0, kLambda), turb, z};
}

CheckResult gram_check(int max_order, double z) {
    const Eigen::MatrixXcd G = radial_gram(BeamGeometry(kW0, kLambda), max_order, z);
    const double dev = (G - Eigen::MatrixXcd::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
    return {fmt::format("mode orthonormality (max order {}, z={} m)", max_order, z), dev < 1e-9,
            fmt::format("max |G - I| = {:.2e}", dev)};
}

CheckResult identity_check(const TruncationSpec& trunc, double z) {
    const auto params = reference_channel(z, 0.0);
    const SuperopMatrix T = assemble_superop(trunc, params);
    const SuperopMatrix I = identity_superop(trunc, T.metadata());
    double dev = 0.0;
    for (const auto& e : allowed_elements(trunc)) {
        dev = std::max(dev, std::abs(T.at(e) - I.at(e)));
    }
    const KrausSet K = kraus_decompose(rearrange(T));
    const double f = channel_fidelity(K, build_code(trunc));
    const bool ok = dev < 1e-6 && K.size() == 1 && std::abs(f - 1.0) < 1e-6;
    return {fmt::format("zero-turbulence identity ({},{})", trunc.max_in, trunc.max_out), ok,
            fmt::format("max |T - I| = {:.2e}, Kraus count {}, fidelity {:.12f}", dev, K.size(), f)};
}

CheckResult element_check(const TruncationSpec& trunc, double z, int samples, std::uint64_t seed) {
    const auto params = reference_channel(z);
    const SuperopMatrix T = assemble_superop(trunc, params);
    const auto allowed = allowed_elements(trunc);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, allowed.size() - 1);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const auto& e = allowed[pick(rng)];
        const auto ref = nested_superop_element(e, kW0, kLambda, kCn2, z);
        worst = std::max(worst, std::abs(T.at(e) - ref));
    }
    return {fmt::format("nested-quadrature elements ({},{}) z={} m, {} samples", trunc.max_in,
                        trunc.max_out, z, samples),
            worst < 1e-6, fmt::format("max deviation {:.2e}", worst)};
}

CheckResult kraus_action_check(const TruncationSpec& trunc, double z, int samples) {
    const SuperopMatrix T = assemble_superop(trunc, reference_channel(z));
    const KrausSet K = kraus_decompose(rearrange(T));
    std::mt19937_64 rng(11);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const Eigen::MatrixXcd rho =
            random_density_matrix(static_cast<Eigen::Index>(K.dim_in), rng);
        worst = std::max(worst, (apply_kraus(K, rho) - apply_superop(T, rho)).cwiseAbs().maxCoeff());
    }
    return {fmt::format("Kraus action vs superoperator ({},{}) z={} m", trunc.max_in, trunc.max_out, z),
            worst < 1e-8, fmt::format("max deviation {:.2e}", worst)};
}

CheckResult toy_recovery_check() {
    std::mt19937_64 rng(5);
    double worst = 0.0;
    for (double p : {0.5, 0.8, 0.97}) {
        const ToyChannel toy = correctable_toy_channel(p, rng);
        const double f = channel_fidelity(toy.kraus, toy.code);
        const double direct = entanglement_fidelity(
            transpose_recovery(toy.kraus, toy.code).kraus_operators, toy.kraus.operators, toy.code);
        const double syndrome =
            entanglement_fidelity(toy.syndrome_recovery, toy.kraus.operators, toy.code);
        worst = std::max({worst, std::abs(f - 1.0), std::abs(direct - 1.0), std::abs(syndrome - 1.0)});
    }
    return {"correctable toy channel recovery", worst < 1e-9,
            fmt::format("max |F - 1| = {:.2e}", worst)};
}

CheckResult inverse_sqrt_check() {
    std::mt19937_64 rng(9);
    double worst = 0.0;
    for (Eigen::Index rank : {1, 3, 6}) {
        const Eigen::MatrixXcd M = random_psd(8, rank, rng);
        worst = std::max(worst, (inverse_sqrt_psd(M) - inverse_sqrt_svd(M, kDefaultRankTol))
                                    .cwiseAbs()
                                    .maxCoeff());
    }
    return {"pseudoinverse square root vs SVD", worst < 1e-8,
            fmt::format("max deviation {:.2e}", worst)};
}

CheckResult table_spot_check() {
    const TruncationSpec trunc{1, 1};
    const KrausSet K = kraus_decompose(rearrange(assemble_superop(trunc, reference_channel(500.0))));
    const double f = channel_fidelity(K, build_code(trunc));
    return {"reference fidelity (1,1) z=500 m", std::abs(f - 0.4749) <= 0.02,
            fmt::format("fidelity {:.4f}, reference 0.4749", f)};
}

}  // namespace

std::vector<CheckResult> run_verification(VerifyLevel level,
                                          const std::function<void(const CheckResult&)>& on_result) {
    std::vector<std::function<CheckResult()>> checks{
        [] { return gram_check(3, 500.0); },
        [] { return identity_check({1, 2}, 500.0); },
        [] { return element_check({1, 1}, 10.0, 3, 1); },
        [] { return kraus_action_check({1, 2}, 200.0, 5); },
        [] { return toy_recovery_check(); },
        [] { return inverse_sqrt_check(); },
    };
    if (level == VerifyLevel::full) {
        checks.push_back([] { return gram_check(6, 1000.0); });
        checks.push_back([] { return element_check({1, 3}, 500.0, 3, 2); });
        checks.push_back([] { return kraus_action_check({2, 4}, 500.0, 10); });
        checks.push_back([] { return table_spot_check(); });
    }
    std::vector<CheckResult> results;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        CheckResult r;
        try {
            r = checks[i]();
        } catch (const std::exception& e) {
            r.name = fmt::format("check {}", i + 1);
            r.passed = false;
            r.detail = std::string("threw: ") + e.what();
        }
        if (on_result) {
            on_result(r);
        }
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace oamqec::oracle
