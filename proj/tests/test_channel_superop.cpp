#include <bit>
#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oamqec/channel_superop.hpp"

using namespace oamqec;

namespace {

ChannelParams channel(double z, double cn2 = 1e-14) {
    TurbulenceParams t;
    t.cn2 = cn2;
    return {BeamGeometry(0.01, 1e-6), t, z};
}

TEST(SelectionRule, ViolatingTupleIsExactZero) {
    const ElementIndex e{{2, 0}, {0, 0}, {0, 0}, {1, 0}};
    EXPECT_FALSE(satisfies_selection_rule(e));
    const auto ev = evaluate_superop_element(e, channel(500.0));
    EXPECT_EQ(ev.value, std::complex<double>(0.0, 0.0));
    EXPECT_EQ(ev.evaluations, 0u);
}

TEST(SelectionRule, RandomViolationsAreZero) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> l(-3, 3), p(0, 3);
    int checked = 0;
    while (checked < 50) {
        const ElementIndex e{{l(rng), p(rng)}, {l(rng), p(rng)}, {l(rng), p(rng)}, {l(rng), p(rng)}};
        if (satisfies_selection_rule(e)) {
            continue;
        }
        ++checked;
        const auto ev = evaluate_superop_element(e, channel(200.0));
        EXPECT_EQ(ev.value, std::complex<double>(0.0, 0.0));
        EXPECT_EQ(ev.evaluations, 0u);
    }
}

TEST(ConjugatePartner, Involution) {
    const ElementIndex e{{1, 0}, {0, 2}, {2, 1}, {1, 1}};
    const auto c = conjugate_partner(e);
    EXPECT_EQ(c, (ElementIndex{{0, 2}, {1, 0}, {1, 1}, {2, 1}}));
    EXPECT_EQ(conjugate_partner(c), e);
    EXPECT_EQ(max_mode_order(e), 4);
}

TEST(RadialCutoff, GrowsWithOrder) {
    const BeamGeometry g(0.01, 1e-6);
    const double w = beam_width(g, 500.0);
    EXPECT_DOUBLE_EQ(radial_cutoff(g, 500.0, 3), 5.0 * w);
    EXPECT_NEAR(radial_cutoff(g, 500.0, 18), w * (std::sqrt(19.0) + 2.5), 1e-15);
}

TEST(SuperopElement, ZeroTurbulenceIsIdentity) {
    const auto p = channel(500.0, 0.0);
    const ElementIndex diag{{1, 1}, {0, 1}, {1, 1}, {0, 1}};
    EXPECT_NEAR(std::abs(superop_element(diag, p) - 1.0), 0.0, 1e-6);
    const ElementIndex off{{1, 0}, {0, 1}, {1, 1}, {0, 1}};
    EXPECT_NEAR(std::abs(superop_element(off, p)), 0.0, 1e-6);
}

struct FrozenElement {
    ElementIndex index;
    double z;
    std::complex<double> value;
};

// Nested GSL quadrature at rel 1e-9; the (0,0) values also agree with a
// separate scipy evaluation to 1e-11.
const FrozenElement kFrozen[] = {
    {{{0, 0}, {0, 0}, {0, 0}, {0, 0}}, 500.0, {7.274079295295e-01, 0.0}},
    {{{0, 0}, {0, 0}, {0, 0}, {0, 0}}, 1000.0, {3.095185088603e-01, 0.0}},
    {{{1, 0}, {1, 0}, {0, 0}, {0, 0}}, 500.0, {8.622635055995e-02, 0.0}},
    {{{1, 1}, {0, 1}, {1, 0}, {0, 0}}, 200.0, {3.391194664987e-03, 0.0}},
    {{{-1, 0}, {1, 1}, {-1, 1}, {1, 0}}, 500.0, {-1.791129655388e-02, -2.246310997505e-02}},
};

TEST(SuperopElement, AdaptiveMatchesFrozenOracle) {
    for (const auto& f : kFrozen) {
        const auto v = superop_element(f.index, channel(f.z));
        EXPECT_NEAR(std::abs(v - f.value), 0.0, 1e-6) << to_string(f.index) << " z=" << f.z;
    }
    const auto v = superop_element(kFrozen[0].index, channel(500.0));
    EXPECT_GT(v.real(), 0.0);
    EXPECT_LT(v.real(), 1.0);
}

TEST(SuperopElement, KernelAssemblyMatchesFrozenOracle) {
    for (const auto& f : kFrozen) {
        const auto T = assemble_superop({1, 1}, channel(f.z));
        EXPECT_NEAR(std::abs(T.at(f.index) - f.value), 0.0, 1e-6) << to_string(f.index);
    }
}

TEST(SuperopElement, FailureCarriesPartial) {
    QuadratureTolerance tol;
    tol.rel_tol = 1e-14;
    tol.abs_tol = 0.0;
    tol.max_evaluations = 500;
    const ElementIndex e{{0, 0}, {0, 0}, {0, 0}, {0, 0}};
    try {
        (void)superop_element(e, channel(500.0), tol);
        FAIL() << "expected ElementFailure";
    } catch (const ElementFailure& err) {
        EXPECT_EQ(err.index(), e);
        EXPECT_FALSE(err.partial().converged);
        EXPECT_NEAR(err.partial().value.real(), 0.7274, 0.05);
    }
}

TEST(SuperopElement, MuReductionAgreesWithFullRange) {
    const auto params = channel(200.0);
    const CoherenceFactor coherence(params);
    const double w = beam_width(params.geometry, params.z);
    IntegrationOptions opts;
    opts.rel_tol = 1e-12;
    opts.abs_tol = 1e-14;
    for (double r : {0.1 * w, 0.8 * w, 2.0 * w}) {
        for (double rp : {0.3 * w, 1.1 * w}) {
            auto sep = [&](double mu) {
                return std::sqrt(std::max(r * r + rp * rp - 2 * r * rp * std::cos(mu), 0.0));
            };
            for (int m : {0, 1, -2, 5}) {
                const auto full = integrate_1d(
                    [&](double mu) { return std::exp(std::complex<double>(0.0, m * mu)) * coherence(sep(mu)); },
                    -std::numbers::pi, std::numbers::pi, opts);
                const auto half = integrate_1d(
                    [&](double mu) { return std::complex<double>(2.0 * std::cos(m * mu) * coherence(sep(mu))); },
                    0.0, std::numbers::pi, opts);
                EXPECT_NEAR(std::abs(full.value - half.value), 0.0, 1e-11);
                EXPECT_NEAR(full.value.imag(), 0.0, 1e-11);
            }
        }
    }
}

std::size_t brute_force_allowed(const TruncationSpec& t) {
    std::size_t n = 0;
    for (int a = -t.max_out; a <= t.max_out; ++a)
        for (int ap = 0; ap <= t.max_out; ++ap)
            for (int b = -t.max_out; b <= t.max_out; ++b)
                for (int bp = 0; bp <= t.max_out; ++bp)
                    for (int c = -t.max_in; c <= t.max_in; ++c)
                        for (int cp = 0; cp <= t.max_in; ++cp)
                            for (int d = -t.max_in; d <= t.max_in; ++d)
                                for (int dp = 0; dp <= t.max_in; ++dp)
                                    n += (b == d + a - c) ? 1 : 0;
    return n;
}

TEST(AllowedElements, CountMatchesEnumeration) {
    for (const TruncationSpec t : {TruncationSpec{1, 1}, TruncationSpec{1, 2}, TruncationSpec{2, 3}}) {
        const auto list = allowed_elements(t);
        EXPECT_EQ(list.size(), brute_force_allowed(t));
        EXPECT_TRUE(std::is_sorted(list.begin(), list.end()));
    }
}

TEST(Assemble, ShapeAndSelectionRule) {
    const TruncationSpec t{1, 2};
    const auto T = assemble_superop(t, channel(10.0));
    EXPECT_EQ(T.cols(), 36u);
    EXPECT_EQ(T.rows(), 225u);
    EXPECT_EQ(T.entry_count(), allowed_elements(t).size());
    for (const auto& e : T.entries()) {
        EXPECT_TRUE(satisfies_selection_rule(e.index));
    }
    EXPECT_EQ(T.at({{2, 0}, {0, 0}, {0, 0}, {1, 0}}), std::complex<double>(0.0, 0.0));
    EXPECT_GT(T.metadata().max_error_estimate, 0.0);
}

TEST(Assemble, HermiticityPairing) {
    const TruncationSpec t{1, 2};
    const auto T = assemble_superop(t, channel(500.0));
    double worst = 0.0;
    for (const auto& e : T.entries()) {
        worst = std::max(worst, std::abs(e.value - std::conj(T.at(conjugate_partner(e.index)))));
    }
    EXPECT_LE(worst, 2.0 * T.metadata().tolerance.abs_tol);
}

TEST(Assemble, ZeroTurbulenceIsEmbeddingIdentity) {
    const TruncationSpec t{2, 4};
    const auto T = assemble_superop(t, channel(500.0, 0.0));
    const auto I = identity_superop(t, T.metadata());
    double worst = 0.0;
    for (const auto& e : T.entries()) {
        worst = std::max(worst, std::abs(e.value - I.at(e.index)));
    }
    EXPECT_LE(worst, 1e-6);
}

double leakage(const SuperopMatrix& T, const ModeIndex& in) {
    std::complex<double> s = 0.0;
    for (const auto& o : T.output_basis()) {
        s += T.at({o, o, in, in});
    }
    return 1.0 - s.real();
}

TEST(Assemble, TraceDeficiencyShrinksWithOutputSpace) {
    const auto params = channel(500.0);
    const auto small = assemble_superop({1, 1}, params);
    const auto large = assemble_superop({1, 3}, params);
    for (const auto& in : small.input_basis()) {
        const double a = leakage(small, in);
        const double b = leakage(large, in);
        EXPECT_GE(a, -1e-6);
        EXPECT_LE(a, 1.0);
        EXPECT_GE(b, -1e-6);
        EXPECT_LT(b, a);
    }
}

TEST(Assemble, KernelMatchesSerialReference) {
    const TruncationSpec t{1, 1};
    const auto params = channel(500.0);
    const auto fast = assemble_superop(t, params);
    const auto ref = assemble_superop_reference(t, params);
    ASSERT_EQ(fast.entry_count(), ref.entry_count());
    for (std::size_t i = 0; i < fast.entry_count(); ++i) {
        EXPECT_EQ(fast.entries()[i].index, ref.entries()[i].index);
        EXPECT_NEAR(std::abs(fast.entries()[i].value - ref.entries()[i].value), 0.0, 1e-6);
    }
}

TEST(Assemble, AdaptiveMethodOption) {
    AssemblyOptions opts;
    opts.method = ElementMethod::adaptive_cubature;
    const auto T = assemble_superop({1, 1}, channel(1000.0), opts);
    EXPECT_NEAR(std::abs(T.at({{0, 0}, {0, 0}, {0, 0}, {0, 0}}) - kFrozen[1].value), 0.0, 1e-6);
    EXPECT_EQ(T.metadata().method, ElementMethod::adaptive_cubature);
}

TEST(Assemble, IndependentOfWorkerCount) {
    const TruncationSpec t{1, 2};
    AssemblyOptions one, three;
    one.workers = 1;
    three.workers = 3;
    const auto a = assemble_superop(t, channel(200.0), one);
    const auto b = assemble_superop(t, channel(200.0), three);
    ASSERT_EQ(a.entry_count(), b.entry_count());
    for (std::size_t i = 0; i < a.entry_count(); ++i) {
        EXPECT_EQ(std::bit_cast<std::uint64_t>(a.entries()[i].value.real()),
                  std::bit_cast<std::uint64_t>(b.entries()[i].value.real()));
        EXPECT_EQ(std::bit_cast<std::uint64_t>(a.entries()[i].value.imag()),
                  std::bit_cast<std::uint64_t>(b.entries()[i].value.imag()));
    }
}

TEST(Assemble, Cancellation) {
    request_cancellation();
    EXPECT_THROW(assemble_superop({1, 1}, channel(500.0)), AssemblyCancelled);
    clear_cancellation();
    EXPECT_NO_THROW(assemble_superop({1, 1}, channel(500.0)));
}

TEST(SuperopMatrix, RejectsInvalidTuples) {
    SuperopMatrix T({1, 2}, SuperopMetadata{});
    EXPECT_THROW(T.set({{2, 0}, {0, 0}, {0, 0}, {1, 0}}, 1.0), std::invalid_argument);
    EXPECT_THROW(T.set({{3, 0}, {3, 0}, {0, 0}, {0, 0}}, 1.0), std::invalid_argument);
    EXPECT_THROW(T.set({{0, 0}, {0, 0}, {2, 0}, {2, 0}}, 1.0), std::invalid_argument);
    T.set({{1, 0}, {1, 0}, {0, 0}, {0, 0}}, 0.5);
    T.set({{1, 0}, {1, 0}, {0, 0}, {0, 0}}, 0.25);
    EXPECT_EQ(T.entry_count(), 1u);
    EXPECT_EQ(T.at({{1, 0}, {1, 0}, {0, 0}, {0, 0}}), std::complex<double>(0.25, 0.0));
}

TEST(ElementMethod, Names) {
    EXPECT_EQ(element_method_from_string(to_string(ElementMethod::kernel_quadrature)),
              ElementMethod::kernel_quadrature);
    EXPECT_EQ(element_method_from_string("adaptive_cubature"), ElementMethod::adaptive_cubature);
    EXPECT_THROW(element_method_from_string("monte_carlo"), std::invalid_argument);
}

}  // namespace
