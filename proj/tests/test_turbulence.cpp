#include <cmath>

#include <gtest/gtest.h>

#include "oamqec/beam_modes.hpp"
#include "oamqec/turbulence.hpp"

using namespace oamqec;

namespace {

TEST(Kolmogorov, Coefficient) {
    EXPECT_NEAR(kolmogorov_coefficient(), 6.8839, 5e-5);
}

TEST(Kolmogorov, Examples) {
    EXPECT_EQ(phase_structure(0.0, 0.07), 0.0);
    EXPECT_NEAR(phase_structure(0.07, 0.07), 6.8839, 5e-5);
    EXPECT_NEAR(phase_structure(0.14, 0.07), 21.855, 5e-4);
}

TEST(Kolmogorov, ScalingLaw) {
    const double base = phase_structure(0.013, 0.05);
    for (double a : {0.1, 0.5, 2.0, 7.3}) {
        const double scaled = phase_structure(a * 0.013, 0.05);
        EXPECT_NEAR(scaled / (std::pow(a, 5.0 / 3.0) * base), 1.0, 1e-12);
    }
}

TEST(Kolmogorov, InterfaceContract) {
    const auto sf = make_structure_function(TurbulenceModel::kolmogorov);
    EXPECT_EQ((*sf)(0.0, 0.1), 0.0);
    double prev = 0.0;
    for (double s = 1e-4; s < 1.0; s *= 1.5) {
        const double v = (*sf)(s, 0.1);
        EXPECT_GE(v, prev);
        prev = v;
    }
}

TEST(Fried, Examples) {
    const BeamGeometry g(0.01, 1e-6);
    const double r1 = fried_parameter(1e-6, 1e-14, 1.0);
    EXPECT_NEAR(r1, 2.93721100800015, 1e-12);
    EXPECT_NEAR(beam_width(g, 1.0) / r1, 3.4046e-3, 5e-8);
    const double r500 = fried_parameter(1e-6, 1e-14, 500.0);
    EXPECT_NEAR(r500, 0.0705591181893643, 1e-14);
    EXPECT_NEAR(beam_width(g, 500.0) / r500, 2.6639e-1, 5e-6);
    EXPECT_THROW(fried_parameter(1e-6, 0.0, 10.0), std::domain_error);
    EXPECT_THROW(fried_parameter(1e-6, 1e-14, 0.0), std::domain_error);
}

TEST(Fried, DoublingPath) {
    for (double z : {1.0, 37.0, 500.0}) {
        const double a = fried_parameter(1e-6, 1e-14, z);
        const double b = fried_parameter(1e-6, 1e-14, 2.0 * z);
        EXPECT_NEAR(b / (a * std::pow(2.0, -0.6)), 1.0, 1e-12);
    }
}

TEST(Fried, ColumnHeaders) {
    const BeamGeometry g(0.01, 1e-6);
    const double zs[] = {1, 10, 200, 500, 1000};
    const double headers[] = {3.4046e-3, 1.3561e-2, 9.6954e-2, 2.6639e-1, 7.1673e-1};
    for (int i = 0; i < 5; ++i) {
        const double v = beam_width(g, zs[i]) / fried_parameter(1e-6, 1e-14, zs[i]);
        EXPECT_NEAR(v / headers[i], 1.0, 5e-5) << "z=" << zs[i];
    }
}

TEST(TurbulenceModel, Names) {
    EXPECT_EQ(to_string(TurbulenceModel::kolmogorov), "kolmogorov");
    EXPECT_EQ(turbulence_model_from_string("kolmogorov"), TurbulenceModel::kolmogorov);
    EXPECT_THROW(turbulence_model_from_string("hill"), std::invalid_argument);
}

}  // namespace
