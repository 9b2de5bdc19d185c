#include "oamqec/turbulence.hpp"

#include <cmath>
#include <stdexcept>

namespace oamqec {

std::string to_string(TurbulenceModel model) {
    switch (model) {
        case TurbulenceModel::kolmogorov:
            return "kolmogorov";
    }
    throw std::invalid_argument("unknown turbulence model");
}

TurbulenceModel turbulence_model_from_string(const std::string& name) {
    if (name == "kolmogorov") {
        return TurbulenceModel::kolmogorov;
    }
    throw std::invalid_argument("unknown turbulence model: " + name);
}

double kolmogorov_coefficient() {
    static const double coefficient = 2.0 * std::pow(24.0 / 5.0 * std::tgamma(6.0 / 5.0), 5.0 / 6.0);
    return coefficient;
}

double fried_parameter(double lambda, double cn2, double z) {
    if (!(lambda > 0.0)) {
        throw std::invalid_argument("wavelength must be positive");
    }
    if (cn2 < 0.0 || z < 0.0) {
        throw std::invalid_argument("cn2 and z must be non-negative");
    }
    if (cn2 == 0.0 || z == 0.0) {
        throw std::domain_error("Fried parameter is infinite without turbulence");
    }
    return std::pow(16.6 * cn2 * z / (lambda * lambda), -3.0 / 5.0);
}

double phase_structure(double delta_r, double r0) {
    if (delta_r < 0.0 || !(r0 > 0.0)) {
        throw std::invalid_argument("phase_structure needs delta_r >= 0 and r0 > 0");
    }
    if (delta_r == 0.0) {
        return 0.0;
    }
    return kolmogorov_coefficient() * std::pow(delta_r / r0, 5.0 / 3.0);
}

double KolmogorovStructureFunction::operator()(double separation, double fried) const {
    return phase_structure(separation, fried);
}

std::unique_ptr<StructureFunction> make_structure_function(TurbulenceModel model) {
    switch (model) {
        case TurbulenceModel::kolmogorov:
            return std::make_unique<KolmogorovStructureFunction>();
    }
    throw std::invalid_argument("unknown turbulence model");
}

}  // namespace oamqec
