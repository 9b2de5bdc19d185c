#pragma once

#include <memory>
#include <string>

namespace oamqec {

enum class TurbulenceModel { kolmogorov };

std::string to_string(TurbulenceModel model);
TurbulenceModel turbulence_model_from_string(const std::string& name);

/// Path-constant refractive-index structure constant (m^(-2/3)).
struct TurbulenceParams {
    double cn2 = 0.0;
    TurbulenceModel model = TurbulenceModel::kolmogorov;

    /// cn2 == 0 selects the turbulence-free channel.
    bool is_zero() const { return cn2 == 0.0; }
};

/// Phase structure function D(separation; r0). Implementations must return
/// 0 at zero separation and be non-decreasing in the separation.
class StructureFunction {
public:
    virtual ~StructureFunction() = default;
    virtual double operator()(double separation, double fried) const = 0;
};

class KolmogorovStructureFunction final : public StructureFunction {
public:
    double operator()(double separation, double fried) const override;
};

std::unique_ptr<StructureFunction> make_structure_function(TurbulenceModel model);

/// 2 (24/5 Gamma(6/5))^(5/6), computed rather than hard-coded.
double kolmogorov_coefficient();

/// r0 = (16.6 cn2 z / lambda^2)^(-3/5) for a constant-cn2 path. Throws
/// std::domain_error when cn2 or z is zero (r0 would be infinite).
double fried_parameter(double lambda, double cn2, double z);

/// Kolmogorov D_phi(delta_r) = kolmogorov_coefficient() (delta_r / r0)^(5/3).
double phase_structure(double delta_r, double r0);

}  // namespace oamqec
