#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "oamqec/beam_modes.hpp"

namespace oamqec {

enum class SpaceTag { input, output };

/// A pure or mixed state over a truncated mode basis, observed at distance z.
class StateOnModes {
public:
    static StateOnModes pure(int max_order, Eigen::VectorXcd coefficients, double z,
                             SpaceTag space = SpaceTag::input);
    static StateOnModes mixed(int max_order, Eigen::MatrixXcd density, double z,
                              SpaceTag space = SpaceTag::input);

    bool is_pure() const { return coefficients_.has_value(); }
    const ModeBasis& basis() const { return basis_; }
    SpaceTag space() const { return space_; }
    double z() const { return z_; }
    const Eigen::VectorXcd& coefficients() const { return *coefficients_; }
    const Eigen::MatrixXcd& density() const { return *density_; }

private:
    StateOnModes(int max_order, double z, SpaceTag space);

    ModeBasis basis_;
    double z_;
    SpaceTag space_;
    std::optional<Eigen::VectorXcd> coefficients_;
    std::optional<Eigen::MatrixXcd> density_;
};

/// Square grid of points x points spanning [-half_width, half_width]^2 with
/// half_width = half_width_in_w * w(z).
struct GridSpec {
    std::size_t points = 256;
    double half_width_in_w = 3.0;

    void validate() const;
};

struct FieldGrid {
    std::vector<double> x;
    std::vector<double> y;
    /// Row-major: intensity[iy * x.size() + ix].
    std::vector<double> intensity;
    /// Complex amplitude, pure states only.
    std::optional<std::vector<std::complex<double>>> amplitude;

    double spacing_x() const { return x.size() > 1 ? x[1] - x[0] : 0.0; }
    double spacing_y() const { return y.size() > 1 ? y[1] - y[0] : 0.0; }
    /// Riemann sum of the intensity over the grid.
    double integrated_intensity() const;
};

/// Rows are evaluated in parallel; the result does not depend on the thread count.
FieldGrid state_intensity_grid(const StateOnModes& state, const BeamGeometry& geom,
                               const GridSpec& spec = {});

/// "x,y,intensity" (plus ",re,im" for pure states), row-major, 9 significant digits.
std::string field_grid_csv(const FieldGrid& grid);
void write_field_grid_csv(const FieldGrid& grid, const std::filesystem::path& path);

}  // namespace oamqec
