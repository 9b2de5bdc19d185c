#include "oamqec/field_grid.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "oamqec/io_util.hpp"

namespace oamqec {

StateOnModes::StateOnModes(int max_order, double z, SpaceTag space)
    : basis_(max_order), z_(z), space_(space) {
    if (!std::isfinite(z) || z < 0.0) {
        throw std::invalid_argument("state distance z must be finite and non-negative");
    }
}

StateOnModes StateOnModes::pure(int max_order, Eigen::VectorXcd coefficients, double z,
                                SpaceTag space) {
    StateOnModes s(max_order, z, space);
    if (coefficients.size() != static_cast<Eigen::Index>(s.basis_.size())) {
        throw std::invalid_argument("coefficient vector does not match the mode basis");
    }
    if (std::abs(coefficients.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("pure state must have unit norm");
    }
    s.coefficients_ = std::move(coefficients);
    return s;
}

StateOnModes StateOnModes::mixed(int max_order, Eigen::MatrixXcd density, double z,
                                 SpaceTag space) {
    StateOnModes s(max_order, z, space);
    const auto n = static_cast<Eigen::Index>(s.basis_.size());
    if (density.rows() != n || density.cols() != n) {
        throw std::invalid_argument("density matrix does not match the mode basis");
    }
    const double scale = std::max(1.0, density.cwiseAbs().maxCoeff());
    if ((density - density.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
        throw std::invalid_argument("density matrix must be Hermitian");
    }
    if (density.trace().real() > 1.0 + 1e-9) {
        throw std::invalid_argument("density matrix trace exceeds 1");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(0.5 * (density + density.adjoint()),
                                                           Eigen::EigenvaluesOnly);
    if (solver.eigenvalues()(0) < -1e-9 * scale) {
        throw std::invalid_argument("density matrix must be positive semidefinite");
    }
    s.density_ = std::move(density);
    return s;
}

void GridSpec::validate() const {
    if (points < 2) {
        throw std::invalid_argument("grid needs at least 2 points per axis");
    }
    if (!std::isfinite(half_width_in_w) || half_width_in_w <= 0.0) {
        throw std::invalid_argument("grid half width must be positive and finite");
    }
}

double FieldGrid::integrated_intensity() const {
    double sum = 0.0;
    for (double v : intensity) {
        sum += v;
    }
    return sum * spacing_x() * spacing_y();
}

FieldGrid state_intensity_grid(const StateOnModes& state, const BeamGeometry& geom,
                               const GridSpec& spec) {
    spec.validate();
    const double half = spec.half_width_in_w * beam_width(geom, state.z());
    const std::size_t n = spec.points;
    FieldGrid grid;
    grid.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        grid.x[i] = -half + 2.0 * half * static_cast<double>(i) / static_cast<double>(n - 1);
    }
    grid.y = grid.x;
    grid.intensity.assign(n * n, 0.0);
    if (state.is_pure()) {
        grid.amplitude.emplace(n * n);
    }
    const auto& basis = state.basis();
    const auto d = static_cast<Eigen::Index>(basis.size());

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t iy = 0; iy < static_cast<std::ptrdiff_t>(n); ++iy) {
        Eigen::VectorXcd f(d);
        Eigen::VectorXcd g(d);
        for (std::size_t ix = 0; ix < n; ++ix) {
            const double x = grid.x[ix];
            const double y = grid.y[static_cast<std::size_t>(iy)];
            const double r = std::hypot(x, y);
            const double theta = std::atan2(y, x);
            for (Eigen::Index a = 0; a < d; ++a) {
                f(a) = mode_field(geom, basis[static_cast<std::size_t>(a)], r, theta, state.z());
            }
            const std::size_t k = static_cast<std::size_t>(iy) * n + ix;
            if (state.is_pure()) {
                const std::complex<double> amp = f.transpose() * state.coefficients();
                (*grid.amplitude)[k] = amp;
                grid.intensity[k] = std::norm(amp);
            } else {
                g.noalias() = state.density() * f.conjugate();
                const std::complex<double> v = f.transpose() * g;
                grid.intensity[k] = std::max(0.0, v.real());
            }
        }
    }
    return grid;
}

std::string field_grid_csv(const FieldGrid& grid) {
    std::string out = grid.amplitude ? "x,y,intensity,re,im\n" : "x,y,intensity\n";
    const std::size_t nx = grid.x.size();
    for (std::size_t iy = 0; iy < grid.y.size(); ++iy) {
        for (std::size_t ix = 0; ix < nx; ++ix) {
            const std::size_t k = iy * nx + ix;
            if (grid.amplitude) {
                const auto a = (*grid.amplitude)[k];
                fmt::format_to(std::back_inserter(out), "{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n",
                               grid.x[ix], grid.y[iy], grid.intensity[k], a.real(), a.imag());
            } else {
                fmt::format_to(std::back_inserter(out), "{:.9g},{:.9g},{:.9g}\n", grid.x[ix],
                               grid.y[iy], grid.intensity[k]);
            }
        }
    }
    return out;
}

void write_field_grid_csv(const FieldGrid& grid, const std::filesystem::path& path) {
    write_file_atomic(path, field_grid_csv(grid));
}

}  // namespace oamqec
