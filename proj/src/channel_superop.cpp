#include "oamqec/channel_superop.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <omp.h>

#include <fmt/format.h>

namespace oamqec {

namespace {

std::atomic<bool> g_cancel{false};

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void throw_if_cancelled() {
    if (g_cancel.load(std::memory_order_relaxed)) {
        throw AssemblyCancelled();
    }
}

class ThreadCountScope {
public:
    explicit ThreadCountScope(int workers) : previous_(omp_get_max_threads()) {
        if (workers > 0) {
            omp_set_num_threads(workers);
        }
    }
    ~ThreadCountScope() { omp_set_num_threads(previous_); }
    ThreadCountScope(const ThreadCountScope&) = delete;
    ThreadCountScope& operator=(const ThreadCountScope&) = delete;

private:
    int previous_;
};

// Relative Gouy-phase winding of a tuple: conj(R_a) R_b R_c conj(R_d).
int gouy_winding(const ElementIndex& e) {
    return e.in_row.order() - e.out_row.order() + e.out_col.order() - e.in_col.order();
}

// First failure by tuple order so the reported error does not depend on scheduling.
struct FailureSlot {
    std::optional<ElementFailure> failure;
    std::atomic<bool> cancelled{false};

    void record(const ElementFailure& f) {
#pragma omp critical(oamqec_failure_slot)
        {
            if (!failure || f.index() < failure->index()) {
                failure.emplace(f);
            }
        }
    }
    void rethrow() const {
        if (cancelled) {
            throw AssemblyCancelled();
        }
        if (failure) {
            throw *failure;
        }
    }
};

}  // namespace

std::string to_string(const ElementIndex& e) {
    return fmt::format("({},{};{},{} <- {},{};{},{})", e.out_row.l, e.out_row.p, e.out_col.l,
                       e.out_col.p, e.in_row.l, e.in_row.p, e.in_col.l, e.in_col.p);
}

bool satisfies_selection_rule(const ElementIndex& e) {
    return e.out_col.l == e.in_col.l + e.out_row.l - e.in_row.l;
}

ElementIndex conjugate_partner(const ElementIndex& e) {
    return {e.out_col, e.out_row, e.in_col, e.in_row};
}

int max_mode_order(const ElementIndex& e) {
    return std::max({e.out_row.order(), e.out_col.order(), e.in_row.order(), e.in_col.order()});
}

std::optional<double> ChannelParams::fried() const {
    if (turbulence.is_zero()) {
        return std::nullopt;
    }
    return fried_parameter(geometry.wavelength(), turbulence.cn2, z);
}

double ChannelParams::w_over_r0() const {
    const auto r0 = fried();
    return r0 ? beam_width(geometry, z) / *r0 : 0.0;
}

double radial_cutoff(const BeamGeometry& geom, double z, int max_order) {
    const double factor = std::max(5.0, std::sqrt(static_cast<double>(max_order) + 1.0) + 2.5);
    return factor * beam_width(geom, z);
}

CoherenceFactor::CoherenceFactor(const ChannelParams& params) {
    if (const auto r0 = params.fried()) {
        coefficient_ = kolmogorov_coefficient() / std::pow(*r0, 5.0 / 3.0);
    }
}

double CoherenceFactor::operator()(double separation) const {
    if (coefficient_ == 0.0 || separation <= 0.0) {
        return 1.0;
    }
    return std::exp(-0.5 * coefficient_ * std::pow(separation, 5.0 / 3.0));
}

ElementFailure::ElementFailure(const ElementIndex& index, const IntegrationResult& partial)
    : std::runtime_error(fmt::format("element {} did not converge (estimate {}{:+}i, error {:.3g}, "
                                     "{} evaluations)",
                                     to_string(index), partial.value.real(), partial.value.imag(),
                                     partial.error_estimate, partial.evaluations)),
      index_(index),
      partial_(partial) {}

ElementEvaluation evaluate_superop_element(const ElementIndex& index, const ChannelParams& params,
                                           const QuadratureTolerance& tol) {
    if (!satisfies_selection_rule(index)) {
        return {};
    }
    const auto& geom = params.geometry;
    const double z = params.z;
    const double r_max = radial_cutoff(geom, z, max_mode_order(index));
    const CoherenceFactor coherence(params);
    const double m = static_cast<double>(index.in_row.l - index.out_row.l);

    // mu only enters through cos(mu): the [-pi, pi] integral folds onto [0, pi]
    // with weight 2 cos(m mu). Prefactor 1/(2 pi).
    IntegrationRequest<3> req;
    req.lower = {0.0, 0.0, 0.0};
    req.upper = {r_max, r_max, std::numbers::pi};
    req.options = tol.options();
    req.integrand = [&](const Point<3>& x) {
        const double r = x[0];
        const double rp = x[1];
        const double mu = x[2];
        const std::complex<double> first =
            std::conj(radial_mode(geom, index.out_row, r, z)) * radial_mode(geom, index.in_row, r, z);
        const std::complex<double> second =
            radial_mode(geom, index.out_col, rp, z) * std::conj(radial_mode(geom, index.in_col, rp, z));
        const double sep2 = std::max(r * r + rp * rp - 2.0 * r * rp * std::cos(mu), 0.0);
        const double angular = 2.0 * std::cos(m * mu) * coherence(std::sqrt(sep2));
        return (r * rp * angular / kTwoPi) * first * second;
    };
    const IntegrationResult result = integrate_3d(req);
    if (!result.converged) {
        throw ElementFailure(index, result);
    }
    return {result.value, result.error_estimate, result.evaluations};
}

std::complex<double> superop_element(const ElementIndex& index, const ChannelParams& params,
                                     const QuadratureTolerance& tol) {
    return evaluate_superop_element(index, params, tol).value;
}

std::string to_string(ElementMethod method) {
    switch (method) {
        case ElementMethod::kernel_quadrature:
            return "kernel_quadrature";
        case ElementMethod::adaptive_cubature:
            return "adaptive_cubature";
    }
    throw std::invalid_argument("unknown element method");
}

ElementMethod element_method_from_string(const std::string& name) {
    if (name == "kernel_quadrature" || name == "kernel") {
        return ElementMethod::kernel_quadrature;
    }
    if (name == "adaptive_cubature" || name == "adaptive") {
        return ElementMethod::adaptive_cubature;
    }
    throw std::invalid_argument("unknown element method: " + name);
}

SuperopMatrix::SuperopMatrix(TruncationSpec trunc, SuperopMetadata metadata)
    : trunc_(trunc),
      metadata_(std::move(metadata)),
      in_basis_((trunc.validate(), trunc.max_in)),
      out_basis_(trunc.max_out) {}

void SuperopMatrix::check_index(const ElementIndex& index) const {
    if (!out_basis_.contains(index.out_row) || !out_basis_.contains(index.out_col) ||
        !in_basis_.contains(index.in_row) || !in_basis_.contains(index.in_col)) {
        throw std::invalid_argument("element " + to_string(index) + " is outside the truncation");
    }
    if (!satisfies_selection_rule(index)) {
        throw std::invalid_argument("element " + to_string(index) +
                                    " violates the OAM selection rule");
    }
}

void SuperopMatrix::set(const ElementIndex& index, std::complex<double> value) {
    check_index(index);
    auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                               [](const Entry& e, const ElementIndex& i) { return e.index < i; });
    if (it != entries_.end() && it->index == index) {
        it->value = value;
    } else {
        entries_.insert(it, Entry{index, value});
    }
}

void SuperopMatrix::assign(std::vector<Entry> entries) {
    for (const auto& e : entries) {
        check_index(e.index);
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.index < b.index; });
    // Later duplicates win, matching repeated set() calls.
    std::vector<Entry> unique;
    unique.reserve(entries.size());
    for (auto& e : entries) {
        if (!unique.empty() && unique.back().index == e.index) {
            unique.back() = e;
        } else {
            unique.push_back(e);
        }
    }
    entries_ = std::move(unique);
}

std::complex<double> SuperopMatrix::at(const ElementIndex& index) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                               [](const Entry& e, const ElementIndex& i) { return e.index < i; });
    if (it != entries_.end() && it->index == index) {
        return it->value;
    }
    return {};
}

std::size_t SuperopMatrix::row_of(const ModeIndex& out_row, const ModeIndex& out_col) const {
    return out_basis_.index_of(out_row).value() * out_basis_.size() +
           out_basis_.index_of(out_col).value();
}

std::size_t SuperopMatrix::col_of(const ModeIndex& in_row, const ModeIndex& in_col) const {
    return in_basis_.index_of(in_row).value() * in_basis_.size() +
           in_basis_.index_of(in_col).value();
}

std::vector<ElementIndex> allowed_elements(const TruncationSpec& trunc) {
    trunc.validate();
    const ModeBasis in(trunc.max_in);
    const ModeBasis out(trunc.max_out);
    std::vector<ElementIndex> result;
    for (const auto& a : out) {
        for (const auto& c : out) {
            for (const auto& b : in) {
                for (const auto& d : in) {
                    ElementIndex e{a, c, b, d};
                    if (satisfies_selection_rule(e)) {
                        result.push_back(e);
                    }
                }
            }
        }
    }
    return result;  // already lexicographic: loops follow the tuple order
}

namespace {

// Tabulated azimuthal kernel K_m(r_i, r_j) = 2 int_0^pi cos(m mu) C(|r - r'|) dmu
// for m = 0..max_shift on a composite Gauss-Legendre radial grid.
class AzimuthalKernel {
public:
    AzimuthalKernel(const ChannelParams& params, const GaussLegendreRule& grid, int max_shift,
                    const QuadratureTolerance& tol)
        : n_(grid.nodes.size()), shifts_(static_cast<std::size_t>(max_shift) + 1) {
        table_.assign(shifts_ * n_ * n_, 0.0);
        const CoherenceFactor coherence(params);
        if (params.turbulence.is_zero()) {
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t j = 0; j < n_; ++j) {
                    at(0, i, j) = kTwoPi;
                }
            }
            return;
        }
        IntegrationOptions opts;
        opts.rel_tol = std::min(1e-11, tol.rel_tol);
        opts.abs_tol = std::min(1e-13, tol.abs_tol);
        opts.max_evaluations = 2'000'000;

        const auto& r = grid.nodes;
        std::atomic<bool> failed{false};
        const auto n = static_cast<long>(n_);
#pragma omp parallel for schedule(dynamic, 4)
        for (long ii = 0; ii < n; ++ii) {
            if (g_cancel.load(std::memory_order_relaxed)) {
                continue;
            }
            const auto i = static_cast<std::size_t>(ii);
            for (std::size_t j = i; j < n_; ++j) {
                const double ri = r[i];
                const double rj = r[j];
                auto integrand = [&](double mu, std::span<double> out) {
                    const double sep2 = std::max(ri * ri + rj * rj - 2.0 * ri * rj * std::cos(mu), 0.0);
                    const double c = 2.0 * coherence(std::sqrt(sep2));
                    // cos(m mu) by Chebyshev recurrence
                    const double c1 = std::cos(mu);
                    double prev = 1.0;
                    double curr = c1;
                    out[0] = c;
                    for (std::size_t m = 1; m < out.size(); ++m) {
                        out[m] = c * curr;
                        const double next = 2.0 * c1 * curr - prev;
                        prev = curr;
                        curr = next;
                    }
                };
                const auto res = integrate_1d_vector(integrand, shifts_, 0.0, std::numbers::pi, opts);
                if (!res.converged) {
                    failed = true;
                }
#pragma omp critical(oamqec_kernel_error)
                max_error_ = std::max(max_error_, res.error_estimate);
                for (std::size_t m = 0; m < shifts_; ++m) {
                    at(m, i, j) = res.values[m];
                    at(m, j, i) = res.values[m];
                }
            }
        }
        throw_if_cancelled();
        if (failed) {
            throw std::runtime_error("azimuthal kernel integration did not converge");
        }
    }

    double& at(std::size_t m, std::size_t i, std::size_t j) { return table_[(m * n_ + i) * n_ + j]; }
    const double* slice(std::size_t m) const { return table_.data() + m * n_ * n_; }
    std::size_t size() const { return n_; }
    double max_error() const { return max_error_; }

private:
    double max_error_ = 0.0;
    std::size_t n_;
    std::size_t shifts_;
    std::vector<double> table_;
};

std::vector<std::size_t> canonical_positions(const std::vector<ElementIndex>& allowed) {
    std::vector<std::size_t> positions;
    positions.reserve(allowed.size() / 2 + 1);
    for (std::size_t k = 0; k < allowed.size(); ++k) {
        if (!(conjugate_partner(allowed[k]) < allowed[k])) {
            positions.push_back(k);
        }
    }
    return positions;
}

SuperopMatrix finish(const TruncationSpec& trunc, const ChannelParams& params,
                     const AssemblyOptions& options, const std::vector<ElementIndex>& allowed,
                     const std::vector<std::size_t>& canonical,
                     const std::vector<std::complex<double>>& values,
                     const std::vector<double>& errors) {
    SuperopMetadata meta;
    meta.geometry = params.geometry;
    meta.turbulence = params.turbulence;
    meta.z = params.z;
    meta.tolerance = options.tolerance;
    meta.method = options.method;
    std::vector<SuperopMatrix::Entry> entries;
    entries.reserve(allowed.size());
    for (std::size_t k = 0; k < canonical.size(); ++k) {
        const ElementIndex& e = allowed[canonical[k]];
        entries.push_back({e, values[k]});
        const ElementIndex partner = conjugate_partner(e);
        if (partner != e) {
            entries.push_back({partner, std::conj(values[k])});
        }
        meta.max_error_estimate = std::max(meta.max_error_estimate, errors[k]);
    }
    SuperopMatrix T(trunc, meta);
    T.assign(std::move(entries));
    return T;
}

SuperopMatrix assemble_with_kernel(const TruncationSpec& trunc, const ChannelParams& params,
                                   const AssemblyOptions& options,
                                   const std::vector<ElementIndex>& allowed,
                                   const std::vector<std::size_t>& canonical) {
    const ModeBasis in(trunc.max_in);
    const ModeBasis out(trunc.max_out);
    const auto& geom = params.geometry;
    const double z = params.z;
    const double r_max = radial_cutoff(geom, z, 3 * trunc.max_out);
    const GaussLegendreRule grid =
        composite_gauss_legendre(0.0, r_max, options.grid.panels, options.grid.order);
    const std::size_t n = grid.nodes.size();
    const int max_shift = trunc.max_in + trunc.max_out;
    const AzimuthalKernel kernel(params, grid, max_shift, options.tolerance);

    // Radial envelopes on the grid for every output mode (inputs are a subset).
    std::vector<std::vector<double>> envelope(out.size(), std::vector<double>(n));
    for (std::size_t a = 0; a < out.size(); ++a) {
        for (std::size_t i = 0; i < n; ++i) {
            envelope[a][i] = radial_envelope(geom, out[a], grid.nodes[i], z);
        }
    }
    const std::size_t din = in.size();
    // weighted[a * din + b][i] = w_i r_i env_a(r_i) env_b(r_i), a output, b input mode.
    std::vector<double> weighted(out.size() * din * n);
    std::vector<double> contracted(out.size() * din * n);
    const auto pair_count = static_cast<long>(out.size() * din);
#pragma omp parallel for schedule(static)
    for (long pk = 0; pk < pair_count; ++pk) {
        const auto pair = static_cast<std::size_t>(pk);
        const std::size_t a = pair / din;
        const std::size_t b = pair % din;
        const std::size_t b_out = out.index_of(in[b]).value();
        double* f = weighted.data() + pair * n;
        for (std::size_t i = 0; i < n; ++i) {
            f[i] = grid.weights[i] * grid.nodes[i] * envelope[a][i] * envelope[b_out][i];
        }
        const auto shift = static_cast<std::size_t>(std::abs(in[b].l - out[a].l));
        const double* k = kernel.slice(shift);
        double* u = contracted.data() + pair * n;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += k[i * n + j] * f[j];
            }
            u[i] = acc;
        }
    }

    const double g = gouy_phase(geom, z);
    std::vector<std::complex<double>> values(canonical.size());
    std::vector<double> errors(canonical.size(), kernel.max_error());
    const auto count = static_cast<long>(canonical.size());
#pragma omp parallel for schedule(static)
    for (long kk = 0; kk < count; ++kk) {
        const auto k = static_cast<std::size_t>(kk);
        const ElementIndex& e = allowed[canonical[k]];
        const std::size_t first = out.index_of(e.out_row).value() * din + in.index_of(e.in_row).value();
        const std::size_t second = out.index_of(e.out_col).value() * din + in.index_of(e.in_col).value();
        const double* u = contracted.data() + first * n;
        const double* h = weighted.data() + second * n;
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += u[i] * h[i];
        }
        values[k] = (acc / kTwoPi) * std::polar(1.0, g * gouy_winding(e));
    }
    return finish(trunc, params, options, allowed, canonical, values, errors);
}

SuperopMatrix assemble_with_cubature(const TruncationSpec& trunc, const ChannelParams& params,
                                     const AssemblyOptions& options,
                                     const std::vector<ElementIndex>& allowed,
                                     const std::vector<std::size_t>& canonical) {
    std::vector<std::complex<double>> values(canonical.size());
    std::vector<double> errors(canonical.size(), 0.0);
    FailureSlot slot;
    const auto count = static_cast<long>(canonical.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long kk = 0; kk < count; ++kk) {
        if (g_cancel.load(std::memory_order_relaxed)) {
            slot.cancelled = true;
            continue;
        }
        const auto k = static_cast<std::size_t>(kk);
        try {
            const auto eval = evaluate_superop_element(allowed[canonical[k]], params, options.tolerance);
            values[k] = eval.value;
            errors[k] = eval.error_estimate;
        } catch (const ElementFailure& f) {
            slot.record(f);
        }
    }
    slot.rethrow();
    return finish(trunc, params, options, allowed, canonical, values, errors);
}

}  // namespace

SuperopMatrix assemble_superop(const TruncationSpec& trunc, const ChannelParams& params,
                               const AssemblyOptions& options) {
    trunc.validate();
    if (params.z < 0.0) {
        throw std::invalid_argument("propagation distance must be non-negative");
    }
    options.tolerance.options().validate();
    throw_if_cancelled();
    ThreadCountScope threads(options.workers);
    const auto allowed = allowed_elements(trunc);
    const auto canonical = canonical_positions(allowed);
    switch (options.method) {
        case ElementMethod::kernel_quadrature:
            return assemble_with_kernel(trunc, params, options, allowed, canonical);
        case ElementMethod::adaptive_cubature:
            return assemble_with_cubature(trunc, params, options, allowed, canonical);
    }
    throw std::invalid_argument("unknown element method");
}

SuperopMatrix assemble_superop_reference(const TruncationSpec& trunc,
                                         const ChannelParams& params,
                                         const QuadratureTolerance& tol) {
    trunc.validate();
    SuperopMetadata meta;
    meta.geometry = params.geometry;
    meta.turbulence = params.turbulence;
    meta.z = params.z;
    meta.tolerance = tol;
    meta.method = ElementMethod::adaptive_cubature;
    std::vector<SuperopMatrix::Entry> entries;
    for (const auto& e : allowed_elements(trunc)) {
        throw_if_cancelled();
        const auto eval = evaluate_superop_element(e, params, tol);
        meta.max_error_estimate = std::max(meta.max_error_estimate, eval.error_estimate);
        entries.push_back({e, eval.value});
    }
    SuperopMatrix T(trunc, meta);
    T.assign(std::move(entries));
    return T;
}

SuperopMatrix identity_superop(const TruncationSpec& trunc, const SuperopMetadata& metadata) {
    std::vector<SuperopMatrix::Entry> entries;
    for (const auto& e : allowed_elements(trunc)) {
        const bool diagonal = e.out_row == e.in_row && e.out_col == e.in_col;
        entries.push_back({e, diagonal ? 1.0 : 0.0});
    }
    SuperopMatrix T(trunc, metadata);
    T.assign(std::move(entries));
    return T;
}

void request_cancellation() { g_cancel.store(true); }
void clear_cancellation() { g_cancel.store(false); }
bool cancellation_requested() { return g_cancel.load(); }

}  // namespace oamqec
