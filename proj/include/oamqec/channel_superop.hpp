#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oamqec/beam_modes.hpp"
#include "oamqec/quadrature.hpp"
#include "oamqec/turbulence.hpp"

namespace oamqec {

/// Index tuple of a superoperator element T_{(out_row, out_col), (in_row, in_col)}:
/// out_row = (l~, p~), out_col = (l~', p~'), in_row = (l, p), in_col = (l', p').
/// It maps the input dyad |l,p><l',p'| onto the output dyad |l~,p~><l~',p~'|.
struct ElementIndex {
    ModeIndex out_row;
    ModeIndex out_col;
    ModeIndex in_row;
    ModeIndex in_col;

    friend auto operator<=>(const ElementIndex&, const ElementIndex&) = default;
};

std::string to_string(const ElementIndex& e);

/// OAM-difference conservation: l~' = l' + l~ - l.
bool satisfies_selection_rule(const ElementIndex& e);

/// The element related to e by Hermiticity: T(e') = conj(T(e)).
ElementIndex conjugate_partner(const ElementIndex& e);

/// Largest 2p+|l| among the four modes of the tuple.
int max_mode_order(const ElementIndex& e);

struct QuadratureTolerance {
    double rel_tol = 1e-6;
    double abs_tol = 1e-10;
    std::size_t max_evaluations = 50'000'000;

    IntegrationOptions options() const { return {rel_tol, abs_tol, max_evaluations}; }
};

/// Physical parameters of one channel: beam, turbulence and path length.
struct ChannelParams {
    BeamGeometry geometry;
    TurbulenceParams turbulence;
    double z = 0.0;

    /// Fried parameter, or nullopt for the turbulence-free channel.
    std::optional<double> fried() const;
    /// w(z) / r0; zero without turbulence.
    double w_over_r0() const;
};

/// Radial integration cutoff w(z) * max(5, sqrt(n + 1) + 2.5), n the largest
/// mode order involved. Keeps the mode-norm tail below ~1e-15.
double radial_cutoff(const BeamGeometry& geom, double z, int max_order);

/// exp(-D_phi(delta_r)/2) for the channel, with D_phi == 0 without turbulence.
class CoherenceFactor {
public:
    explicit CoherenceFactor(const ChannelParams& params);
    double operator()(double separation) const;

private:
    double coefficient_ = 0.0;  // D = coefficient * separation^(5/3)
};

/// Quadrature failure for one element; carries the partial estimate.
class ElementFailure : public std::runtime_error {
public:
    ElementFailure(const ElementIndex& index, const IntegrationResult& partial);
    const ElementIndex& index() const { return index_; }
    const IntegrationResult& partial() const { return partial_; }

private:
    ElementIndex index_;
    IntegrationResult partial_;
};

struct ElementEvaluation {
    std::complex<double> value{};
    double error_estimate = 0.0;
    std::size_t evaluations = 0;
};

/// Adaptive-cubature evaluation of one ensemble-averaged channel element.
/// Returns exactly 0 (with no quadrature) when the selection rule fails.
/// Throws ElementFailure if the cubature does not converge.
ElementEvaluation evaluate_superop_element(const ElementIndex& index, const ChannelParams& params,
                                           const QuadratureTolerance& tol = {});

std::complex<double> superop_element(const ElementIndex& index, const ChannelParams& params,
                                     const QuadratureTolerance& tol = {});

enum class ElementMethod {
    /// Shared mu-kernel on a composite Gauss-Legendre radial grid.
    kernel_quadrature,
    /// One adaptive Genz-Malik cubature per element.
    adaptive_cubature,
};

std::string to_string(ElementMethod method);
ElementMethod element_method_from_string(const std::string& name);

struct SuperopMetadata {
    BeamGeometry geometry{0.01, 1e-6};
    TurbulenceParams turbulence;
    double z = 0.0;
    QuadratureTolerance tolerance;
    ElementMethod method = ElementMethod::kernel_quadrature;
    double max_error_estimate = 0.0;

    ChannelParams channel() const { return {geometry, turbulence, z}; }
};

/// Sparse rectangular superoperator. Entries are kept sorted by index tuple;
/// only selection-rule-allowed tuples are stored.
class SuperopMatrix {
public:
    struct Entry {
        ElementIndex index;
        std::complex<double> value;
    };

    SuperopMatrix(TruncationSpec trunc, SuperopMetadata metadata);

    const TruncationSpec& truncation() const { return trunc_; }
    const SuperopMetadata& metadata() const { return metadata_; }
    SuperopMetadata& metadata() { return metadata_; }
    const ModeBasis& input_basis() const { return in_basis_; }
    const ModeBasis& output_basis() const { return out_basis_; }

    std::size_t rows() const { return out_basis_.size() * out_basis_.size(); }
    std::size_t cols() const { return in_basis_.size() * in_basis_.size(); }

    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t entry_count() const { return entries_.size(); }

    /// Inserts or overwrites. Throws std::invalid_argument for tuples outside
    /// the truncation or violating the selection rule.
    void set(const ElementIndex& index, std::complex<double> value);
    /// Bulk insert; entries may come in any order. Same validation as set().
    void assign(std::vector<Entry> entries);
    /// Stored value, or 0 for absent tuples.
    std::complex<double> at(const ElementIndex& index) const;

    /// Row index of the output dyad (a, b) in vec ordering a * d_out + b.
    std::size_t row_of(const ModeIndex& out_row, const ModeIndex& out_col) const;
    std::size_t col_of(const ModeIndex& in_row, const ModeIndex& in_col) const;

private:
    void check_index(const ElementIndex& index) const;

    TruncationSpec trunc_;
    SuperopMetadata metadata_;
    ModeBasis in_basis_;
    ModeBasis out_basis_;
    std::vector<Entry> entries_;
};

/// Every selection-rule-allowed tuple of a truncation, sorted lexicographically.
std::vector<ElementIndex> allowed_elements(const TruncationSpec& trunc);

/// Radial grid resolution used by the kernel-quadrature method.
struct KernelGridOptions {
    std::size_t panels = 12;
    std::size_t order = 16;
};

struct AssemblyOptions {
    QuadratureTolerance tolerance;
    ElementMethod method = ElementMethod::kernel_quadrature;
    KernelGridOptions grid;
    /// OpenMP thread count; 0 uses the runtime default.
    int workers = 0;
};

/// Builds T for every allowed element. One element per conjugate pair is
/// computed; its partner is stored as the conjugate. Stored values do not
/// depend on the worker count. Element failures propagate as ElementFailure.
SuperopMatrix assemble_superop(const TruncationSpec& trunc, const ChannelParams& params,
                               const AssemblyOptions& options = {});

/// Serial reference assembly: plain loop over allowed tuples using
/// superop_element, no kernel sharing and no threads.
SuperopMatrix assemble_superop_reference(const TruncationSpec& trunc,
                                         const ChannelParams& params,
                                         const QuadratureTolerance& tol = {});

/// The embedding identity: 1 on tuples whose output dyad equals the input dyad.
SuperopMatrix identity_superop(const TruncationSpec& trunc, const SuperopMetadata& metadata);

/// Set from another thread (e.g. a signal handler) to abandon assemblies in
/// flight; they then throw AssemblyCancelled.
void request_cancellation();
void clear_cancellation();
bool cancellation_requested();

class AssemblyCancelled : public std::runtime_error {
public:
    AssemblyCancelled() : std::runtime_error("superoperator assembly cancelled") {}
};

}  // namespace oamqec
