#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kcsm/models.hpp"

namespace kcsm::spectra {

using models::ModelSpec;
using topo::Vertex;

inline constexpr int kMaxVertices = 24;           // hard cap for exact spectra
inline constexpr std::uint64_t kMaxStates = 1ull << 24;

/// Enumerated configuration space of a finite model: index <-> config
/// bijection in mixed radix (site 0 is the least significant digit) plus the
/// product weights of the reversible measure.
class StateSpace {
 public:
  explicit StateSpace(const ModelSpec& model);

  const ModelSpec& model() const { return *model_; }
  int num_sites() const { return n_; }
  int states_per_site() const { return s_; }
  std::uint64_t size() const { return size_; }
  const std::vector<double>& mu() const { return mu_; }

  std::uint64_t index_of(const GeneralConfig& cfg) const;
  std::uint64_t index_of(const SpinConfig& cfg) const;  // binary models
  GeneralConfig config_of(std::uint64_t index) const;
  SpinConfig spin_config_of(std::uint64_t index) const;  // binary models
  int value_at(std::uint64_t index, Vertex x) const;
  std::uint64_t with_value(std::uint64_t index, Vertex x, int value) const;

  /// Replaces the product weights with an explicit reversible measure
  /// (used by the interacting generator, whose measure is a Gibbs vector).
  void override_weights(std::vector<double> weights);

 private:
  std::shared_ptr<const ModelSpec> model_;
  int n_ = 0;
  int s_ = 2;
  std::uint64_t size_ = 0;
  std::vector<std::uint64_t> place_;  // s^x per site
  std::vector<double> mu_;
};

/// Sparse Markov generator on the enumerated space: off-diagonal heat-bath
/// rates L(i -> j) = c_x(i) * nu(new value) in CSR form, diagonal = -row sum.
/// Reversible w.r.t. the product measure carried by the state space.
class Generator {
 public:
  Generator() = default;

  const StateSpace& space() const { return *space_; }
  std::uint64_t dim() const { return space_->size(); }
  const std::vector<double>& mu() const { return space_->mu(); }
  const std::vector<std::uint64_t>& row_ptr() const { return row_ptr_; }
  const std::vector<std::uint32_t>& col() const { return col_; }
  const std::vector<double>& rate() const { return rate_; }
  const std::vector<double>& diag() const { return diag_; }
  std::uint64_t nnz() const { return col_.size(); }

  double entry(std::uint64_t i, std::uint64_t j) const;  // off-diagonal lookup

  /// Rewrites the rates in place keeping the sparsity pattern (used by the
  /// interacting generator, which shares the constraint pattern but carries
  /// Gibbs conditional rates).
  void replace_rates(std::vector<double> rates, std::vector<double> diag);
  StateSpace& mutable_space() { return *space_; }

  friend Generator build_generator(const ModelSpec& model);

 private:
  std::shared_ptr<StateSpace> space_;
  std::vector<std::uint64_t> row_ptr_;
  std::vector<std::uint32_t> col_;
  std::vector<double> rate_;
  std::vector<double> diag_;
};

Generator build_generator(const ModelSpec& model);

/// Connected components of the undirected move graph (rate > 0 edges; the
/// pattern is symmetric by detailed balance). Sorted by smallest state index;
/// states inside a component are sorted.
std::vector<std::vector<std::uint32_t>> ergodic_components(const Generator& gen);

struct SolverOptions {
  double tol = 1e-10;            // relative residual target
  int max_iter_factor = 10;      // Lanczos budget = factor * dim (capped)
  std::uint64_t dense_fallback_dim = 4096;
  std::uint64_t dense_direct_dim = 256;  // below this just solve densely
};

struct SpectralReport {
  double gap = 0.0;
  double relaxation_time = 0.0;  // 1/gap, inf when gap = 0
  int zero_multiplicity = 1;
  std::vector<std::uint64_t> component_sizes;
  double residual = 0.0;
  bool converged = false;
  std::uint64_t dim = 0;
  int iterations = 0;
  std::string method;
};

/// Spectral gap of -L restricted to one ergodic component, with the measure
/// conditioned on it. Lanczos with full reorthogonalization on the
/// symmetrized generator, deflating the known null vector sqrt(mu); dense
/// fallback for small dimensions.
SpectralReport spectral_gap(const Generator& gen,
                            const std::vector<std::uint32_t>& component,
                            const SolverOptions& opts = {});

/// Convenience: components + gap of the unique component, or gap 0 with the
/// zero-eigenvalue multiplicity when the chain is reducible.
SpectralReport analyze(const Generator& gen, const SolverOptions& opts = {});

/// Smallest Dirichlet eigenvalue: minimize D(f) over mu(f^2) = 1, f = 0 on A.
/// Equals the smallest eigenvalue of the symmetrized -L with the rows and
/// columns of A deleted. The chain must be irreducible and A a proper
/// nonempty subset.
double dirichlet_eigenvalue(const Generator& gen,
                            const std::function<bool(std::uint64_t)>& in_A,
                            const SolverOptions& opts = {});

/// Gap of the generator restricted to the states with at least one vacancy
/// (binary models), with measure conditioned on that set. Errors if that set
/// is not a single ergodic class.
SpectralReport gap_plus(const ModelSpec& model, const SolverOptions& opts = {});

struct DominationGapReport {
  double gap_a = 0.0;
  double gap_b = 0.0;
  bool holds = false;
};

/// Checks gap(b) <= gap(a) + tol given that a dominates b.
DominationGapReport check_domination_gap(const ModelSpec& a, const ModelSpec& b,
                                         double tol = 1e-9,
                                         const SolverOptions& opts = {});

/// Dirichlet form D(f) = sum over pairs of mu_i L_ij (f_j - f_i)^2 / 2.
double dirichlet_form(const Generator& gen, const std::vector<double>& f);

/// Variance of f w.r.t. mu conditioned on the component (full space when the
/// component is the whole index range).
double variance_on(const Generator& gen, const std::vector<std::uint32_t>& component,
                   const std::vector<double>& f);

double measure_of(const Generator& gen,
                  const std::function<bool(std::uint64_t)>& pred);

}  // namespace kcsm::spectra
