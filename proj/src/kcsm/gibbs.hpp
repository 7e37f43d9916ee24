#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kcsm/models.hpp"
#include "kcsm/spectra.hpp"

namespace kcsm::gibbs {

using models::ModelSpec;
using models::SiteMeasure;
using topo::Coord;
using topo::Graph;
using topo::Rectangle;
using topo::Vertex;

/// Boundary condition: spin values on exterior lattice sites.
using BoundaryConfig = std::map<Coord, int>;

/// Finite-range potential on Z^d, stored as explicit tables over the
/// configurations of each support. Table entries follow lexicographic order
/// of the value tuple (sigma on the first listed site varies slowest).
struct Interaction {
  struct Term {
    std::vector<Coord> support;  // sorted, distinct lattice points
    std::vector<double> table;   // 2^|support| values for 0-1 spins
  };

  std::vector<Term> terms;
  int range = 1;          // declared range: diam(A) < range for every term
  double norm_bound = 0;  // declared bound M on the interaction norm

  /// sup_x sum over terms containing x of max |Phi_A|.
  double computed_norm() const;
  void validate() const;

  double term_value(const Term& term, const std::function<int(const Coord&)>& spin_at) const;

  std::string serialize() const;
  static Interaction parse(const std::string& text);
  void save(const std::string& path) const;
  static Interaction load(const std::string& path);
};

/// Seeded random interaction in B_{r,M}: nearest-neighbor style pair and
/// single-site terms with supports meeting the volume, scaled so the
/// computed norm is exactly M.
Interaction random_interaction(const Rectangle& volume, int range, double M,
                               std::uint64_t seed);

/// Energy H_Lambda^tau(sigma): sum of Phi_A over supports meeting the volume,
/// evaluated on the glued configuration (sigma inside, tau outside).
/// Refuses boundary conditions that do not cover every exterior site of a
/// contributing support.
double energy(const Interaction& phi, const Graph& volume, const BoundaryConfig& tau,
              const SpinConfig& sigma);

/// Explicit finite-volume Gibbs measure with boundary condition tau.
struct GibbsMeasure {
  std::vector<double> prob;  // indexed like spectra::StateSpace (binary)
  double log_z = 0.0;
  int n_sites = 0;

  double operator[](std::uint64_t i) const { return prob[i]; }
  /// Marginal of the spins on the given (volume-indexed) vertices; values in
  /// lexicographic order of the tuple, first vertex varying slowest.
  std::vector<double> marginal(const std::vector<Vertex>& delta) const;
};

GibbsMeasure gibbs_measure(const Interaction& phi, const Graph& volume,
                           const BoundaryConfig& tau, const SiteMeasure& nu);

/// Constrained heat-bath generator reversible w.r.t. the finite-volume Gibbs
/// measure: rate(x: eta -> eta') = c_x(eta) * mu(eta'_x | eta off x, tau).
spectra::Generator build_interacting_generator(const ModelSpec& model,
                                               const Interaction& phi,
                                               const BoundaryConfig& tau);

/// Exact strong-mixing diagnostic: max over sigma_Delta of
/// |mu^{tau'}(sigma_Delta)/mu^{tau}(sigma_Delta) - 1|.
double strong_mixing_ratio(const Interaction& phi, const Graph& volume,
                           const std::vector<Vertex>& delta, const BoundaryConfig& tau,
                           const BoundaryConfig& tau_prime, const SiteMeasure& nu);

/// All-zero boundary condition on the collar of the given width around the
/// volume's bounding box.
BoundaryConfig zero_boundary(const Graph& volume, int width);

/// DLR consistency diagnostic: max over exterior assignments xi and interior
/// configs of |mu_volume(. | sigma off subvolume = xi) - mu_subvolume with
/// glued boundary|. Exactly zero in exact arithmetic.
double dlr_consistency_error(const Interaction& phi, const Graph& volume,
                             const Graph& subvolume, const BoundaryConfig& tau,
                             const SiteMeasure& nu);

}  // namespace kcsm::gibbs
