#include "kcsm/checks.hpp"

#include <cmath>
#include <sstream>

#include "kcsm/bootstrap.hpp"
#include "kcsm/dynamics.hpp"
#include "kcsm/gibbs.hpp"
#include "kcsm/models.hpp"
#include "kcsm/spectra.hpp"

namespace kcsm::checks {

using models::BoundaryMode;
using models::ModelSpec;
using topo::Coord;
using topo::Graph;
using topo::Rectangle;
using topo::Vertex;

namespace {

std::string fmt(double v) { return fmt_double(v); }

double gap_of(const ModelSpec& model) {
  auto gen = spectra::build_generator(model);
  auto rep = spectra::analyze(gen);
  require(rep.converged && rep.zero_multiplicity == 1, ErrorCode::SolverFailure,
          "gap solve failed or chain reducible");
  return rep.gap;
}

std::vector<ModelSpec> reference_models() {
  std::vector<ModelSpec> ms;
  ms.push_back(models::east_chain(8, 0.4));
  ms.push_back(models::fa_jf_rectangle(Rectangle{Coord{0}, Coord{7}}, 1, 0.5));
  ms.push_back(models::fa_jf_rectangle(Rectangle{Coord{0, 0}, Coord{2, 2}}, 2, 0.5));
  ms.push_back(models::north_east_rectangle(Rectangle{Coord{0, 0}, Coord{2, 2}}, 0.5,
                                            BoundaryMode::Maximal));
  return ms;
}

// random constraint families over small random graphs (Hp1/Hp2 by build)
ModelSpec random_model(std::uint64_t seed) {
  auto s = rng::stream_for(seed, rng::Purpose::Misc, fnv1a64("random-model"));
  int n = 3 + static_cast<int>(s.next_below(4));
  Graph g = Graph::erdos_renyi_connected(n, 0.5, s.next_u64());
  std::vector<models::VertexConstraint> cons(static_cast<std::size_t>(n));
  for (Vertex x = 0; x < n; ++x) {
    auto& c = cons[static_cast<std::size_t>(x)];
    double roll = s.next_unit();
    if (roll < 0.2) {
      c.kind = models::VertexConstraint::Kind::Always;
      continue;
    }
    c.kind = models::VertexConstraint::Kind::Sets;
    int n_sets = 1 + static_cast<int>(s.next_below(2));
    for (int k = 0; k < n_sets; ++k) {
      models::InfluenceSet is;
      for (Vertex y = 0; y < n; ++y)
        if (y != x && g.distance(x, y) <= 2 && s.next_unit() < 0.4)
          is.sites.push_back(y);
      if (is.sites.empty()) is.sites.push_back(x == 0 ? 1 : 0);
      c.sets.push_back(is);
    }
  }
  double q = 0.3 + 0.4 * s.next_unit();
  return ModelSpec(g, models::SiteMeasure::binary(q), cons, {}, {}, "random");
}

CheckResult generator_consistency() {
  CheckResult out{"generator-consistency", true, ""};
  double worst_row = 0.0, worst_db = 0.0;
  for (const auto& m : reference_models()) {
    auto gen = spectra::build_generator(m);
    const auto& mu = gen.mu();
    for (std::uint64_t i = 0; i < gen.dim(); ++i) {
      double row = gen.diag()[i];
      for (std::uint64_t k = gen.row_ptr()[i]; k < gen.row_ptr()[i + 1]; ++k) {
        row += gen.rate()[k];
        std::uint64_t j = gen.col()[k];
        double db = std::abs(mu[i] * gen.rate()[k] - mu[j] * gen.entry(j, i));
        worst_db = std::max(worst_db, db);
      }
      worst_row = std::max(worst_row, std::abs(row));
    }
  }
  out.pass = worst_row <= 1e-12 && worst_db <= 1e-12;
  out.detail = "max |row sum| = " + fmt(worst_row) + "; max DB residual = " + fmt(worst_db);
  return out;
}

CheckResult variational_gap(std::uint64_t seed) {
  CheckResult out{"variational-gap", true, ""};
  double worst = 1e300;
  for (const auto& m : reference_models()) {
    auto gen = spectra::build_generator(m);
    auto comps = spectra::ergodic_components(gen);
    if (comps.size() != 1) {
      out.pass = false;
      out.detail = "reference chain unexpectedly reducible";
      return out;
    }
    double gap = spectra::spectral_gap(gen, comps[0]).gap;
    auto s = rng::stream_for(seed, rng::Purpose::Misc, fnv1a64("varf"));
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> f(gen.dim());
      for (auto& v : f) v = s.next_normal();
      double ratio = spectra::dirichlet_form(gen, f) /
                     spectra::variance_on(gen, comps[0], f);
      worst = std::min(worst, ratio - gap);
      if (ratio < gap - 1e-8) out.pass = false;
    }
  }
  out.detail = "min D(f)/Var(f) - gap = " + fmt(worst);
  return out;
}

CheckResult ergodic_multiplicity(std::uint64_t seed) {
  CheckResult out{"ergodic-multiplicity", true, ""};
  for (int k = 0; k < 10; ++k) {
    ModelSpec m = random_model(rng::derive_key(seed, 77, static_cast<std::uint64_t>(k)));
    auto gen = spectra::build_generator(m);
    auto comps = spectra::ergodic_components(gen);
    auto full = spectra::analyze(gen);
    if (static_cast<int>(comps.size()) != full.zero_multiplicity) {
      out.pass = false;
      out.detail = "component count mismatch on sample " + std::to_string(k);
      return out;
    }
  }
  out.detail = "10 random models, flood fill = multiplicity";
  return out;
}

CheckResult persistence_bound(std::uint64_t seed) {
  CheckResult out{"persistence-bound", true, ""};
  // single unconstrained spin against the exact two-state curve
  {
    double q = 0.3, p = 0.7;
    ModelSpec one = models::east_chain(1, q);
    std::vector<double> grid;
    for (int k = 0; k <= 8; ++k) grid.push_back(0.5 * k);
    auto curve = dynamics::persistence(one, 0, grid, 4000, seed);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      double exact = p * std::exp(-q * grid[k]) + q * std::exp(-p * grid[k]);
      if (std::abs(curve.F[k] - exact) > 3.0 * curve.se[k] + 1e-9) {
        out.pass = false;
        out.detail = "single-spin curve off at t=" + fmt(grid[k]);
        return out;
      }
    }
  }
  // East chain against exp(-q gap t) + exp(-p gap t)
  double q = 0.5;
  ModelSpec east = models::east_chain(6, q);
  double gap = gap_of(east);
  std::vector<double> grid;
  for (int k = 0; k <= 8; ++k) grid.push_back(k);
  auto curve = dynamics::persistence(east, 0, grid, 2000, seed + 1);
  double worst = -1e300;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double bound = std::exp(-q * gap * grid[k]) + std::exp(-(1 - q) * gap * grid[k]);
    worst = std::max(worst, curve.F[k] - bound - 3.0 * curve.se[k]);
  }
  out.pass = out.pass && worst <= 0.0 && curve.F[0] == 1.0;
  out.detail = "max F - bound - 3se = " + fmt(worst);
  return out;
}

CheckResult dirichlet_bound() {
  CheckResult out{"dirichlet-eigenvalue-bound", true, ""};
  {
    // single unconstrained spin: lambda_A = q and the bound is tight
    double q = 0.35;
    auto gen = spectra::build_generator(models::east_chain(1, q));
    double lam = spectra::dirichlet_eigenvalue(
        gen, [&](std::uint64_t i) { return (i & 1ull) == 0; });
    if (std::abs(lam - q) > 1e-12) {
      out.pass = false;
      out.detail = "single spin lambda_A != q";
      return out;
    }
  }
  double worst = 1e300;
  for (double q : {0.3, 0.5}) {
    for (int variant = 0; variant < 2; ++variant) {
      ModelSpec m = variant == 0
                        ? models::east_chain(6, q)
                        : models::fa_jf_rectangle(Rectangle{Coord{0}, Coord{5}}, 1, q);
      auto gen = spectra::build_generator(m);
      auto comps = spectra::ergodic_components(gen);
      double gap = spectra::spectral_gap(gen, comps[0]).gap;
      double lam = spectra::dirichlet_eigenvalue(
          gen, [&](std::uint64_t i) { return (i & 1ull) == 0; });
      worst = std::min(worst, lam - q * gap);
      if (lam < q * gap - 1e-9) out.pass = false;
    }
  }
  out.detail = "min lambda_A - q*gap = " + fmt(worst);
  return out;
}

CheckResult domination_and_lower_bound(std::uint64_t seed) {
  CheckResult out{"spanning-tree-domination", true, ""};
  double worst_dom = 1e300, worst_low = 1e300;
  for (int k = 0; k < 6; ++k) {
    auto s = rng::stream_for(seed, rng::Purpose::Misc, 1000 + static_cast<std::uint64_t>(k));
    int n = 5 + static_cast<int>(s.next_below(4));
    Graph g = Graph::erdos_renyi_connected(n, 0.45, s.next_u64());
    auto tree = topo::spanning_tree(g, 0);
    ModelSpec east_t = models::tree_east_on_graph(g, tree, 0.5);
    ModelSpec fa1 = models::fa_jf_graph(g, 1, 0.5, 0);
    auto rep = spectra::check_domination_gap(fa1, east_t, 1e-9);
    worst_dom = std::min(worst_dom, rep.gap_a - rep.gap_b);
    if (!rep.holds) out.pass = false;
    double east_path_gap = gap_of(models::east_chain(n, 0.5));
    worst_low = std::min(worst_low, rep.gap_a - east_path_gap);
    if (rep.gap_a < east_path_gap - 1e-9) out.pass = false;
  }
  out.detail = "min gap(FA-1f) - gap(tree East) = " + fmt(worst_dom) +
               "; min gap(FA-1f) - gap(East path) = " + fmt(worst_low);
  return out;
}

CheckResult east_gap_monotone() {
  CheckResult out{"east-gap-monotone", true, ""};
  double prev = 1e300;
  for (int n = 1; n <= 10; ++n) {
    double g = gap_of(models::east_chain(n, 0.5));
    if (g > prev + 1e-9) out.pass = false;
    prev = g;
  }
  out.detail = "gap(East_n) nonincreasing for n = 1..10 at q = 0.5";
  return out;
}

CheckResult omega_plus(std::uint64_t seed) {
  CheckResult out{"restricted-component-gap", true, ""};
  double worst = 1e300;
  for (int k = 0; k < 4; ++k) {
    auto s = rng::stream_for(seed, rng::Purpose::Misc, 2000 + static_cast<std::uint64_t>(k));
    int n = 4 + static_cast<int>(s.next_below(4));
    Graph g = Graph::erdos_renyi_connected(n, 0.5, s.next_u64());
    ModelSpec fa = models::fa_jf_graph(g, 1, 0.5);
    auto rep = spectra::gap_plus(fa);
    double mu_plus = 1.0 - std::pow(0.5, n);
    double low = 0.5 * gap_of(models::east_chain(n, 0.5)) * mu_plus;
    worst = std::min(worst, rep.gap - low);
    if (rep.gap < low - 1e-9) out.pass = false;
  }
  out.detail = "min gap(L+) - bound = " + fmt(worst);
  return out;
}

CheckResult hitting_lower_bound(std::uint64_t seed) {
  CheckResult out{"hitting-time-lower-bound", true, ""};
  double q = 0.5;
  int n = 3;  // [0 .. ceil(1/q)]
  ModelSpec east = models::east_chain(n, q);
  double gap = gap_of(east);
  SpinConfig ones(n, 1);
  auto hit = dynamics::hitting_time(
      east, ones, [](const SpinConfig& c) { return c.get(0) == 0; }, 400, seed,
      dynamics::default_t_cap(q, n));
  double bound = std::exp(-1.0) / gap;
  out.pass = hit.mean() + 3.0 * hit.stderr_() >= bound && hit.reliable;
  out.detail = "mean T = " + fmt(hit.mean()) + " vs e^-1/gap = " + fmt(bound) +
               " (censored " + std::to_string(hit.n_censored) + ")";
  return out;
}

CheckResult bootstrap_noncooperative(std::uint64_t seed) {
  CheckResult out{"fa1f-noncooperative-closure", true, ""};
  for (int k = 0; k < 15 && out.pass; ++k) {
    auto s = rng::stream_for(seed, rng::Purpose::Misc, 3000 + static_cast<std::uint64_t>(k));
    int n = 3 + static_cast<int>(s.next_below(6));
    Graph g = Graph::erdos_renyi_connected(n, 0.5, s.next_u64());
    ModelSpec fa = models::fa_jf_graph(g, 1, 0.5);
    for (std::uint64_t bits = 0; bits + 1 < (1ull << n); ++bits) {
      // every config except all-ones has a vacancy
      if (!bootstrap::closure(fa, SpinConfig::from_bits(n, bits)).all_zero()) {
        out.pass = false;
        out.detail = "config " + std::to_string(bits) + " did not empty (n=" +
                     std::to_string(n) + ")";
        break;
      }
    }
  }
  if (out.pass) out.detail = "every config with a vacancy empties on 15 random graphs";
  return out;
}

CheckResult bootstrap_ne_monotone(std::uint64_t seed) {
  CheckResult out{"north-east-scan-monotone", true, ""};
  bootstrap::ModelFamily family{"north-east",
                                [](int L) { return models::north_east_torus(L, 0.5); }};
  std::vector<double> grid;
  for (double q = 0.16; q <= 0.44 + 1e-9; q += 0.04) grid.push_back(q);
  auto est = bootstrap::estimate_qbp(family, {16}, grid, 150, seed);
  double prev = -1.0;
  for (const auto& r : est.rows) {
    if (r.emptied_fraction < prev - 1e-12) out.pass = false;
    prev = r.emptied_fraction;
  }
  out.pass = out.pass && est.bracketed;
  out.detail = "q_hat = " + fmt(est.q_hat) + " on L=16";
  return out;
}

CheckResult gibbs_checks(std::uint64_t seed) {
  CheckResult out{"gibbs-dlr-and-phi0", true, ""};
  using gibbs::Interaction;
  Rectangle lam{{0, 0}, {1, 2}};
  Graph vol = Graph::lattice(lam);
  Graph sub = Graph::lattice(Rectangle{{0, 0}, {1, 1}});
  auto nu = models::SiteMeasure::binary(0.5);
  double worst = 0.0;
  for (int k = 0; k < 3; ++k) {
    Interaction phi = gibbs::random_interaction(lam, 2, 0.2,
                                                rng::derive_key(seed, 41, static_cast<std::uint64_t>(k)));
    auto tau = gibbs::zero_boundary(vol, 2);
    worst = std::max(worst, gibbs::dlr_consistency_error(phi, vol, sub, tau, nu));
  }
  if (worst > 1e-12) out.pass = false;

  // Phi = 0 reduces to the non-interacting generator entrywise
  ModelSpec ne = models::north_east_rectangle(Rectangle{{0, 0}, {1, 2}}, 0.7,
                                              BoundaryMode::Maximal);
  Interaction zero;
  zero.range = 2;
  zero.norm_bound = 0.0;
  auto tau = gibbs::zero_boundary(ne.graph(), 2);
  auto g0 = spectra::build_generator(ne);
  auto g1 = gibbs::build_interacting_generator(ne, zero, tau);
  double diff = 0.0;
  for (std::size_t k = 0; k < g0.rate().size(); ++k)
    diff = std::max(diff, std::abs(g0.rate()[k] - g1.rate()[k]));
  if (diff > 1e-14) out.pass = false;
  out.detail = "max DLR error = " + fmt(worst) + "; max Phi=0 rate diff = " + fmt(diff);
  return out;
}

CheckResult gibbs_interacting_gap(std::uint64_t seed) {
  CheckResult out{"interacting-north-east-gap", true, ""};
  Rectangle box{{0, 0}, {2, 2}};
  ModelSpec ne = models::north_east_rectangle(box, 0.9, BoundaryMode::Maximal);
  auto tau = gibbs::zero_boundary(ne.graph(), 2);
  double min_gap = 1e300;
  for (int k = 0; k < 3; ++k) {
    auto phi = gibbs::random_interaction(box, 2, 0.1,
                                         rng::derive_key(seed, 59, static_cast<std::uint64_t>(k)));
    auto gen = gibbs::build_interacting_generator(ne, phi, tau);
    auto comps = spectra::ergodic_components(gen);
    if (comps.size() != 1) {
      out.pass = false;
      out.detail = "interacting chain reducible";
      return out;
    }
    min_gap = std::min(min_gap, spectra::spectral_gap(gen, comps[0]).gap);
  }
  out.pass = min_gap > 1e-6;
  out.detail = "min gap over random interactions = " + fmt(min_gap);
  return out;
}

}  // namespace

std::vector<CheckResult> run_all(std::uint64_t seed) {
  std::vector<CheckResult> out;
  out.push_back(generator_consistency());
  out.push_back(variational_gap(seed));
  out.push_back(ergodic_multiplicity(seed));
  out.push_back(persistence_bound(seed));
  out.push_back(dirichlet_bound());
  out.push_back(domination_and_lower_bound(seed));
  out.push_back(east_gap_monotone());
  out.push_back(omega_plus(seed));
  out.push_back(hitting_lower_bound(seed));
  out.push_back(bootstrap_noncooperative(seed));
  out.push_back(bootstrap_ne_monotone(seed));
  out.push_back(gibbs_checks(seed));
  out.push_back(gibbs_interacting_gap(seed));
  return out;
}

}  // namespace kcsm::checks
