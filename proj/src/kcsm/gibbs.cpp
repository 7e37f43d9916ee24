#include "kcsm/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace kcsm::gibbs {

namespace {

int l1_distance(const Coord& a, const Coord& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

int l1_diameter(const std::vector<Coord>& support) {
  int d = 0;
  for (std::size_t i = 0; i < support.size(); ++i)
    for (std::size_t j = i + 1; j < support.size(); ++j)
      d = std::max(d, l1_distance(support[i], support[j]));
  return d;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

double Interaction::computed_norm() const {
  std::map<Coord, double> per_site;
  for (const Term& t : terms) {
    double m = max_abs(t.table);
    for (const Coord& c : t.support) per_site[c] += m;
  }
  double sup = 0.0;
  for (const auto& [c, v] : per_site) sup = std::max(sup, v);
  return sup;
}

void Interaction::validate() const {
  require(range >= 1, ErrorCode::InvalidArgument, "interaction range must be >= 1");
  for (const Term& t : terms) {
    require(!t.support.empty(), ErrorCode::InvalidArgument, "empty support");
    require(std::is_sorted(t.support.begin(), t.support.end()) &&
                std::adjacent_find(t.support.begin(), t.support.end()) == t.support.end(),
            ErrorCode::InvalidArgument, "supports must be sorted and distinct");
    require(t.table.size() == (1ull << t.support.size()), ErrorCode::InvalidArgument,
            "table size must be 2^|support|");
    require(l1_diameter(t.support) < range, ErrorCode::InvalidArgument,
            "support diameter must be < range");
  }
  require(computed_norm() <= norm_bound + 1e-9, ErrorCode::InvalidArgument,
          "computed interaction norm exceeds the declared bound");
}

double Interaction::term_value(const Term& term,
                               const std::function<int(const Coord&)>& spin_at) const {
  std::size_t idx = 0;
  for (const Coord& c : term.support) idx = (idx << 1) | static_cast<std::size_t>(spin_at(c));
  return term.table[idx];
}

std::string Interaction::serialize() const {
  std::ostringstream out;
  out << "# kcsm interaction v1\n";
  out << "range: " << range << "\n";
  out << "norm_bound: " << fmt_double(norm_bound) << "\n";
  for (const Term& t : terms) {
    out << "A: ";
    for (std::size_t i = 0; i < t.support.size(); ++i) {
      if (i) out << ",";
      const Coord& c = t.support[i];
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (k) out << ":";
        out << c[k];
      }
    }
    out << " ; table: ";
    for (std::size_t i = 0; i < t.table.size(); ++i) {
      if (i) out << ",";
      out << fmt_double(t.table[i]);
    }
    out << "\n";
  }
  return out.str();
}

Interaction Interaction::parse(const std::string& text) {
  Interaction phi;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("range:", 0) == 0) {
      phi.range = std::stoi(line.substr(6));
      continue;
    }
    if (line.rfind("norm_bound:", 0) == 0) {
      phi.norm_bound = std::stod(line.substr(11));
      continue;
    }
    require(line.rfind("A:", 0) == 0, ErrorCode::Io,
            "unrecognized interaction line: " + line);
    auto semi = line.find(';');
    require(semi != std::string::npos && line.find("table:", semi) != std::string::npos,
            ErrorCode::Io, "interaction line needs '; table:'");
    Term term;
    {
      std::string sites = line.substr(2, semi - 2);
      std::istringstream ss(sites);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (tok.find_first_not_of(" \t") == std::string::npos) continue;
        Coord c;
        std::istringstream cs(tok);
        std::string part;
        while (std::getline(cs, part, ':')) c.push_back(std::stoi(part));
        term.support.push_back(c);
      }
    }
    {
      std::string vals = line.substr(line.find("table:", semi) + 6);
      std::istringstream vs(vals);
      std::string tok;
      while (std::getline(vs, tok, ',')) term.table.push_back(std::stod(tok));
    }
    std::sort(term.support.begin(), term.support.end());
    phi.terms.push_back(std::move(term));
  }
  phi.validate();
  return phi;
}

void Interaction::save(const std::string& path) const {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot open " + path);
  out << serialize();
}

Interaction Interaction::load(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Interaction random_interaction(const Rectangle& volume, int range, double M,
                               std::uint64_t seed) {
  require(range >= 1, ErrorCode::InvalidArgument, "range must be >= 1");
  require(M > 0.0, ErrorCode::InvalidArgument, "M must be > 0");
  auto s = rng::stream_for(seed, rng::Purpose::Interaction);

  // candidate supports: singletons and close pairs meeting the volume
  Rectangle expanded = volume;
  for (int i = 0; i < expanded.dim(); ++i) {
    expanded.lo[static_cast<std::size_t>(i)] -= range - 1;
    expanded.hi[static_cast<std::size_t>(i)] += range - 1;
  }
  auto cells = expanded.cells();
  auto meets_volume = [&](const std::vector<Coord>& support) {
    return std::any_of(support.begin(), support.end(),
                       [&](const Coord& c) { return volume.contains(c); });
  };

  Interaction phi;
  phi.range = range;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (volume.contains(cells[i]) && s.next_unit() < 0.5) {
      Interaction::Term t;
      t.support = {cells[i]};
      t.table = {2.0 * s.next_unit() - 1.0, 2.0 * s.next_unit() - 1.0};
      phi.terms.push_back(std::move(t));
    }
    if (range < 2) continue;
    for (std::size_t j = i + 1; j < cells.size(); ++j) {
      if (l1_distance(cells[i], cells[j]) >= range) continue;
      std::vector<Coord> support{cells[i], cells[j]};
      std::sort(support.begin(), support.end());
      if (!meets_volume(support) || s.next_unit() >= 0.5) continue;
      Interaction::Term t;
      t.support = std::move(support);
      t.table.resize(4);
      for (auto& v : t.table) v = 2.0 * s.next_unit() - 1.0;
      phi.terms.push_back(std::move(t));
    }
  }
  double norm = phi.computed_norm();
  if (norm > 0.0) {
    double scale = M / norm;
    for (auto& t : phi.terms)
      for (auto& v : t.table) v *= scale;
  }
  phi.norm_bound = M;
  phi.validate();
  return phi;
}

namespace {

// glue: volume spins from sigma, exterior spins from tau
struct Glue {
  const Graph* g;
  const SpinConfig* sigma;
  const BoundaryConfig* tau;

  int operator()(const Coord& c) const {
    if (auto v = g->vertex_at(c)) return sigma->get(*v);
    auto it = tau->find(c);
    require(it != tau->end(), ErrorCode::InvalidArgument,
            "boundary condition does not cover site " + topo::coord_to_string(c) +
                "; the collar is too thin for the interaction range");
    return it->second;
  }
};

std::vector<const Interaction::Term*> terms_meeting(const Interaction& phi,
                                                    const Graph& volume) {
  std::vector<const Interaction::Term*> out;
  for (const auto& t : phi.terms) {
    bool meets = std::any_of(t.support.begin(), t.support.end(), [&](const Coord& c) {
      return volume.vertex_at(c).has_value();
    });
    if (meets) out.push_back(&t);
  }
  return out;
}

}  // namespace

double energy(const Interaction& phi, const Graph& volume, const BoundaryConfig& tau,
              const SpinConfig& sigma) {
  require(volume.has_embedding(), ErrorCode::UnsupportedTopology,
          "energy needs an embedded volume");
  require(sigma.size() == volume.num_vertices(), ErrorCode::InvalidArgument,
          "config size mismatch");
  Glue spin_at{&volume, &sigma, &tau};
  double h = 0.0;
  for (const auto* t : terms_meeting(phi, volume))
    h += phi.term_value(*t, [&](const Coord& c) { return spin_at(c); });
  return h;
}

GibbsMeasure gibbs_measure(const Interaction& phi, const Graph& volume,
                           const BoundaryConfig& tau, const SiteMeasure& nu) {
  nu.validate_strict();
  require(nu.is_binary(), ErrorCode::UnsupportedTopology,
          "explicit Gibbs vectors are built for 0-1 spins");
  int n = volume.num_vertices();
  require(n <= spectra::kMaxVertices, ErrorCode::CapExceeded,
          "explicit Gibbs vectors are capped at 24 sites");
  auto relevant = terms_meeting(phi, volume);

  GibbsMeasure out;
  out.n_sites = n;
  std::uint64_t dim = 1ull << n;
  std::vector<double> logw(dim);
  double lmax = -std::numeric_limits<double>::infinity();
  for (std::uint64_t i = 0; i < dim; ++i) {
    SpinConfig sigma = SpinConfig::from_bits(n, i);
    Glue spin_at{&volume, &sigma, &tau};
    double h = 0.0;
    for (const auto* t : relevant)
      h += phi.term_value(*t, [&](const Coord& c) { return spin_at(c); });
    double lw = -h;
    for (int x = 0; x < n; ++x)
      lw += std::log(nu.probs[static_cast<std::size_t>(sigma.get(x))]);
    logw[i] = lw;
    lmax = std::max(lmax, lw);
  }
  double z = 0.0;
  for (std::uint64_t i = 0; i < dim; ++i) z += std::exp(logw[i] - lmax);
  out.log_z = lmax + std::log(z);
  out.prob.resize(dim);
  for (std::uint64_t i = 0; i < dim; ++i) out.prob[i] = std::exp(logw[i] - out.log_z);
  return out;
}

std::vector<double> GibbsMeasure::marginal(const std::vector<Vertex>& delta) const {
  std::vector<double> out(1ull << delta.size(), 0.0);
  for (std::uint64_t i = 0; i < prob.size(); ++i) {
    std::size_t key = 0;
    for (Vertex x : delta) key = (key << 1) | ((i >> x) & 1ull);
    out[key] += prob[i];
  }
  return out;
}

spectra::Generator build_interacting_generator(const ModelSpec& model,
                                               const Interaction& phi,
                                               const BoundaryConfig& tau) {
  require(model.is_binary(), ErrorCode::UnsupportedTopology,
          "interacting generators are built for 0-1 models");
  const Graph& g = model.graph();
  require(g.has_embedding(), ErrorCode::UnsupportedTopology,
          "interacting generators need an embedded volume");
  int n = model.num_vertices();

  // start from the non-interacting generator to fix the sparsity pattern,
  // then overwrite rates with the Gibbs single-site conditionals
  spectra::Generator gen = spectra::build_generator(model);

  // per-site list of terms whose support contains the site
  std::vector<std::vector<const Interaction::Term*>> at_site(static_cast<std::size_t>(n));
  for (const auto& t : phi.terms)
    for (const Coord& c : t.support)
      if (auto v = g.vertex_at(c)) at_site[static_cast<std::size_t>(*v)].push_back(&t);

  const double nu0 = model.measure().probs[0];
  const double nu1 = model.measure().probs[1];
  std::vector<double> rates(gen.rate().size(), 0.0);
  std::vector<double> diag(gen.dim(), 0.0);

  std::uint64_t dim = gen.dim();
  for (std::uint64_t i = 0; i < dim; ++i) {
    SpinConfig sigma = SpinConfig::from_bits(n, i);
    double out_rate = 0.0;
    for (std::uint64_t k = gen.row_ptr()[i]; k < gen.row_ptr()[i + 1]; ++k) {
      std::uint64_t j = gen.col()[k];
      int x = static_cast<int>(__builtin_ctzll(i ^ j));  // the flipped site
      // local energies with sigma_x forced to 0 and 1
      double e0 = 0.0, e1 = 0.0;
      for (const auto* t : at_site[static_cast<std::size_t>(x)]) {
        auto spin_with = [&](int forced, const Coord& c) -> int {
          if (auto v = g.vertex_at(c)) {
            if (*v == x) return forced;
            return sigma.get(*v);
          }
          auto it = tau.find(c);
          require(it != tau.end(), ErrorCode::InvalidArgument,
                  "boundary condition does not cover site " +
                      topo::coord_to_string(c));
          return it->second;
        };
        e0 += phi.term_value(*t, [&](const Coord& c) { return spin_with(0, c); });
        e1 += phi.term_value(*t, [&](const Coord& c) { return spin_with(1, c); });
      }
      double w0 = nu0 * std::exp(-e0);
      double w1 = nu1 * std::exp(-e1);
      int new_value = ((j >> x) & 1ull) ? 1 : 0;
      double cond = (new_value == 0 ? w0 : w1) / (w0 + w1);
      rates[k] = cond;  // the constraint already selected the row entries
      out_rate += cond;
    }
    diag[i] = -out_rate;
  }

  gen.replace_rates(std::move(rates), std::move(diag));
  // the reversible measure is now the Gibbs vector, not the product measure
  GibbsMeasure mu = gibbs_measure(phi, g, tau, model.measure());
  gen.mutable_space().override_weights(mu.prob);
  return gen;
}

double strong_mixing_ratio(const Interaction& phi, const Graph& volume,
                           const std::vector<Vertex>& delta, const BoundaryConfig& tau,
                           const BoundaryConfig& tau_prime, const SiteMeasure& nu) {
  require(!delta.empty(), ErrorCode::InvalidArgument, "delta must be nonempty");
  GibbsMeasure a = gibbs_measure(phi, volume, tau, nu);
  GibbsMeasure b = gibbs_measure(phi, volume, tau_prime, nu);
  auto ma = a.marginal(delta);
  auto mb = b.marginal(delta);
  double worst = 0.0;
  for (std::size_t k = 0; k < ma.size(); ++k)
    worst = std::max(worst, std::abs(mb[k] / ma[k] - 1.0));
  return worst;
}

double dlr_consistency_error(const Interaction& phi, const Graph& volume,
                             const Graph& subvolume, const BoundaryConfig& tau,
                             const SiteMeasure& nu) {
  int n = volume.num_vertices();
  int m = subvolume.num_vertices();
  require(m >= 1 && m < n, ErrorCode::InvalidArgument,
          "subvolume must be a proper nonempty part of the volume");
  // map subvolume vertices into the volume and collect the exterior part
  std::vector<Vertex> inner(static_cast<std::size_t>(m));
  for (Vertex v = 0; v < m; ++v) {
    auto w = volume.vertex_at(subvolume.coord(v));
    require(w.has_value(), ErrorCode::InvalidArgument,
            "subvolume site outside the volume");
    inner[static_cast<std::size_t>(v)] = *w;
  }
  std::vector<Vertex> outer;
  {
    std::set<Vertex> inner_set(inner.begin(), inner.end());
    for (Vertex w = 0; w < n; ++w)
      if (!inner_set.count(w)) outer.push_back(w);
  }

  GibbsMeasure big = gibbs_measure(phi, volume, tau, nu);
  double worst = 0.0;
  for (std::uint64_t xi = 0; xi < (1ull << outer.size()); ++xi) {
    // conditional of the big measure given sigma on the exterior part
    std::vector<double> cond(1ull << m, 0.0);
    double z = 0.0;
    for (std::uint64_t si = 0; si < (1ull << m); ++si) {
      std::uint64_t full = 0;
      for (std::size_t b = 0; b < inner.size(); ++b)
        if ((si >> b) & 1ull) full |= 1ull << inner[b];
      for (std::size_t b = 0; b < outer.size(); ++b)
        if ((xi >> b) & 1ull) full |= 1ull << outer[b];
      cond[si] = big[full];
      z += big[full];
    }
    for (auto& c : cond) c /= z;

    // glued boundary: tau outside the volume, xi on the exterior part
    BoundaryConfig glued = tau;
    for (Vertex w : outer)
      glued[volume.coord(w)] = 0;
    for (std::size_t b = 0; b < outer.size(); ++b)
      glued[volume.coord(outer[b])] = static_cast<int>((xi >> b) & 1ull);
    GibbsMeasure small = gibbs_measure(phi, subvolume, glued, nu);

    // bit b of si is subvolume vertex b in both vectors
    for (std::uint64_t si = 0; si < (1ull << m); ++si)
      worst = std::max(worst, std::abs(cond[si] - small[si]));
  }
  return worst;
}

BoundaryConfig zero_boundary(const Graph& volume, int width) {
  require(volume.has_embedding(), ErrorCode::UnsupportedTopology,
          "boundary conditions need an embedded volume");
  Rectangle box = volume.bounding_box();
  Rectangle expanded = box;
  for (int i = 0; i < box.dim(); ++i) {
    expanded.lo[static_cast<std::size_t>(i)] -= width;
    expanded.hi[static_cast<std::size_t>(i)] += width;
  }
  BoundaryConfig tau;
  for (const auto& c : expanded.cells())
    if (!volume.vertex_at(c)) tau[c] = 0;
  return tau;
}

}  // namespace kcsm::gibbs
