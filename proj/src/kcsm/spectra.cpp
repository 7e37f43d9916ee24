#include "kcsm/spectra.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace kcsm::spectra {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---- state space ----

StateSpace::StateSpace(const ModelSpec& model)
    : model_(std::make_shared<ModelSpec>(model)) {
  n_ = model.num_vertices();
  s_ = model.measure().num_states();
  require(n_ >= 1 && n_ <= kMaxVertices, ErrorCode::CapExceeded,
          "exact spectra are capped at " + std::to_string(kMaxVertices) +
              " vertices (got " + std::to_string(n_) + ")");
  size_ = 1;
  place_.resize(static_cast<std::size_t>(n_));
  for (int x = 0; x < n_; ++x) {
    place_[static_cast<std::size_t>(x)] = size_;
    size_ *= static_cast<std::uint64_t>(s_);
    require(size_ <= kMaxStates, ErrorCode::CapExceeded,
            "state space exceeds 2^24 configurations");
  }
  mu_.resize(size_);
  const auto& probs = model.measure().probs;
  for (std::uint64_t i = 0; i < size_; ++i) {
    double w = 1.0;
    std::uint64_t rest = i;
    for (int x = 0; x < n_; ++x) {
      w *= probs[rest % static_cast<std::uint64_t>(s_)];
      rest /= static_cast<std::uint64_t>(s_);
    }
    mu_[i] = w;
  }
}

std::uint64_t StateSpace::index_of(const GeneralConfig& cfg) const {
  std::uint64_t i = 0;
  for (int x = 0; x < n_; ++x)
    i += place_[static_cast<std::size_t>(x)] * cfg[static_cast<std::size_t>(x)];
  return i;
}

std::uint64_t StateSpace::index_of(const SpinConfig& cfg) const {
  require(s_ == 2, ErrorCode::InvalidArgument, "bit configs need a 0-1 model");
  return cfg.low_bits();
}

GeneralConfig StateSpace::config_of(std::uint64_t index) const {
  GeneralConfig cfg(static_cast<std::size_t>(n_));
  for (int x = 0; x < n_; ++x) {
    cfg[static_cast<std::size_t>(x)] = static_cast<std::uint8_t>(index % s_);
    index /= static_cast<std::uint64_t>(s_);
  }
  return cfg;
}

SpinConfig StateSpace::spin_config_of(std::uint64_t index) const {
  require(s_ == 2, ErrorCode::InvalidArgument, "bit configs need a 0-1 model");
  return SpinConfig::from_bits(n_, index);
}

int StateSpace::value_at(std::uint64_t index, Vertex x) const {
  return static_cast<int>((index / place_[static_cast<std::size_t>(x)]) % s_);
}

std::uint64_t StateSpace::with_value(std::uint64_t index, Vertex x, int value) const {
  int cur = value_at(index, x);
  return index + place_[static_cast<std::size_t>(x)] *
                     (static_cast<std::int64_t>(value) - cur);
}

void StateSpace::override_weights(std::vector<double> weights) {
  require(weights.size() == size_, ErrorCode::InvalidArgument,
          "weight vector size mismatch");
  double sum = 0.0;
  for (double w : weights) {
    require(w > 0.0, ErrorCode::InvalidArgument, "weights must be positive");
    sum += w;
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
          "weights must sum to 1");
  mu_ = std::move(weights);
}

// ---- generator ----

Generator build_generator(const ModelSpec& model) {
  model.measure().validate_strict();
  Generator gen;
  gen.space_ = std::make_shared<StateSpace>(model);
  const StateSpace& sp = *gen.space_;
  int n = sp.num_sites();
  int s = sp.states_per_site();
  std::uint64_t dim = sp.size();
  const auto& probs = model.measure().probs;
  bool binary = (s == 2);

  gen.row_ptr_.assign(dim + 1, 0);
  std::vector<std::pair<std::uint32_t, double>> row;
  row.reserve(static_cast<std::size_t>(n) * (s - 1));
  gen.diag_.assign(dim, 0.0);
  gen.col_.reserve(dim * static_cast<std::size_t>(n) * (s - 1) / 2);
  gen.rate_.reserve(gen.col_.capacity());

  for (std::uint64_t i = 0; i < dim; ++i) {
    row.clear();
    double out = 0.0;
    if (binary) {
      SpinConfig cfg = SpinConfig::from_bits(n, i);
      for (Vertex x = 0; x < n; ++x) {
        if (!model.constraint(cfg, x)) continue;
        int cur = cfg.get(x);
        double r = probs[static_cast<std::size_t>(1 - cur)];
        row.emplace_back(static_cast<std::uint32_t>(i ^ (1ull << x)), r);
        out += r;
      }
    } else {
      GeneralConfig cfg = sp.config_of(i);
      for (Vertex x = 0; x < n; ++x) {
        if (!model.constraint(cfg, x)) continue;
        int cur = cfg[static_cast<std::size_t>(x)];
        for (int v = 0; v < s; ++v) {
          if (v == cur) continue;
          double r = probs[static_cast<std::size_t>(v)];
          row.emplace_back(static_cast<std::uint32_t>(sp.with_value(i, x, v)), r);
          out += r;
        }
      }
    }
    std::sort(row.begin(), row.end());
    for (auto& [c, r] : row) {
      gen.col_.push_back(c);
      gen.rate_.push_back(r);
    }
    gen.diag_[i] = -out;
    gen.row_ptr_[i + 1] = gen.col_.size();
  }
  return gen;
}

double Generator::entry(std::uint64_t i, std::uint64_t j) const {
  auto lo = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  auto hi = col_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  auto it = std::lower_bound(lo, hi, static_cast<std::uint32_t>(j));
  if (it != hi && *it == j) return rate_[static_cast<std::size_t>(it - col_.begin())];
  return 0.0;
}

void Generator::replace_rates(std::vector<double> rates, std::vector<double> diag) {
  require(rates.size() == rate_.size() && diag.size() == diag_.size(),
          ErrorCode::InvalidArgument, "rate pattern mismatch");
  rate_ = std::move(rates);
  diag_ = std::move(diag);
}

std::vector<std::vector<std::uint32_t>> ergodic_components(const Generator& gen) {
  std::uint64_t dim = gen.dim();
  std::vector<std::int32_t> comp(dim, -1);
  std::vector<std::vector<std::uint32_t>> out;
  for (std::uint64_t start = 0; start < dim; ++start) {
    if (comp[start] >= 0) continue;
    std::int32_t id = static_cast<std::int32_t>(out.size());
    out.emplace_back();
    std::deque<std::uint32_t> queue{static_cast<std::uint32_t>(start)};
    comp[start] = id;
    while (!queue.empty()) {
      std::uint32_t i = queue.front();
      queue.pop_front();
      out.back().push_back(i);
      for (std::uint64_t k = gen.row_ptr()[i]; k < gen.row_ptr()[i + 1]; ++k) {
        std::uint32_t j = gen.col()[k];
        if (comp[j] < 0 && gen.rate()[k] > 0.0) {
          comp[j] = id;
          queue.push_back(j);
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

// ---- symmetrized restricted operator ----

namespace {

// Symmetrization D^{1/2} (-L) D^{-1/2} restricted to a component (or any
// index subset closed under the moves we keep). Entries between kept and
// dropped states are discarded, which is exactly the Dirichlet principal
// submatrix when the subset is not move-closed.
struct SymOperator {
  std::vector<std::uint64_t> row_ptr;
  std::vector<std::uint32_t> col;
  std::vector<double> val;
  std::vector<double> diag;
  std::uint64_t n = 0;

  void matvec(const double* x, double* y) const {
    for (std::uint64_t i = 0; i < n; ++i) {
      double acc = diag[i] * x[i];
      for (std::uint64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        acc += val[k] * x[col[k]];
      y[i] = acc;
    }
  }

  VectorXd apply(const VectorXd& x) const {
    VectorXd y(static_cast<Eigen::Index>(n));
    matvec(x.data(), y.data());
    return y;
  }

  MatrixXd dense() const {
    MatrixXd m = MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                static_cast<Eigen::Index>(n));
    for (std::uint64_t i = 0; i < n; ++i) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag[i];
      for (std::uint64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col[k])) = val[k];
    }
    return m;
  }
};

SymOperator restrict_symmetrized(const Generator& gen,
                                 const std::vector<std::uint32_t>& keep) {
  const auto& mu = gen.mu();
  std::vector<std::int32_t> local(gen.dim(), -1);
  for (std::size_t l = 0; l < keep.size(); ++l)
    local[keep[l]] = static_cast<std::int32_t>(l);

  SymOperator op;
  op.n = keep.size();
  op.row_ptr.assign(op.n + 1, 0);
  op.diag.resize(op.n);
  std::vector<double> sqrt_mu(keep.size());
  for (std::size_t l = 0; l < keep.size(); ++l) sqrt_mu[l] = std::sqrt(mu[keep[l]]);

  // first pass: counts
  for (std::size_t l = 0; l < keep.size(); ++l) {
    std::uint32_t i = keep[l];
    std::uint64_t cnt = 0;
    for (std::uint64_t k = gen.row_ptr()[i]; k < gen.row_ptr()[i + 1]; ++k)
      if (local[gen.col()[k]] >= 0) ++cnt;
    op.row_ptr[l + 1] = op.row_ptr[l] + cnt;
  }
  op.col.resize(op.row_ptr.back());
  op.val.resize(op.row_ptr.back());
  for (std::size_t l = 0; l < keep.size(); ++l) {
    std::uint32_t i = keep[l];
    op.diag[l] = -gen.diag()[i];
    std::uint64_t pos = op.row_ptr[l];
    for (std::uint64_t k = gen.row_ptr()[i]; k < gen.row_ptr()[i + 1]; ++k) {
      std::int32_t lj = local[gen.col()[k]];
      if (lj < 0) continue;
      op.col[pos] = static_cast<std::uint32_t>(lj);
      op.val[pos] = -gen.rate()[k] * sqrt_mu[l] / sqrt_mu[static_cast<std::size_t>(lj)];
      ++pos;
    }
  }
  // enforce exact symmetry (the two detailed-balance routes agree only up to
  // rounding): average each pair
  for (std::size_t l = 0; l < op.n; ++l) {
    for (std::uint64_t k = op.row_ptr[l]; k < op.row_ptr[l + 1]; ++k) {
      std::uint32_t j = op.col[k];
      if (j <= l) continue;
      // locate the partner entry (pattern is symmetric)
      auto lo = op.col.begin() + static_cast<std::ptrdiff_t>(op.row_ptr[j]);
      auto hi = op.col.begin() + static_cast<std::ptrdiff_t>(op.row_ptr[j + 1]);
      auto it = std::lower_bound(lo, hi, static_cast<std::uint32_t>(l));
      if (it != hi && *it == l) {
        std::size_t kk = static_cast<std::size_t>(it - op.col.begin());
        double avg = 0.5 * (op.val[k] + op.val[kk]);
        op.val[k] = avg;
        op.val[kk] = avg;
      }
    }
  }
  return op;
}

struct EigResult {
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string method;
};

EigResult dense_smallest(const SymOperator& op, int n_deflate) {
  MatrixXd m = op.dense();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  EigResult r;
  r.method = "dense";
  r.converged = (es.info() == Eigen::Success);
  const VectorXd& ev = es.eigenvalues();
  Eigen::Index idx = std::min<Eigen::Index>(n_deflate, ev.size() - 1);
  r.value = ev(idx);
  VectorXd y = es.eigenvectors().col(idx);
  double scale = std::max(std::abs(ev(ev.size() - 1)), 1e-300);
  r.residual = (op.apply(y) - r.value * y).norm() / scale;
  r.iterations = static_cast<int>(op.n);
  return r;
}

// Lanczos with full reorthogonalization and explicit deflation vectors;
// restarted when the basis hits the memory cap.
EigResult lanczos_smallest(const SymOperator& op, const std::vector<VectorXd>& deflate,
                           double tol, std::uint64_t max_total_iters,
                           std::uint64_t basis_cap = 500) {
  const auto n = static_cast<Eigen::Index>(op.n);
  EigResult result;
  result.method = "lanczos";

  auto project_out = [&](VectorXd& w) {
    for (const auto& u : deflate) w -= u.dot(w) * u;
  };

  auto s = rng::stream_for(0xC0FFEEull, rng::Purpose::Solver, op.n);
  VectorXd v0(n);
  for (Eigen::Index i = 0; i < n; ++i) v0[i] = s.next_normal();
  project_out(v0);
  double nv = v0.norm();
  if (nv < 1e-14) {  // deflation space covers everything
    result.converged = true;
    result.value = 0.0;
    result.method = "trivial";
    return result;
  }
  v0 /= nv;

  std::uint64_t total_iters = 0;
  double theta_max = 0.0;

  while (total_iters < max_total_iters) {
    std::vector<VectorXd> basis{v0};
    std::vector<double> alpha, beta;
    VectorXd v = v0, v_prev = VectorXd::Zero(n);
    bool exhausted = false;

    for (std::uint64_t k = 0; k < basis_cap && total_iters < max_total_iters; ++k) {
      ++total_iters;
      VectorXd w = op.apply(v);
      if (!beta.empty()) w -= beta.back() * v_prev;
      double a = v.dot(w);
      alpha.push_back(a);
      w -= a * v;
      project_out(w);
      for (const auto& b : basis) w -= b.dot(w) * b;  // full reorthogonalization
      for (const auto& b : basis) w -= b.dot(w) * b;  // second sweep
      double bnorm = w.norm();

      // Ritz values of the current tridiagonal
      Eigen::Index m = static_cast<Eigen::Index>(alpha.size());
      MatrixXd T = MatrixXd::Zero(m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        T(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < m)
          T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
      double theta = es.eigenvalues()(0);
      theta_max = std::max(theta_max, es.eigenvalues()(m - 1));
      double bottom = std::abs(es.eigenvectors()(m - 1, 0));
      double res_est = bnorm * bottom;
      double scale = std::max(theta_max, 1e-300);

      if (res_est <= tol * scale || bnorm <= 1e-14 * scale || m >= n) {
        // assemble the Ritz vector for an explicit residual
        VectorXd y = VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < m; ++i)
          y += es.eigenvectors()(i, 0) * basis[static_cast<std::size_t>(i)];
        project_out(y);
        double yn = y.norm();
        if (yn > 1e-14) {
          y /= yn;
          double rayleigh = y.dot(op.apply(y));
          result.value = rayleigh;
          result.residual = (op.apply(y) - rayleigh * y).norm() / scale;
        } else {
          result.value = theta;
          result.residual = res_est / scale;
        }
        result.iterations = static_cast<int>(total_iters);
        result.converged = result.residual <= 10 * tol;
        if (result.converged || bnorm <= 1e-14 * scale || m >= n) return result;
        exhausted = true;  // residual estimate lied; restart from the Ritz vector
        v0 = y;
        break;
      }

      beta.push_back(bnorm);
      v_prev = v;
      v = w / bnorm;
      basis.push_back(v);

    }

    if (!exhausted) {
      // basis cap reached: restart from the best Ritz approximation
      Eigen::Index m = static_cast<Eigen::Index>(alpha.size());
      MatrixXd T = MatrixXd::Zero(m, m);
      for (Eigen::Index i = 0; i < m; ++i) {
        T(i, i) = alpha[static_cast<std::size_t>(i)];
        if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[static_cast<std::size_t>(i)];
      }
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(T);
      VectorXd y = VectorXd::Zero(n);
      for (Eigen::Index i = 0; i < m; ++i)
        y += es.eigenvectors()(i, 0) * basis[static_cast<std::size_t>(i)];
      project_out(y);
      double yn = y.norm();
      if (yn < 1e-14) break;
      v0 = y / yn;
    }
  }

  result.iterations = static_cast<int>(total_iters);
  result.converged = false;
  return result;
}

EigResult smallest_eig(const SymOperator& op, const std::vector<VectorXd>& deflate,
                       const SolverOptions& opts) {
  if (op.n <= opts.dense_direct_dim) return dense_smallest(op, static_cast<int>(deflate.size()));
  std::uint64_t budget =
      std::max<std::uint64_t>(200, static_cast<std::uint64_t>(opts.max_iter_factor) * op.n);
  EigResult r = lanczos_smallest(op, deflate, opts.tol, budget);
  if (!r.converged && op.n <= opts.dense_fallback_dim) {
    EigResult d = dense_smallest(op, static_cast<int>(deflate.size()));
    d.iterations += r.iterations;
    return d;
  }
  return r;
}

}  // namespace

// ---- public entry points ----

SpectralReport spectral_gap(const Generator& gen,
                            const std::vector<std::uint32_t>& component,
                            const SolverOptions& opts) {
  require(!component.empty(), ErrorCode::InvalidArgument, "component is empty");
  SpectralReport rep;
  rep.dim = component.size();
  rep.component_sizes = {component.size()};
  rep.zero_multiplicity = 1;
  if (component.size() == 1) {
    rep.gap = 0.0;
    rep.relaxation_time = std::numeric_limits<double>::infinity();
    rep.converged = true;
    rep.method = "trivial";
    return rep;
  }
  SymOperator op = restrict_symmetrized(gen, component);
  // deflate the known null vector sqrt(mu | component)
  VectorXd u(static_cast<Eigen::Index>(op.n));
  double norm = 0.0;
  for (std::size_t l = 0; l < component.size(); ++l) {
    double w = gen.mu()[component[l]];
    u[static_cast<Eigen::Index>(l)] = std::sqrt(w);
    norm += w;
  }
  u /= std::sqrt(norm);
  EigResult r = smallest_eig(op, {u}, opts);
  rep.gap = std::max(r.value, 0.0);
  rep.relaxation_time = rep.gap > 0 ? 1.0 / rep.gap
                                    : std::numeric_limits<double>::infinity();
  rep.residual = r.residual;
  rep.converged = r.converged;
  rep.iterations = r.iterations;
  rep.method = r.method;
  if (!r.converged)
    rep.method += " (not converged)";
  return rep;
}

SpectralReport analyze(const Generator& gen, const SolverOptions& opts) {
  auto comps = ergodic_components(gen);
  if (comps.size() == 1) {
    SpectralReport rep = spectral_gap(gen, comps[0], opts);
    rep.zero_multiplicity = 1;
    return rep;
  }
  SpectralReport rep;
  rep.dim = gen.dim();
  rep.zero_multiplicity = static_cast<int>(comps.size());
  for (const auto& c : comps) rep.component_sizes.push_back(c.size());
  rep.gap = 0.0;  // zero eigenvalue is not simple
  rep.relaxation_time = std::numeric_limits<double>::infinity();
  rep.converged = true;
  rep.method = "reducible";
  return rep;
}

double dirichlet_eigenvalue(const Generator& gen,
                            const std::function<bool(std::uint64_t)>& in_A,
                            const SolverOptions& opts) {
  auto comps = ergodic_components(gen);
  require(comps.size() == 1, ErrorCode::InvalidArgument,
          "Dirichlet eigenvalue needs an irreducible chain");
  std::vector<std::uint32_t> keep;
  std::uint64_t removed = 0;
  for (std::uint64_t i = 0; i < gen.dim(); ++i) {
    if (in_A(i))
      ++removed;
    else
      keep.push_back(static_cast<std::uint32_t>(i));
  }
  require(removed > 0, ErrorCode::InvalidArgument, "A is empty");
  require(!keep.empty(), ErrorCode::InvalidArgument,
          "A covers the whole space; the Dirichlet eigenvalue is undefined");
  SymOperator op = restrict_symmetrized(gen, keep);
  EigResult r = smallest_eig(op, {}, opts);
  require(r.converged, ErrorCode::SolverFailure,
          "Dirichlet eigensolve did not converge");
  return r.value;
}

SpectralReport gap_plus(const ModelSpec& model, const SolverOptions& opts) {
  require(model.is_binary(), ErrorCode::UnsupportedTopology,
          "the restricted-component gap is defined for 0-1 models");
  Generator gen = build_generator(model);
  std::uint64_t all_ones = gen.dim() - 1;  // every site occupied
  auto comps = ergodic_components(gen);
  std::vector<const std::vector<std::uint32_t>*> plus_comps;
  for (const auto& c : comps) {
    if (c.size() == 1 && c[0] == all_ones) continue;
    require(std::find(c.begin(), c.end(), static_cast<std::uint32_t>(all_ones)) == c.end(),
            ErrorCode::InvalidArgument,
            "the fully occupied state is not isolated; the restricted space "
            "is not closed under the dynamics");
    plus_comps.push_back(&c);
  }
  if (plus_comps.size() != 1) {
    std::string msg = "the states with a vacancy split into " +
                      std::to_string(plus_comps.size()) + " ergodic classes of sizes ";
    for (const auto* c : plus_comps) msg += std::to_string(c->size()) + " ";
    fail(ErrorCode::InvalidArgument, msg);
  }
  return spectral_gap(gen, *plus_comps[0], opts);
}

DominationGapReport check_domination_gap(const ModelSpec& a, const ModelSpec& b,
                                         double tol, const SolverOptions& opts) {
  auto dom = models::dominates(a, b);
  require(dom.holds, ErrorCode::InvalidArgument,
          "precondition failed: a does not dominate b");
  Generator ga = build_generator(a);
  Generator gb = build_generator(b);
  auto ca = ergodic_components(ga);
  auto cb = ergodic_components(gb);
  require(ca.size() == 1 && cb.size() == 1, ErrorCode::InvalidArgument,
          "domination gap check needs irreducible chains");
  DominationGapReport rep;
  rep.gap_a = spectral_gap(ga, ca[0], opts).gap;
  rep.gap_b = spectral_gap(gb, cb[0], opts).gap;
  rep.holds = rep.gap_b <= rep.gap_a + tol;
  return rep;
}

double dirichlet_form(const Generator& gen, const std::vector<double>& f) {
  require(f.size() == gen.dim(), ErrorCode::InvalidArgument, "size mismatch");
  const auto& mu = gen.mu();
  double acc = 0.0;
  for (std::uint64_t i = 0; i < gen.dim(); ++i)
    for (std::uint64_t k = gen.row_ptr()[i]; k < gen.row_ptr()[i + 1]; ++k) {
      double d = f[gen.col()[k]] - f[i];
      acc += 0.5 * mu[i] * gen.rate()[k] * d * d;
    }
  return acc;
}

double variance_on(const Generator& gen, const std::vector<std::uint32_t>& component,
                   const std::vector<double>& f) {
  const auto& mu = gen.mu();
  double z = 0.0, mean = 0.0, m2 = 0.0;
  for (std::uint32_t i : component) z += mu[i];
  for (std::uint32_t i : component) {
    double w = mu[i] / z;
    mean += w * f[i];
    m2 += w * f[i] * f[i];
  }
  return m2 - mean * mean;
}

double measure_of(const Generator& gen,
                  const std::function<bool(std::uint64_t)>& pred) {
  const auto& mu = gen.mu();
  double acc = 0.0;
  for (std::uint64_t i = 0; i < gen.dim(); ++i)
    if (pred(i)) acc += mu[i];
  return acc;
}

}  // namespace kcsm::spectra
