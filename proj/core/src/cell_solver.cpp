#include "homlab/cell_solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>

#include <fftw3.h>

namespace homlab {
namespace {

std::atomic<std::uint64_t> g_solves{0};
std::atomic<std::uint64_t> g_flagged{0};
std::atomic<std::uint64_t> g_violations{0};

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}

/// Precomputed connectivity shared by the iteration kernels.
struct Topology {
  int d = 1;
  int m = 1;
  int n = 1;
  double h = 1.0;
  std::size_t cells = 0;
  std::size_t nodes = 0;
  std::vector<std::size_t> base;      // node index of each cell's lower corner
  std::vector<std::size_t> stride;    // node stride per axis
  std::vector<unsigned char> interior;

  explicit Topology(const Grid& g)
      : d(g.dim), m(g.components), n(g.n), h(g.h()), cells(g.cell_count()), nodes(g.node_count()) {
    stride = g.node_strides();
    base.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) base[c] = g.node_of_cell(c);
    interior.resize(nodes);
    for (std::size_t k = 0; k < nodes; ++k) interior[k] = g.is_boundary_node(k) ? 0 : 1;
  }

  /// out (cells x m x d) = G v
  void gradient(std::span<const double> v, std::span<double> out) const {
    const double inv_h = 1.0 / h;
    const std::size_t md = static_cast<std::size_t>(m * d);
    for (std::size_t c = 0; c < cells; ++c) {
      const std::size_t b = base[c] * m;
      double* o = &out[c * md];
      for (int j = 0; j < d; ++j) {
        const std::size_t nb = b + stride[j] * m;
        for (int i = 0; i < m; ++i) o[i * d + j] = (v[nb + i] - v[b + i]) * inv_h;
      }
    }
  }

  /// out (nodes x m) = G^T p restricted to interior nodes.
  void divergence(std::span<const double> p, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    const double inv_h = 1.0 / h;
    const std::size_t md = static_cast<std::size_t>(m * d);
    for (std::size_t c = 0; c < cells; ++c) {
      const std::size_t b = base[c] * m;
      const double* pc = &p[c * md];
      for (int j = 0; j < d; ++j) {
        const std::size_t nb = b + stride[j] * m;
        for (int i = 0; i < m; ++i) {
          const double val = pc[i * d + j] * inv_h;
          out[nb + i] += val;
          out[b + i] -= val;
        }
      }
    }
    for (std::size_t k = 0; k < nodes; ++k)
      if (!interior[k])
        for (int i = 0; i < m; ++i) out[k * m + i] = 0.0;
  }
};

/// Projection of z onto the unit Frobenius ball in the metric weighted by
/// 1/step_j per column: q_ij = z_ij / (1 + mu step_j), mu >= 0 found by a
/// safeguarded Newton iteration on the Lagrange multiplier.
void weighted_ball_projection(std::span<double> z, int m, int d, std::span<const double> step) {
  double norm2 = 0.0;
  for (const double v : z) norm2 += v * v;
  if (norm2 <= 1.0) return;
  bool uniform = true;
  for (int j = 1; j < d; ++j) uniform = uniform && step[j] == step[0];
  if (uniform) {
    const double s = 1.0 / std::sqrt(norm2);
    for (double& v : z) v *= s;
    return;
  }
  std::vector<double> col2(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) col2[j] += z[i * d + j] * z[i * d + j];
  auto phi = [&](double mu, double* dphi) {
    double f = 0.0, df = 0.0;
    for (int j = 0; j < d; ++j) {
      const double den = 1.0 + mu * step[j];
      f += col2[j] / (den * den);
      df -= 2.0 * col2[j] * step[j] / (den * den * den);
    }
    if (dphi) *dphi = df;
    return f - 1.0;
  };
  // phi is convex and decreasing; Newton from the left never overshoots.
  double lo = 0.0;
  double hi = 0.0;
  {
    const double smin = *std::min_element(step.begin(), step.begin() + d);
    hi = (std::sqrt(norm2) - 1.0) / smin;  // phi(hi) <= 0
  }
  double mu = 0.0;
  for (int it = 0; it < 100; ++it) {
    double df = 0.0;
    const double f = phi(mu, &df);
    if (f <= 0.0) hi = std::min(hi, mu);
    else lo = std::max(lo, mu);
    if (std::abs(f) < 1e-14) break;
    double next = mu - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - mu) <= 1e-16 * std::max(1.0, mu)) {
      mu = next;
      break;
    }
    mu = next;
  }
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < d; ++j) z[i * d + j] /= 1.0 + mu * step[j];
  // Guarantee feasibility against roundoff.
  double n2 = 0.0;
  for (const double v : z) n2 += v * v;
  if (n2 > 1.0) {
    const double s = 1.0 / std::sqrt(n2);
    for (double& v : z) v *= s;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::vector<double> center_, double side_, int n_, int components_)
    : dim(static_cast<int>(center_.size())), center(std::move(center_)), side(side_), n(n_),
      components(components_) {
  validate();
}

void Grid::validate() const {
  if (dim < 1 || static_cast<int>(center.size()) != dim) throw ConfigError("grid.center", "dimension mismatch");
  if (!(side > 0.0) || !std::isfinite(side)) throw ConfigError("grid.side", "must be positive");
  if (n < 2) throw ConfigError("grid.n", "needs at least 2 cells per side");
  if (components < 1) throw ConfigError("grid.components", "must be >= 1");
}

std::size_t Grid::cell_count() const noexcept { return ipow(static_cast<std::size_t>(n), dim); }
std::size_t Grid::node_count() const noexcept { return ipow(static_cast<std::size_t>(n) + 1, dim); }
double Grid::cell_volume() const noexcept { return std::pow(h(), dim); }

std::vector<std::size_t> Grid::node_strides() const {
  std::vector<std::size_t> s(static_cast<std::size_t>(dim));
  std::size_t acc = 1;
  for (int k = dim - 1; k >= 0; --k) {
    s[k] = acc;
    acc *= static_cast<std::size_t>(n) + 1;
  }
  return s;
}

std::vector<std::size_t> Grid::cell_strides() const {
  std::vector<std::size_t> s(static_cast<std::size_t>(dim));
  std::size_t acc = 1;
  for (int k = dim - 1; k >= 0; --k) {
    s[k] = acc;
    acc *= static_cast<std::size_t>(n);
  }
  return s;
}

void Grid::cell_index_to_multi(std::size_t c, std::span<int> idx) const {
  for (int k = dim - 1; k >= 0; --k) {
    idx[k] = static_cast<int>(c % static_cast<std::size_t>(n));
    c /= static_cast<std::size_t>(n);
  }
}

std::size_t Grid::node_of_cell(std::size_t c) const {
  std::size_t node = 0;
  std::size_t acc = 1;
  for (int k = dim - 1; k >= 0; --k) {
    node += (c % static_cast<std::size_t>(n)) * acc;
    c /= static_cast<std::size_t>(n);
    acc *= static_cast<std::size_t>(n) + 1;
  }
  return node;
}

bool Grid::is_boundary_node(std::size_t node) const {
  for (int k = 0; k < dim; ++k) {
    const std::size_t i = node % (static_cast<std::size_t>(n) + 1);
    if (i == 0 || i == static_cast<std::size_t>(n)) return true;
    node /= static_cast<std::size_t>(n) + 1;
  }
  return false;
}

void Grid::node_position(std::size_t node, std::span<double> x) const {
  const double hh = h();
  for (int k = dim - 1; k >= 0; --k) {
    const std::size_t i = node % (static_cast<std::size_t>(n) + 1);
    node /= static_cast<std::size_t>(n) + 1;
    x[k] = (center[k] - 0.5 * side) + static_cast<double>(i) * hh;
  }
}

void Grid::cell_center(std::size_t c, std::span<double> x) const {
  const double hh = h();
  for (int k = dim - 1; k >= 0; --k) {
    const std::size_t i = c % static_cast<std::size_t>(n);
    c /= static_cast<std::size_t>(n);
    x[k] = (center[k] - 0.5 * side) + (static_cast<double>(i) + 0.5) * hh;
  }
}

// ---------------------------------------------------------------------------
// Problem assembly and energies

double CellProblem::lower_sum() const {
  double s = 0.0;
  for (const double v : lower) s += v;
  return s * grid.cell_volume();
}

CellProblem assemble(const IntegrandModel& model, const Grid& grid, const Matrix& xi) {
  grid.validate();
  if (grid.dim != model.dim()) throw ConfigError("grid", "dimension differs from the field");
  if (xi.rows() != grid.components || xi.cols() != grid.dim)
    throw ConfigError("xi", "shape must be m x d = " + std::to_string(grid.components) + " x " +
                                std::to_string(grid.dim));
  if (!xi.all_finite()) throw ConfigError("xi", "entries must be finite");
  CellProblem p;
  p.grid = grid;
  p.xi = xi;
  const std::size_t cells = grid.cell_count();
  const int d = grid.dim;
  p.weights.resize(cells * static_cast<std::size_t>(d));
  if (model.include_lower) p.lower.resize(cells);
  std::vector<double> x(static_cast<std::size_t>(d));
  std::vector<std::int64_t> cell(static_cast<std::size_t>(d));
  bool iso = true;
  for (std::size_t c = 0; c < cells; ++c) {
    grid.cell_center(c, x);
    model.field.locate(x, cell);
    std::span<double> w(&p.weights[c * d], static_cast<std::size_t>(d));
    model.field.cell_diagonal(cell, w);
    for (int j = 1; j < d; ++j) iso = iso && w[j] == w[0];
    if (model.include_lower) p.lower[c] = model.field.cell_lower(cell);
  }
  p.isotropic = iso;
  return p;
}

void cell_gradient(const Grid& grid, std::span<const double> nodal, std::size_t c, std::span<double> out) {
  const auto stride = grid.node_strides();
  const std::size_t m = static_cast<std::size_t>(grid.components);
  const std::size_t b = grid.node_of_cell(c) * m;
  const double inv_h = 1.0 / grid.h();
  for (int j = 0; j < grid.dim; ++j)
    for (std::size_t i = 0; i < m; ++i)
      out[i * grid.dim + j] = (nodal[b + stride[j] * m + i] - nodal[b + i]) * inv_h;
}

double cell_energy(const CellProblem& p, std::span<const double> nodal, std::size_t c, bool add_xi) {
  const int d = p.grid.dim;
  std::vector<double> g(p.xi.size());
  cell_gradient(p.grid, nodal, c, g);
  if (add_xi)
    for (std::size_t k = 0; k < g.size(); ++k) g[k] += p.xi.values()[k];
  return column_scaled_norm(g, d, std::span<const double>(&p.weights[c * d], static_cast<std::size_t>(d)));
}

double discrete_energy(const CellProblem& p, std::span<const double> v) {
  const Topology topo(p.grid);
  const std::size_t md = p.xi.size();
  std::vector<double> g(topo.cells * md);
  topo.gradient(v, g);
  const int d = p.grid.dim;
  double s = 0.0;
  for (std::size_t c = 0; c < topo.cells; ++c) {
    for (std::size_t k = 0; k < md; ++k) g[c * md + k] += p.xi.values()[k];
    s += column_scaled_norm(std::span<const double>(&g[c * md], md), d,
                            std::span<const double>(&p.weights[c * d], static_cast<std::size_t>(d)));
  }
  return s * p.grid.cell_volume() + p.lower_sum();
}

// ---------------------------------------------------------------------------
// Solver

namespace {

/// Exact solve of G^T G phi = r on interior nodes. Restricted to the interior,
/// G^T G is the Dirichlet lattice Laplacian, diagonalized by DST-I per axis.
class DirichletPoisson {
 public:
  explicit DirichletPoisson(const Topology& topo) : topo_(topo) {
    const int n = topo.n;
    inner_ = n - 1;
    if (inner_ <= 0) return;
    count_ = ipow(static_cast<std::size_t>(inner_), topo.d);
    buffer_ = fftw_alloc_real(count_);
    std::vector<int> sizes(static_cast<std::size_t>(topo.d), inner_);
    std::vector<fftw_r2r_kind> kinds(static_cast<std::size_t>(topo.d), FFTW_RODFT00);
    {
      static std::mutex planner;
      std::lock_guard<std::mutex> lock(planner);
      plan_ = fftw_plan_r2r(topo.d, sizes.data(), buffer_, buffer_, kinds.data(), FFTW_ESTIMATE);
    }
    const double inv_h2 = 1.0 / (topo.h * topo.h);
    std::vector<double> mode(static_cast<std::size_t>(inner_));
    for (int k = 0; k < inner_; ++k) mode[k] = (2.0 - 2.0 * std::cos(M_PI * (k + 1) / n)) * inv_h2;
    const double norm = std::pow(2.0 * n, topo.d);
    inverse_.resize(count_);
    interior_nodes_.resize(count_);
    std::vector<int> idx(static_cast<std::size_t>(topo.d), 0);
    for (std::size_t e = 0; e < count_; ++e) {
      double lam = 0.0;
      std::size_t node = 0;
      for (int a = 0; a < topo.d; ++a) {
        lam += mode[idx[a]];
        node += static_cast<std::size_t>(idx[a] + 1) * topo.stride[a];
      }
      inverse_[e] = 1.0 / (lam * norm);
      interior_nodes_[e] = node;
      for (int a = topo.d - 1; a >= 0; --a) {
        if (++idx[a] < inner_) break;
        idx[a] = 0;
      }
    }
  }
  ~DirichletPoisson() {
    if (plan_ != nullptr) {
      fftw_destroy_plan(plan_);
      fftw_free(buffer_);
    }
  }
  DirichletPoisson(const DirichletPoisson&) = delete;
  DirichletPoisson& operator=(const DirichletPoisson&) = delete;

  /// phi (nodes x m) from rhs (nodes x m); boundary entries of phi are zero.
  void solve(std::span<const double> rhs, std::span<double> phi) {
    std::fill(phi.begin(), phi.end(), 0.0);
    if (plan_ == nullptr) return;
    const int m = topo_.m;
    for (int i = 0; i < m; ++i) {
      for (std::size_t e = 0; e < count_; ++e) buffer_[e] = rhs[interior_nodes_[e] * m + i];
      fftw_execute(plan_);
      for (std::size_t e = 0; e < count_; ++e) buffer_[e] *= inverse_[e];
      fftw_execute(plan_);
      for (std::size_t e = 0; e < count_; ++e) phi[interior_nodes_[e] * m + i] = buffer_[e];
    }
  }

 private:
  const Topology& topo_;
  int inner_ = 0;
  std::size_t count_ = 0;
  double* buffer_ = nullptr;
  fftw_plan plan_ = nullptr;
  std::vector<double> inverse_;
  std::vector<std::size_t> interior_nodes_;
};

/// On a one-dimensional grid the discrete minimizer is explicit: the whole
/// increment xi t sits in the cheapest cell (first one on ties).
std::vector<double> concentrated_1d(const CellProblem& prob) {
  const int n = prob.grid.n;
  const int m = prob.grid.components;
  const double h = prob.grid.h();
  const auto xi = prob.xi.values();
  const auto cheapest = static_cast<int>(
      std::min_element(prob.weights.begin(), prob.weights.end()) - prob.weights.begin());
  std::vector<double> v(static_cast<std::size_t>((n + 1) * m), 0.0);
  for (int k = 1; k < n; ++k)
    for (int i = 0; i < m; ++i) v[k * m + i] = xi[i] * ((k > cheapest ? prob.grid.side : 0.0) - k * h);
  return v;
}

/// Lower bound from the dual iterate p: remove the part of p outside ker G^T,
/// scale into the feasible set and evaluate the dual objective.
double dual_bound(const CellProblem& prob, const Topology& topo, std::span<const double> p,
                  DirichletPoisson& poisson) {
  const std::size_t nm = topo.nodes * topo.m;
  const std::size_t md = prob.xi.size();
  const int d = topo.d;
  const int m = topo.m;
  const auto xi = prob.xi.values();
  std::vector<double> rhs(nm), potential(nm), grad(topo.cells * md);
  topo.divergence(p, rhs);
  poisson.solve(rhs, potential);
  topo.gradient(potential, grad);
  double worst = 0.0;
  double linear = 0.0;
  for (std::size_t c = 0; c < topo.cells; ++c) {
    double ball = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < d; ++j) {
        const std::size_t k = c * md + static_cast<std::size_t>(i * d + j);
        const double pt = p[k] - grad[k];
        const double scaled = pt / prob.weights[c * d + j];
        ball += scaled * scaled;
        linear += pt * xi[static_cast<std::size_t>(i * d + j)];
      }
    worst = std::max(worst, ball);
  }
  const double theta = worst > 1.0 ? 1.0 / std::sqrt(worst) : 1.0;
  return std::max(theta * linear * prob.grid.cell_volume() + prob.lower_sum(), prob.lower_sum());
}

/// `raw_dual` is the bound before clamping to the primal value.
void record_audit(const SolveReport& r, double tol, double raw_dual) {
  g_solves.fetch_add(1, std::memory_order_relaxed);
  if (!r.converged) g_flagged.fetch_add(1, std::memory_order_relaxed);
  const double scale = std::max(1.0, std::abs(r.primal));
  if (raw_dual > r.primal + 1e-12 * scale || (r.converged && r.gap > tol))
    g_violations.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace

SolverAudit solver_audit() {
  return {g_solves.load(), g_flagged.load(), g_violations.load()};
}

SolveReport solve_cell(const CellProblem& prob, const SolveOptions& opts) {
  if (!(opts.tol > 0.0)) throw ConfigError("tol", "must be positive");
  if (opts.max_iter < 1) throw ConfigError("max_iter", "must be positive");
  const auto start = std::chrono::steady_clock::now();
  const Topology topo(prob.grid);
  const int d = topo.d;
  const int m = topo.m;
  const std::size_t md = prob.xi.size();
  const std::size_t nm = topo.nodes * static_cast<std::size_t>(m);
  const double h = topo.h;
  const auto xi = prob.xi.values();

  SolveReport rep;
  rep.minimizer.assign(nm, 0.0);

  auto finish = [&](SolveReport& r) {
    // Both bounds are exact up to roundoff; keep them ordered.
    const double raw_dual = r.dual;
    r.dual = std::min(r.dual, r.primal);
    r.gap = (r.primal - r.dual) / std::max(1.0, std::abs(r.primal));
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    record_audit(r, opts.tol, raw_dual);
    return r;
  };

  if (prob.xi.is_zero()) {
    // v = 0 is optimal: the energy is sum lambda with a matching dual.
    rep.primal = rep.dual = prob.lower_sum();
    rep.converged = true;
    return finish(rep);
  }

  // Diagonal preconditioning on the normalized dual q = p Lambda^{-1}:
  // sigma_{K,j} = h / (2 gamma Lambda_{K,j}), tau_node = gamma h / sum_adjacent Lambda.
  std::vector<double> tau_base(topo.nodes, 0.0);
  for (std::size_t c = 0; c < topo.cells; ++c) {
    const std::size_t b = topo.base[c];
    for (int j = 0; j < d; ++j) {
      const double w = prob.weights[c * d + j];
      tau_base[b] += w;
      tau_base[b + topo.stride[j]] += w;
    }
  }
  for (std::size_t k = 0; k < topo.nodes; ++k)
    tau_base[k] = topo.interior[k] && tau_base[k] > 0.0 ? h / tau_base[k] : 0.0;

  // Balance between primal and dual step lengths.
  double xi_norm = prob.xi.frobenius();
  double gamma = 0.3 * xi_norm * std::sqrt(static_cast<double>(d) * prob.grid.side * h);
  gamma = std::max(gamma, 1e-3 * h);

  std::vector<double> v(nm, 0.0), v_prev(nm, 0.0), v_bar(nm, 0.0), div(nm, 0.0);
  std::vector<double> q(topo.cells * md), p(topo.cells * md), grad(topo.cells * md);
  std::vector<double> step(static_cast<std::size_t>(d));

  // Start from the dual optimum of the homogeneous problem.
  for (std::size_t c = 0; c < topo.cells; ++c) {
    double nrm = 0.0;
    for (std::size_t k = 0; k < md; ++k) {
      const double val = xi[k] * prob.weights[c * d + k % d];
      q[c * md + k] = val;
      nrm += val * val;
    }
    nrm = std::sqrt(nrm);
    for (std::size_t k = 0; k < md; ++k) q[c * md + k] = nrm > 0.0 ? q[c * md + k] / nrm : 0.0;
  }

  auto scaled_dual = [&]() {
    for (std::size_t c = 0; c < topo.cells; ++c)
      for (std::size_t k = 0; k < md; ++k) p[c * md + k] = q[c * md + k] * prob.weights[c * d + k % d];
  };

  DirichletPoisson poisson(topo);
  double best_primal = std::numeric_limits<double>::infinity();
  double best_dual = -std::numeric_limits<double>::infinity();
  std::vector<double> best_v(nm, 0.0);

  // Bounds at one (v, q) pair; updates the running best certificates.
  auto certify = [&](std::span<const double> v_eval, std::span<const double> q_eval) {
    const double primal = discrete_energy(prob, v_eval);
    if (primal < best_primal) {
      best_primal = primal;
      best_v.assign(v_eval.begin(), v_eval.end());
    }
    for (std::size_t c = 0; c < topo.cells; ++c)
      for (std::size_t k = 0; k < md; ++k) p[c * md + k] = q_eval[c * md + k] * prob.weights[c * d + k % d];
    const double dual = dual_bound(prob, topo, p, poisson);
    best_dual = std::max(best_dual, dual);
    return (primal - dual) / std::max(1.0, std::abs(primal));
  };
  auto certified_gap = [&]() { return (best_primal - best_dual) / std::max(1.0, std::abs(best_primal)); };

  // Epoch averages for adaptive restarts.
  std::vector<double> v_sum(nm, 0.0), q_sum(q.size(), 0.0), v_avg(nm), q_avg(q.size());
  int epoch_len = 0;
  if (d == 1) {
    const std::vector<double> explicit_v = concentrated_1d(prob);
    const double energy = discrete_energy(prob, explicit_v);
    if (energy < best_primal) {
      best_primal = energy;
      best_v = explicit_v;
    }
  }
  double epoch_start_gap = certify(v, q);

  const double dual_step = h / 2.0;
  int iter = 0;
  bool converged = certified_gap() <= opts.tol;
  while (!converged && iter < opts.max_iter) {
    const int burst = std::min(opts.check_every, opts.max_iter - iter);
    for (int b = 0; b < burst; ++b) {
      // Dual ascent on q with a prox onto the unit ball (weighted metric).
      topo.gradient(v_bar, grad);
      const double sig = dual_step / gamma;
      for (std::size_t c = 0; c < topo.cells; ++c) {
        double* qc = &q[c * md];
        const double* gc = &grad[c * md];
        for (std::size_t k = 0; k < md; ++k) qc[k] += sig * (gc[k] + xi[k]);
        for (int j = 0; j < d; ++j) step[j] = sig / prob.weights[c * d + j];
        weighted_ball_projection(std::span<double>(qc, md), m, d, step);
      }
      // Primal descent.
      scaled_dual();
      topo.divergence(p, div);
      v_prev.swap(v);
      for (std::size_t k = 0; k < topo.nodes; ++k) {
        const double tk = gamma * tau_base[k];
        for (int i = 0; i < m; ++i) {
          const std::size_t idx = k * m + i;
          v[idx] = v_prev[idx] - tk * div[idx];
        }
      }
      for (std::size_t k = 0; k < nm; ++k) {
        v_bar[k] = 2.0 * v[k] - v_prev[k];
        v_sum[k] += v[k];
      }
      for (std::size_t k = 0; k < q.size(); ++k) q_sum[k] += q[k];
      ++epoch_len;
    }
    iter += burst;
    const double current_gap = certify(v, q);
    const double inv = 1.0 / epoch_len;
    for (std::size_t k = 0; k < nm; ++k) v_avg[k] = v_sum[k] * inv;
    for (std::size_t k = 0; k < q.size(); ++k) q_avg[k] = q_sum[k] * inv;
    const double average_gap = certify(v_avg, q_avg);
    converged = certified_gap() <= opts.tol;
    // Restart from the better candidate once its gap has halved.
    const double candidate = std::min(current_gap, average_gap);
    if (candidate <= 0.5 * epoch_start_gap) {
      if (average_gap < current_gap) {
        v = v_avg;
        q = q_avg;
      }
      v_bar = v;
      std::fill(v_sum.begin(), v_sum.end(), 0.0);
      std::fill(q_sum.begin(), q_sum.end(), 0.0);
      epoch_len = 0;
      epoch_start_gap = candidate;
    }
  }

  rep.primal = best_primal;
  rep.dual = best_dual;
  rep.iterations = iter;
  rep.converged = converged;
  rep.minimizer = std::move(best_v);
  return finish(rep);
}

// ---------------------------------------------------------------------------
// mu_xi

int ResolutionPolicy::cells_for(double t) const {
  if (!(t > 0.0)) throw ConfigError("t", "cube side must be positive");
  if (!(cells_per_unit > 0.0)) throw ConfigError("resolution.cells_per_unit", "must be positive");
  const long n = std::lround(cells_per_unit * t);
  if (n > max_cells)
    throw ConfigError("resolution", "t = " + format_double(t) + " needs " + std::to_string(n) +
                                        " cells per side, above max_cells = " + std::to_string(max_cells));
  return static_cast<int>(std::max<long>(n, std::max(min_cells, 2)));
}

MuResult mu_xi(const IntegrandModel& model, const Matrix& xi, double t, std::span<const double> center,
               const ResolutionPolicy& policy, const SolveOptions& opts) {
  const Grid grid(std::vector<double>(center.begin(), center.end()), t, policy.cells_for(t), model.components);
  const CellProblem prob = assemble(model, grid, xi);
  MuResult out;
  out.report = solve_cell(prob, opts);
  const double volume = std::pow(t, model.dim());
  out.value = out.report.primal / volume;
  out.lower = out.report.dual / volume;
  return out;
}

MuResult mu_xi(const IntegrandModel& model, const Matrix& xi, double t, const ResolutionPolicy& policy,
               const SolveOptions& opts) {
  const std::vector<double> center(static_cast<std::size_t>(model.dim()), 0.0);
  return mu_xi(model, xi, t, center, policy, opts);
}

}  // namespace homlab
