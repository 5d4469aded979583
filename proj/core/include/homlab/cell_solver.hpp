#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "homlab/integrand.hpp"
#include "homlab/matrix.hpp"
#include "homlab/rng_fields.hpp"

namespace homlab {

/// Uniform grid of n^d cells on the cube Q_t(center); nodal unknowns carry m components.
struct Grid {
  int dim = 1;
  std::vector<double> center;
  double side = 1.0;
  int n = 2;
  int components = 1;

  Grid() = default;
  Grid(std::vector<double> center_, double side_, int n_, int components_);

  [[nodiscard]] double h() const noexcept { return side / n; }
  [[nodiscard]] std::size_t cell_count() const noexcept;
  [[nodiscard]] std::size_t node_count() const noexcept;
  [[nodiscard]] Box box() const { return Box::cube(center, side); }
  [[nodiscard]] double cell_volume() const noexcept;

  /// Row-major strides (axis 0 slowest).
  [[nodiscard]] std::vector<std::size_t> node_strides() const;
  [[nodiscard]] std::vector<std::size_t> cell_strides() const;

  void cell_index_to_multi(std::size_t c, std::span<int> idx) const;
  [[nodiscard]] std::size_t node_of_cell(std::size_t c) const;
  [[nodiscard]] bool is_boundary_node(std::size_t node) const;
  void node_position(std::size_t node, std::span<double> x) const;
  void cell_center(std::size_t c, std::span<double> x) const;

  void validate() const;
};

/// Discrete cell problem min_v sum_K h^d (|(G v + xi) Lambda_K|_F + lambda_K)
/// over nodal perturbations v vanishing on the boundary; G is the
/// forward-difference cell gradient.
struct CellProblem {
  Grid grid;
  Matrix xi;
  std::vector<double> weights;  ///< cell_count x dim, Lambda diagonal at cell centers
  std::vector<double> lower;    ///< cell_count, empty when lambda is off
  bool isotropic = true;        ///< every cell has equal diagonal entries

  [[nodiscard]] double lower_sum() const;  ///< sum_K h^d lambda_K
};

[[nodiscard]] CellProblem assemble(const IntegrandModel& model, const Grid& grid, const Matrix& xi);

/// Forward-difference gradient of a full nodal field at cell c (m x d, row-major).
void cell_gradient(const Grid& grid, std::span<const double> nodal, std::size_t c, std::span<double> out);

/// Energy density |(grad + xi) Lambda_K|_F at cell c for a perturbation field
/// (`add_xi`) or a full field.
[[nodiscard]] double cell_energy(const CellProblem& p, std::span<const double> nodal, std::size_t c, bool add_xi);

/// Total discrete energy of the perturbation v (including the lambda offset).
[[nodiscard]] double discrete_energy(const CellProblem& p, std::span<const double> v);

struct SolveOptions {
  double tol = 1e-5;           ///< relative primal-dual gap
  int max_iter = 200000;
  int check_every = 50;        ///< iterations between gap evaluations
};

struct SolveReport {
  double primal = 0.0;  ///< energy of the returned minimizer
  double dual = 0.0;    ///< certified lower bound on the discrete minimum
  double gap = 0.0;     ///< (primal - dual) / max(1, |primal|)
  int iterations = 0;
  bool converged = false;
  std::vector<double> minimizer;  ///< node_count x m perturbation, zero on the boundary
  double wall_seconds = 0.0;
};

[[nodiscard]] SolveReport solve_cell(const CellProblem& p, const SolveOptions& opts = {});

/// Counts every solve in the process; used to assert certificate discipline.
struct SolverAudit {
  std::uint64_t solves = 0;
  std::uint64_t flagged = 0;                 ///< non-converged, reported with converged = false
  std::uint64_t certificate_violations = 0;  ///< dual > primal, or converged with gap > tol
};
[[nodiscard]] SolverAudit solver_audit();

/// Maps cube side t to cells per side n.
struct ResolutionPolicy {
  double cells_per_unit = 2.0;
  int min_cells = 2;
  int max_cells = 512;

  [[nodiscard]] int cells_for(double t) const;
};

struct MuResult {
  double value = 0.0;  ///< primal energy / t^d
  double lower = 0.0;  ///< dual bound / t^d
  SolveReport report;
};

/// Normalized cell energy mu_xi(omega, Q_t(center)) / t^d.
[[nodiscard]] MuResult mu_xi(const IntegrandModel& model, const Matrix& xi, double t,
                             std::span<const double> center, const ResolutionPolicy& policy,
                             const SolveOptions& opts = {});
[[nodiscard]] MuResult mu_xi(const IntegrandModel& model, const Matrix& xi, double t,
                             const ResolutionPolicy& policy = {}, const SolveOptions& opts = {});

// ---------------------------------------------------------------------------
// Layered cut-off gluing

class GeometryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct GlueReport {
  int layers = 0;               ///< N = ceil(max(1/alpha, 1) / delta)
  int selected_layer = 0;       ///< i*, smallest index among minimizers
  double layer_width = 0.0;
  std::vector<double> layer_energies;  ///< energy of w_i on A' u B for each candidate
  double glued_energy = 0.0;    ///< E(w, A' u B)
  double energy_u = 0.0;        ///< E(u, A'')
  double energy_v = 0.0;        ///< E(v, B)
  double mismatch_term = 0.0;   ///< 4 / dist(A', dA'') sum_S h^d |u - v| |Lambda|_F
  double lower_term = 0.0;      ///< delta sum_S h^d lambda
  double rhs = 0.0;
  double slack = 0.0;           ///< rhs - glued_energy
  std::size_t overlap_cells = 0;
  bool holds = false;
};

struct GlueResult {
  std::vector<double> w;
  GlueReport report;
};

/// Glues full nodal fields u (near A') and v (on B) with the best of N
/// nested cut-offs between A' and A'' and verifies the fundamental estimate.
/// Boxes must be aligned with grid lines.
[[nodiscard]] GlueResult glue_with_cutoff(std::span<const double> u, std::span<const double> v,
                                          const Box& a_inner, const Box& a_outer, const Box& b, double delta,
                                          const CellProblem& p, double alpha = 1.0);

/// A randomized gluing scenario on a d-dimensional grid of side 8 with n = 64:
/// u and v are affine maps plus a few random Fourier modes, A' a cube of side 4
/// at a random half-integer offset, A'' = A' widened by 1.5 on every side, B a
/// slab overlapping A'' minus A', delta uniform in [1/6, 1].
struct GlueInstance {
  CellProblem problem;
  std::vector<double> u;
  std::vector<double> v;
  Box a_inner;
  Box a_outer;
  Box b;
  double delta = 0.0;
};

[[nodiscard]] GlueInstance random_glue_instance(const FieldSpec& spec, std::uint64_t seed, std::uint64_t index,
                                                int components = 1);

/// Energy of a full nodal field over the cells whose closure lies in `region`.
[[nodiscard]] double region_energy(const CellProblem& p, std::span<const double> w, const Box& region);

/// Full nodal field of the affine map x -> xi x (relative to the grid center).
[[nodiscard]] std::vector<double> affine_field(const Grid& grid, const Matrix& xi);

// ---------------------------------------------------------------------------
// Minimizer dumps: little-endian binary
//   magic "HMLB" | u32 version=1 | u32 d | u32 m | u32 n | f64 t | f64 center[d]
//   | f64 values[(n+1)^d * m]   (row-major nodes, axis 0 slowest, component fastest)
// plus a JSON sidecar `<path>.json`.

void write_minimizer_dump(const std::filesystem::path& path, const CellProblem& p, const SolveReport& r,
                          const std::string& sidecar_json);

struct MinimizerDump {
  int dim = 0;
  int components = 0;
  int n = 0;
  double side = 0.0;
  std::vector<double> center;
  std::vector<double> values;
};

[[nodiscard]] MinimizerDump read_minimizer_dump(const std::filesystem::path& path);

}  // namespace homlab
