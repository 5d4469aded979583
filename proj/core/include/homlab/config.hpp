#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "homlab/cell_solver.hpp"
#include "homlab/matrix.hpp"
#include "homlab/rng_fields.hpp"

namespace homlab {

enum class Command {
  field_stats,
  solve_cell,
  estimate_fhom,
  verify_bounds,
  subadditivity,
  stationarity,
  recession,
  rank_one,
  degenerate_divergence,
  degenerate_interface,
  glue_check,
};

[[nodiscard]] std::string_view to_string(Command c) noexcept;
[[nodiscard]] std::optional<Command> command_from_string(std::string_view name) noexcept;

inline constexpr int kConfigSchemaVersion = 1;

/// Everything that determines a run's numbers. Defaults are filled for every
/// key the config omits.
struct RunConfig {
  Command command = Command::estimate_fhom;
  FieldSpec field;
  int components = 1;  ///< m
  std::vector<Matrix> xi;
  std::vector<double> t_list{16.0, 64.0, 256.0};
  int realizations = 50;  ///< N
  std::uint64_t seed = 0;
  SolveOptions solve;
  ResolutionPolicy resolution;
  int workers = 0;  ///< 0: take HOMLAB_WORKERS, else 1
  std::filesystem::path out_dir = "homlab-out";
  bool dump_minimizers = false;

  // field-stats
  Observable observable;
  Box box;  ///< empty lo/hi means the unit cube
  // verify-bounds
  std::size_t mc_budget = 100000;
  // subadditivity
  int partition_depth = 1;
  // stationarity
  std::vector<std::int64_t> shift;
  // recession
  std::vector<double> s_list{1.0, 2.0, 5.0};
  // rank-one
  int segment_points = 5;
  // degenerate-interface
  std::vector<double> deltas{0.1, 0.01};
  std::int64_t search_limit = 10000;
  std::size_t scans = 1000;
  double interface_at = 0.5;
  std::int64_t scan_start = 0;
  // glue-check
  int instances = 20;
};

/// All validation problems of one config, not just the first.
class ConfigErrors : public std::runtime_error {
 public:
  explicit ConfigErrors(std::vector<std::string> errors);
  [[nodiscard]] const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  std::vector<std::string> errors_;
};

[[nodiscard]] RunConfig parse_config(std::string_view json_text);
[[nodiscard]] RunConfig parse_config_file(const std::filesystem::path& path);

/// Canonical JSON of the resolved config (minus output location and workers).
[[nodiscard]] std::string canonical_config(const RunConfig& cfg);

}  // namespace homlab
