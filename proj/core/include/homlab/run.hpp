#pragma once

#include <filesystem>
#include <string>

#include "homlab/config.hpp"

namespace homlab {

/// First line of every results CSV.
inline constexpr const char* kCsvVersionLine = "#homlab-results-v1";
/// Columns of the results CSV; the last three carry wall-clock data only.
inline constexpr const char* kCsvHeader =
    "run_id,command,quantity,xi_index,xi,t,param,realization,value,std,ci,lower,gap,iterations,flags,"
    "started_at,finished_at,wall_seconds";
inline constexpr const char* kSummarySchema = "homlab-summary-v1";

struct RunOutcome {
  int exit_code = 0;  ///< 0 pass, 1 failed verdict or flagged estimate, 2 runtime error
  bool pass = true;
  bool flagged = false;
  std::string run_id;
  std::string error;
  std::filesystem::path csv;
  std::filesystem::path summary;
};

/// Worker count after applying HOMLAB_WORKERS to an unset config value.
[[nodiscard]] int resolve_workers(int configured);

/// Executes the configured command and writes `<out_dir>/results.csv` and
/// `<out_dir>/summary.json`. Partial results are written when a command fails.
[[nodiscard]] RunOutcome run(const RunConfig& cfg);

}  // namespace homlab
