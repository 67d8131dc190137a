#pragma once

// Experiment runner: simulation studies and train/test evaluation of a CSV
// dataset for FLLR, FLLR-r and Nadaraya-Watson, with CSV/JSON export.
//
// Output files (fixed column order):
//   per_replicate.csv  replicate,level,method,er,J_star,k_hLL,k_hd,k_hr,status
//   summary.csv        level,method,n_ok,n_failed,mean_er,median_er,mean_k_h,median_k_h
//   timings.csv        replicate,level,runtime_ms
//   plot_long.csv      level,method,er
//   per_replicate.json, summary.json (see schemas/)

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fllr/funcspace.hpp"
#include "fllr/simgen.hpp"
#include "fllr/tuning.hpp"

namespace fllr {

enum class RunMode { simulate, dataset };
enum class Method { fllr, fllr_r, nw };
enum class BasisChoice { fpca, fourier };
enum class SplitMode { random, ordered };
enum class ResponseTransform { none, exp };

std::string to_string(Method m);
/// Throws std::invalid_argument for unknown names.
Method parse_method(const std::string& name);

struct ExperimentConfig {
  RunMode mode = RunMode::simulate;
  std::vector<Method> methods{Method::fllr, Method::fllr_r, Method::nw};
  std::size_t replicates = 50;
  std::vector<double> a_levels{0.3, 0.5, 0.7};
  double split_ratio = 2.0 / 3.0;
  SplitMode split_mode = SplitMode::random;
  ResponseTransform response_transform = ResponseTransform::none;
  TuningGrid tuning;
  /// Sizes and noise levels; a and seed are set per replicate.
  SimulationConfig simulation;
  BasisChoice basis = BasisChoice::fpca;
  bool presmooth = true;
  PresmoothOptions presmooth_options;
  std::string output_dir;
  std::uint64_t seed = 0;
  /// 0 means one worker per hardware thread.
  std::size_t threads = 0;

  bool has(Method m) const;
  /// Throws std::invalid_argument.
  void validate() const;
};

/// Label of a simulation level in output files, e.g. "0.3".
std::string level_label(double a);

struct ReplicateRow {
  std::size_t replicate = 0;
  std::string level;
  std::string method;
  /// NaN for failed replicates.
  double er = 0.0;
  std::size_t J_star = 0;
  std::size_t k_hLL = 0;
  std::size_t k_hd = 0;
  /// Regression neighbour count of the method (k_hr for FLLR-r, k_hLL for FLLR, k for NW).
  std::size_t k_hr = 0;
  /// "ok" or "failed:<reason>".
  std::string status = "ok";
};

struct SummaryRow {
  std::string level;
  std::string method;
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  double mean_er = 0.0;
  double median_er = 0.0;
  double mean_k_h = 0.0;
  double median_k_h = 0.0;
};

struct TimingRow {
  std::size_t replicate = 0;
  std::string level;
  double runtime_ms = 0.0;
};

struct RunDiagnostics {
  std::size_t total_replicates = 0;
  std::size_t failed_replicates = 0;
  /// FLLR-r test predictions evaluated.
  std::size_t prediction_points = 0;
  /// max over points of est_mse(b*) - est_mse(1 / gamma).
  double max_mse_gap = 0.0;
  /// Points where that gap exceeds 1e-12.
  std::size_t mse_violations = 0;
  std::size_t escalations = 0;
};

struct RunResult {
  std::vector<ReplicateRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<TimingRow> timings;
  RunDiagnostics diagnostics;
  /// More than 10% of replicates failed.
  bool failed = false;
};

/// Seed of the simulated sample for (master seed, a, replicate).
std::uint64_t simulation_seed(std::uint64_t master, double a, std::size_t replicate);
/// Seed of the tuning streams for a replicate (shared by both run modes).
std::uint64_t tuning_seed(std::uint64_t master, std::size_t replicate);

RunResult run_simulation(const ExperimentConfig& config);
RunResult run_dataset(const ExperimentConfig& config, const CurveSet& data);
RunResult run_dataset(const ExperimentConfig& config, const std::string& data_path, const std::string& grid_path);

/// Grid sidecar: "start=<t_1>", "end=<t_p>", "count=<p>" lines.
GridPtr read_grid_header(const std::string& path);
/// CSV with header t_1..t_p,y. Throws ParseError with 1-based (row, column); the header is row 1.
CurveSet read_dataset(const std::string& data_path, const GridPtr& grid);
void write_dataset(const CurveSet& data, const std::string& data_path, const std::string& grid_path);

/// Aggregates ok rows per (level, method), in order of first appearance.
std::vector<SummaryRow> summarize(const std::vector<ReplicateRow>& rows);

/// Writes every output file into dir (created if needed). Throws std::runtime_error when unwritable.
void export_result(const RunResult& result, const ExperimentConfig& config, const std::string& dir);
std::vector<SummaryRow> read_summary_csv(const std::string& path);
std::vector<ReplicateRow> read_per_replicate_csv(const std::string& path);

}  // namespace fllr
