#include "fllr/harness.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fllr/errors.hpp"
#include "fllr/seeding.hpp"

namespace fllr {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string to_string(Method m) {
  switch (m) {
    case Method::fllr: return "fllr";
    case Method::fllr_r: return "fllr_r";
    case Method::nw: return "nw";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "fllr") return Method::fllr;
  if (name == "fllr_r" || name == "fllr-r") return Method::fllr_r;
  if (name == "nw") return Method::nw;
  throw std::invalid_argument("unknown method '" + name + "'");
}

bool ExperimentConfig::has(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }

void ExperimentConfig::validate() const {
  if (methods.empty()) throw std::invalid_argument("no methods selected");
  if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");
  if (mode == RunMode::simulate) {
    if (a_levels.empty()) throw std::invalid_argument("no a levels given");
    for (double a : a_levels)
      if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("a levels must lie in [0, 1]");
  }
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw std::invalid_argument("split ratio must lie in (0, 1)");
  if (tuning.J_candidates.empty()) throw std::invalid_argument("no J candidates");
  if (tuning.B < 1) throw std::invalid_argument("B must be at least 1");
}

std::string level_label(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", a);
  return buf;
}

std::uint64_t simulation_seed(std::uint64_t master, double a, std::size_t replicate) {
  return derive_seed(master, {tag(Stream::data), std::bit_cast<std::uint64_t>(a), replicate});
}

std::uint64_t tuning_seed(std::uint64_t master, std::size_t replicate) {
  return derive_seed(master, {tag(Stream::tuning), replicate});
}

namespace {

constexpr double kMseGapTolerance = 1e-12;

struct Outcome {
  std::vector<ReplicateRow> rows;
  std::size_t points = 0;
  double max_gap = -std::numeric_limits<double>::infinity();
  std::size_t violations = 0;
  std::size_t escalations = 0;
  bool failed = false;
  double runtime_ms = 0.0;
};

std::string failure_code(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const SingularFitError&) {
    return "singular_fit";
  } catch (const ConvergenceError&) {
    return "qp_convergence";
  } catch (const RankError&) {
    return "rank";
  } catch (const std::invalid_argument&) {
    return "invalid_input";
  } catch (...) {
    return "error";
  }
}

Eigen::VectorXd transformed(const Eigen::VectorXd& v, ResponseTransform t) {
  return t == ResponseTransform::exp ? Eigen::VectorXd(v.array().exp()) : v;
}

// Tunes on `train` and scores every requested method on `test`. Both sets
// are already presmoothed and carry responses.
void evaluate(const CurveSet& train, const CurveSet& test, const ExperimentConfig& cfg, std::uint64_t seed,
              Outcome& out) {
  const std::size_t Jmax = cfg.tuning.max_J();
  const BasisSystem basis =
      cfg.basis == BasisChoice::fpca ? estimate_fpca_basis(train, Jmax) : fourier_basis(train.grid(), Jmax);
  const TrainingContext ctx(train, basis, cfg.tuning.kernel);
  TuningGrid grid = cfg.tuning;
  grid.seed = seed;
  SelectOptions opts;
  opts.ridge = cfg.has(Method::fllr_r);
  opts.nw = cfg.has(Method::nw);
  const TuningReport rep = select_all(ctx, grid, opts);
  out.escalations += rep.escalations;

  const auto nt = static_cast<Eigen::Index>(test.size());
  Eigen::VectorXd p_fllr(nt), p_ridge(nt), p_nw(nt);
  for (Eigen::Index i = 0; i < nt; ++i) {
    const QueryPoint q = make_query(ctx, test.curve(static_cast<std::size_t>(i)));
    if (cfg.has(Method::fllr)) p_fllr(i) = predict_fllr(ctx, q, rep.J_star_fllr, rep.k_fllr, &out.escalations).m_hat;
    if (cfg.has(Method::fllr_r)) {
      const RidgeFit f = predict_fllr_r(ctx, q, rep.J_star, rep.k_hd, rep.k_hr, rep.sigma_e, &out.escalations);
      p_ridge(i) = f.m_hat;
      const double gap = f.est_mse - f.est_mse_unpenalized;
      out.max_gap = std::max(out.max_gap, gap);
      if (gap > kMseGapTolerance) ++out.violations;
      ++out.points;
    }
    if (cfg.has(Method::nw)) p_nw(i) = predict_nw(ctx, q, rep.k_nw);
  }

  const Eigen::VectorXd y = transformed(test.responses(), cfg.response_transform);
  for (Method m : cfg.methods) {
    ReplicateRow row;
    row.method = to_string(m);
    switch (m) {
      case Method::fllr:
        row.er = error_ratio(y, transformed(p_fllr, cfg.response_transform));
        row.J_star = rep.J_star_fllr;
        row.k_hLL = rep.k_fllr;
        row.k_hr = rep.k_fllr;
        break;
      case Method::fllr_r:
        row.er = error_ratio(y, transformed(p_ridge, cfg.response_transform));
        row.J_star = rep.J_star;
        row.k_hLL = rep.k_hLL;
        row.k_hd = rep.k_hd;
        row.k_hr = rep.k_hr;
        break;
      case Method::nw:
        row.er = error_ratio(y, transformed(p_nw, cfg.response_transform));
        row.k_hr = rep.k_nw;
        break;
    }
    out.rows.push_back(row);
  }
}

void mark_failed(Outcome& out, const ExperimentConfig& cfg, const std::string& code) {
  out = Outcome{};
  out.failed = true;
  for (Method m : cfg.methods) {
    ReplicateRow row;
    row.method = to_string(m);
    row.er = std::numeric_limits<double>::quiet_NaN();
    row.status = "failed:" + code;
    out.rows.push_back(row);
  }
}

struct Task {
  std::size_t replicate;
  std::string level;
  std::function<void(Outcome&)> body;
};

RunResult run_tasks(const ExperimentConfig& cfg, std::vector<Task>& tasks) {
  std::vector<Outcome> outcomes(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const auto start = std::chrono::steady_clock::now();
      try {
        tasks[t].body(outcomes[t]);
      } catch (...) {
        mark_failed(outcomes[t], cfg, failure_code(std::current_exception()));
      }
      outcomes[t].runtime_ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
  };
  std::size_t nthreads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  nthreads = std::min(nthreads, tasks.size());
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  RunResult res;
  res.diagnostics.max_mse_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    Outcome& o = outcomes[t];
    for (auto& row : o.rows) {
      row.replicate = tasks[t].replicate;
      row.level = tasks[t].level;
      res.rows.push_back(row);
    }
    res.timings.push_back({tasks[t].replicate, tasks[t].level, o.runtime_ms});
    auto& d = res.diagnostics;
    ++d.total_replicates;
    if (o.failed) ++d.failed_replicates;
    d.prediction_points += o.points;
    d.max_mse_gap = std::max(d.max_mse_gap, o.max_gap);
    d.mse_violations += o.violations;
    d.escalations += o.escalations;
  }
  if (res.diagnostics.prediction_points == 0) res.diagnostics.max_mse_gap = 0.0;
  res.summary = summarize(res.rows);
  res.failed = res.diagnostics.failed_replicates * 10 > res.diagnostics.total_replicates;
  return res;
}

CurveSet smoothed(const CurveSet& raw, const ExperimentConfig& cfg) {
  return cfg.presmooth ? presmooth(raw, cfg.presmooth_options).curves : raw;
}

std::vector<std::size_t> iota(std::size_t from, std::size_t to) {
  std::vector<std::size_t> v(to - from);
  std::iota(v.begin(), v.end(), from);
  return v;
}

}  // namespace

RunResult run_simulation(const ExperimentConfig& config) {
  config.validate();
  std::vector<Task> tasks;
  for (double a : config.a_levels) {
    for (std::size_t r = 0; r < config.replicates; ++r) {
      tasks.push_back({r, level_label(a), [&config, a, r](Outcome& out) {
                         SimulationConfig sc = config.simulation;
                         sc.a = a;
                         sc.seed = simulation_seed(config.seed, a, r);
                         const SimulatedSample s = generate(sc);
                         const CurveSet all = smoothed(s.curves_observed, config);
                         const auto tr = iota(0, sc.n_train);
                         const auto te = iota(sc.n_train, sc.total());
                         evaluate(all.subset(tr), all.subset(te), config, tuning_seed(config.seed, r), out);
                       }});
    }
  }
  return run_tasks(config, tasks);
}

RunResult run_dataset(const ExperimentConfig& config, const CurveSet& data) {
  config.validate();
  const std::size_t n = data.size();
  const Eigen::VectorXd& y = data.responses();
  if (!((y.array() - y.mean()).square().sum() > 0.0)) throw std::invalid_argument("constant response");
  auto n_train = static_cast<std::size_t>(std::lround(config.split_ratio * static_cast<double>(n)));
  if (n_train < 3 || n - n_train < 2) throw std::invalid_argument("dataset too small for the requested split");

  const CurveSet all = smoothed(data, config);
  std::vector<Task> tasks;
  for (std::size_t r = 0; r < config.replicates; ++r) {
    tasks.push_back({r, "dataset", [&config, &all, n, n_train, r](Outcome& out) {
                       std::vector<std::size_t> idx = iota(0, n);
                       if (config.split_mode == SplitMode::random) {
                         std::mt19937_64 rng(derive_seed(config.seed, {tag(Stream::split), r}));
                         std::shuffle(idx.begin(), idx.end(), rng);
                       }
                       std::vector<std::size_t> tr(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
                       std::vector<std::size_t> te(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
                       evaluate(all.subset(tr), all.subset(te), config, tuning_seed(config.seed, r), out);
                     }});
  }
  return run_tasks(config, tasks);
}

RunResult run_dataset(const ExperimentConfig& config, const std::string& data_path, const std::string& grid_path) {
  return run_dataset(config, read_dataset(data_path, read_grid_header(grid_path)));
}

// ---------------------------------------------------------------------------
// Dataset files

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  char* end = nullptr;
  v = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  return f;
}

}  // namespace

GridPtr read_grid_header(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, 0, "cannot open grid header");
  std::optional<double> start, end;
  std::optional<std::size_t> count;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(path, row, 1, "expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    double v = 0.0;
    if (!parse_double(val, v)) throw ParseError(path, row, eq + 2, "non-numeric value '" + val + "'");
    if (key == "start") {
      start = v;
    } else if (key == "end") {
      end = v;
    } else if (key == "count") {
      if (v < 3 || v != std::floor(v)) throw ParseError(path, row, eq + 2, "count must be an integer >= 3");
      count = static_cast<std::size_t>(v);
    } else {
      throw ParseError(path, row, 1, "unknown key '" + key + "'");
    }
  }
  if (!start || !end || !count) throw ParseError(path, 0, 0, "grid header needs start, end and count");
  return Grid::equispaced(*start, *end, *count);
}

CurveSet read_dataset(const std::string& data_path, const GridPtr& grid) {
  std::ifstream in(data_path);
  if (!in) throw ParseError(data_path, 0, 0, "cannot open dataset");
  const std::size_t p = grid->size();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(data_path, 1, 0, "empty file");
  const auto header = split_csv(line);
  if (header.size() != p + 1)
    throw ParseError(data_path, 1, 0,
                     "expected " + std::to_string(p + 1) + " columns (t_1..t_" + std::to_string(p) + ",y), found " +
                         std::to_string(header.size()));
  for (std::size_t c = 0; c < p; ++c)
    if (header[c] != "t_" + std::to_string(c + 1))
      throw ParseError(data_path, 1, c + 1, "expected column name t_" + std::to_string(c + 1));
  if (header[p] != "y") throw ParseError(data_path, 1, p + 1, "expected response column y");

  std::vector<std::vector<double>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != p + 1)
      throw ParseError(data_path, row, 0,
                       "expected " + std::to_string(p + 1) + " fields, found " + std::to_string(cells.size()));
    std::vector<double> vals(p + 1);
    for (std::size_t c = 0; c <= p; ++c) {
      if (!parse_double(cells[c], vals[c]) || !std::isfinite(vals[c]))
        throw ParseError(data_path, row, c + 1, "non-numeric value '" + cells[c] + "'");
    }
    rows.push_back(std::move(vals));
  }
  if (rows.size() < 5) throw ParseError(data_path, row, 0, "too few observations");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  Eigen::VectorXd Y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t c = 0; c < p; ++c) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    Y(static_cast<Eigen::Index>(i)) = rows[i][p];
  }
  return CurveSet(grid, std::move(X), std::move(Y));
}

void write_dataset(const CurveSet& data, const std::string& data_path, const std::string& grid_path) {
  const Grid& g = *data.grid();
  {
    auto f = open_out(grid_path);
    f << "start=" << fmt(g.start()) << "\nend=" << fmt(g.end()) << "\ncount=" << g.size() << "\n";
  }
  auto f = open_out(data_path);
  for (std::size_t c = 0; c < g.size(); ++c) f << "t_" << c + 1 << ",";
  f << "y\n";
  const auto& X = data.values();
  const auto& Y = data.responses();
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) f << fmt(X(i, c)) << ",";
    f << fmt(Y(i)) << "\n";
  }
  if (!f) throw std::runtime_error("failed writing " + data_path);
}

// ---------------------------------------------------------------------------
// Aggregation and export

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<ReplicateRow>& rows) {
  struct Acc {
    std::string level, method;
    std::vector<double> er, k;
    std::size_t failed = 0;
  };
  std::vector<Acc> accs;
  for (const auto& r : rows) {
    auto it = std::find_if(accs.begin(), accs.end(),
                           [&](const Acc& a) { return a.level == r.level && a.method == r.method; });
    if (it == accs.end()) {
      accs.push_back({r.level, r.method, {}, {}, 0});
      it = accs.end() - 1;
    }
    if (r.status == "ok") {
      it->er.push_back(r.er);
      it->k.push_back(static_cast<double>(r.k_hr));
    } else {
      ++it->failed;
    }
  }
  std::vector<SummaryRow> out;
  for (const auto& a : accs)
    out.push_back({a.level, a.method, a.er.size(), a.failed, mean(a.er), median(a.er), mean(a.k), median(a.k)});
  return out;
}

void export_result(const RunResult& result, const ExperimentConfig& config, const std::string& dir) {
  if (config.methods.empty()) throw std::invalid_argument("no methods selected");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw std::runtime_error("cannot create output directory " + dir);
  const fs::path base(dir);

  {
    auto f = open_out(base / "per_replicate.csv");
    f << "replicate,level,method,er,J_star,k_hLL,k_hd,k_hr,status\n";
    for (const auto& r : result.rows)
      f << r.replicate << "," << r.level << "," << r.method << "," << fmt(r.er) << "," << r.J_star << "," << r.k_hLL
        << "," << r.k_hd << "," << r.k_hr << "," << r.status << "\n";
  }
  {
    auto f = open_out(base / "summary.csv");
    f << "level,method,n_ok,n_failed,mean_er,median_er,mean_k_h,median_k_h\n";
    for (const auto& s : result.summary)
      f << s.level << "," << s.method << "," << s.n_ok << "," << s.n_failed << "," << fmt(s.mean_er) << ","
        << fmt(s.median_er) << "," << fmt(s.mean_k_h) << "," << fmt(s.median_k_h) << "\n";
  }
  {
    auto f = open_out(base / "timings.csv");
    f << "replicate,level,runtime_ms\n";
    for (const auto& t : result.timings) f << t.replicate << "," << t.level << "," << fmt(t.runtime_ms) << "\n";
  }
  {
    auto f = open_out(base / "plot_long.csv");
    f << "level,method,er\n";
    for (const auto& r : result.rows)
      if (r.status == "ok") f << r.level << "," << r.method << "," << fmt(r.er) << "\n";
  }

  json rows = json::array();
  for (const auto& r : result.rows)
    rows.push_back({{"replicate", r.replicate},
                    {"level", r.level},
                    {"method", r.method},
                    {"er", num(r.er)},
                    {"J_star", r.J_star},
                    {"k_hLL", r.k_hLL},
                    {"k_hd", r.k_hd},
                    {"k_hr", r.k_hr},
                    {"status", r.status}});
  open_out(base / "per_replicate.json") << json{{"rows", rows}}.dump(2) << "\n";

  json summary = json::array();
  for (const auto& s : result.summary)
    summary.push_back({{"level", s.level},
                       {"method", s.method},
                       {"n_ok", s.n_ok},
                       {"n_failed", s.n_failed},
                       {"mean_er", num(s.mean_er)},
                       {"median_er", num(s.median_er)},
                       {"mean_k_h", num(s.mean_k_h)},
                       {"median_k_h", num(s.median_k_h)}});
  const auto& d = result.diagnostics;
  json methods = json::array();
  for (Method m : config.methods) methods.push_back(to_string(m));
  json cfg = {{"mode", config.mode == RunMode::simulate ? "simulate" : "dataset"},
              {"methods", methods},
              {"replicates", config.replicates},
              {"seed", config.seed},
              {"J_candidates", config.tuning.J_candidates},
              {"k_candidates", config.tuning.k_candidates},
              {"max_neighbor_fraction", config.tuning.max_neighbor_fraction},
              {"B", config.tuning.B},
              {"kernel", config.tuning.kernel.kind == KernelKind::box ? "box" : "triangle"},
              {"basis", config.basis == BasisChoice::fpca ? "fpca" : "fourier"}};
  if (config.mode == RunMode::simulate) {
    cfg["a_levels"] = config.a_levels;
    cfg["n_train"] = config.simulation.n_train;
    cfg["n_test"] = config.simulation.n_test;
  } else {
    cfg["split_ratio"] = config.split_ratio;
  }
  json doc = {{"config", cfg},
              {"summary", summary},
              {"diagnostics",
               {{"total_replicates", d.total_replicates},
                {"failed_replicates", d.failed_replicates},
                {"prediction_points", d.prediction_points},
                {"max_mse_gap", num(d.max_mse_gap)},
                {"mse_violations", d.mse_violations},
                {"escalations", d.escalations}}},
              {"failed", result.failed}};
  open_out(base / "summary.json") << doc.dump(2) << "\n";
}

namespace {

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, 0, "cannot open");
  std::string line;
  if (!std::getline(in, line) || trim(line) != header) throw ParseError(path, 1, 0, "unexpected header");
  std::vector<std::vector<std::string>> out;
  while (std::getline(in, line))
    if (!trim(line).empty()) out.push_back(split_csv(line));
  return out;
}

double to_double(const std::string& s, const std::string& path, std::size_t row, std::size_t col) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  if (!parse_double(s, v)) throw ParseError(path, row, col, "non-numeric value '" + s + "'");
  return v;
}

std::size_t to_size(const std::string& s, const std::string& path, std::size_t row, std::size_t col) {
  const double v = to_double(s, path, row, col);
  if (!(v >= 0.0) || v != std::floor(v)) throw ParseError(path, row, col, "expected a count");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::vector<SummaryRow> read_summary_csv(const std::string& path) {
  std::vector<SummaryRow> out;
  std::size_t row = 1;
  for (const auto& c : read_csv_rows(path, "level,method,n_ok,n_failed,mean_er,median_er,mean_k_h,median_k_h")) {
    ++row;
    if (c.size() != 8) throw ParseError(path, row, 0, "expected 8 fields");
    out.push_back({c[0], c[1], to_size(c[2], path, row, 3), to_size(c[3], path, row, 4),
                   to_double(c[4], path, row, 5), to_double(c[5], path, row, 6), to_double(c[6], path, row, 7),
                   to_double(c[7], path, row, 8)});
  }
  return out;
}

std::vector<ReplicateRow> read_per_replicate_csv(const std::string& path) {
  std::vector<ReplicateRow> out;
  std::size_t row = 1;
  for (const auto& c : read_csv_rows(path, "replicate,level,method,er,J_star,k_hLL,k_hd,k_hr,status")) {
    ++row;
    if (c.size() != 9) throw ParseError(path, row, 0, "expected 9 fields");
    ReplicateRow r;
    r.replicate = to_size(c[0], path, row, 1);
    r.level = c[1];
    r.method = c[2];
    r.er = to_double(c[3], path, row, 4);
    r.J_star = to_size(c[4], path, row, 5);
    r.k_hLL = to_size(c[5], path, row, 6);
    r.k_hd = to_size(c[6], path, row, 7);
    r.k_hr = to_size(c[7], path, row, 8);
    r.status = c[8];
    out.push_back(r);
  }
  return out;
}

}  // namespace fllr
