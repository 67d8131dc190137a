#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fllr/harness.hpp"
#include "json.hpp"

using namespace fllr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fllr_harness_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.replicates = 2;
  c.a_levels = {0.5};
  c.simulation.n_train = 40;
  c.simulation.n_test = 20;
  c.tuning.J_candidates = {1, 2, 3};
  c.tuning.B = 5;
  c.seed = 17;
  c.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("method names and config validation") {
  CHECK(parse_method("fllr") == Method::fllr);
  CHECK(parse_method("fllr_r") == Method::fllr_r);
  CHECK(parse_method("nw") == Method::nw);
  CHECK(to_string(Method::fllr_r) == "fllr_r");
  CHECK_THROWS_AS(parse_method("flm"), std::invalid_argument);
  CHECK(level_label(0.3) == "0.3");

  ExperimentConfig c = small_config();
  CHECK_NOTHROW(c.validate());
  c.methods.clear();
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_THROWS_AS(run_simulation(c), std::invalid_argument);
  CHECK_THROWS_AS(export_result(RunResult{}, c, scratch("empty").string()), std::invalid_argument);
  c = small_config();
  c.a_levels = {1.2};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config();
  c.replicates = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config();
  c.split_ratio = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("smoke run with a single method and a singleton grid") {
  ExperimentConfig c = small_config();
  c.replicates = 1;
  c.methods = {Method::nw};
  c.tuning.J_candidates = {1};
  c.tuning.k_candidates = {10};
  const RunResult r = run_simulation(c);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].method == "nw");
  CHECK(r.rows[0].status == "ok");
  CHECK(r.rows[0].er >= 0.0);
  CHECK(std::isfinite(r.rows[0].er));
  CHECK_FALSE(r.failed);
  CHECK(r.diagnostics.prediction_points == 0);
}

TEST_CASE("simulation run: determinism, thread independence, summary consistency and estimated-MSE dominance") {
  ExperimentConfig c = small_config();
  const RunResult a = run_simulation(c);
  CHECK(a.rows.size() == 6);
  CHECK_FALSE(a.failed);
  CHECK(a.diagnostics.failed_replicates == 0);
  CHECK(a.diagnostics.prediction_points == 2 * 20);
  CHECK(a.diagnostics.mse_violations == 0);
  CHECK(a.diagnostics.max_mse_gap <= 1e-12);

  c.threads = 2;
  const RunResult b = run_simulation(c);
  REQUIRE(b.rows.size() == a.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(b.rows[i].er == a.rows[i].er);
    CHECK(b.rows[i].k_hr == a.rows[i].k_hr);
    CHECK(b.rows[i].J_star == a.rows[i].J_star);
  }

  const fs::path d1 = scratch("det1"), d2 = scratch("det2");
  export_result(a, c, d1.string());
  export_result(b, c, d2.string());
  CHECK(slurp(d1 / "per_replicate.csv") == slurp(d2 / "per_replicate.csv"));
  CHECK(slurp(d1 / "summary.csv") == slurp(d2 / "summary.csv"));
  CHECK(slurp(d1 / "per_replicate.json") == slurp(d2 / "per_replicate.json"));

  // Summary rows equal recomputation from the detail rows.
  const auto again = summarize(a.rows);
  REQUIRE(again.size() == a.summary.size());
  for (const auto& s : a.summary) {
    std::vector<double> ers, ks;
    for (const auto& r : a.rows)
      if (r.method == s.method && r.level == s.level && r.status == "ok") {
        ers.push_back(r.er);
        ks.push_back(static_cast<double>(r.k_hr));
      }
    double m = 0.0;
    for (double e : ers) m += e;
    CHECK(s.n_ok == ers.size());
    CHECK(s.mean_er == m / static_cast<double>(ers.size()));
  }

  // Re-import gives identical aggregates.
  const auto imported = read_summary_csv((d1 / "summary.csv").string());
  REQUIRE(imported.size() == a.summary.size());
  for (std::size_t i = 0; i < imported.size(); ++i) {
    CHECK(imported[i].level == a.summary[i].level);
    CHECK(imported[i].method == a.summary[i].method);
    CHECK(imported[i].n_ok == a.summary[i].n_ok);
    CHECK(imported[i].mean_er == a.summary[i].mean_er);
    CHECK(imported[i].median_er == a.summary[i].median_er);
    CHECK(imported[i].mean_k_h == a.summary[i].mean_k_h);
    CHECK(imported[i].median_k_h == a.summary[i].median_k_h);
  }
  const auto rows = read_per_replicate_csv((d1 / "per_replicate.csv").string());
  REQUIRE(rows.size() == a.rows.size());
  const auto resummed = summarize(rows);
  for (std::size_t i = 0; i < resummed.size(); ++i) CHECK(resummed[i].mean_er == a.summary[i].mean_er);

  for (const char* f : {"per_replicate.csv", "per_replicate.json", "summary.csv", "summary.json", "timings.csv",
                        "plot_long.csv"})
    CHECK(fs::exists(d1 / f));
  const auto doc = nlohmann::json::parse(slurp(d1 / "summary.json"));
  CHECK(doc["config"]["mode"] == "simulate");
  CHECK(doc["diagnostics"]["mse_violations"] == 0);
  CHECK(slurp(d1 / "per_replicate.csv").rfind("replicate,level,method,er,J_star,k_hLL,k_hd,k_hr,status\n", 0) == 0);
}

TEST_CASE("adding a method does not perturb another method's rows") {
  ExperimentConfig c = small_config();
  c.replicates = 1;
  c.methods = {Method::fllr};
  const RunResult one = run_simulation(c);
  c.methods = {Method::fllr, Method::nw};
  const RunResult two = run_simulation(c);
  c.methods = {Method::fllr_r, Method::fllr};
  const RunResult three = run_simulation(c);
  const auto find = [](const RunResult& r, const std::string& m) {
    for (const auto& row : r.rows)
      if (row.method == m) return row;
    FAIL("method missing");
    return ReplicateRow{};
  };
  const auto base = find(one, "fllr");
  for (const RunResult* r : {&two, &three}) {
    const auto row = find(*r, "fllr");
    CHECK(row.er == base.er);
    CHECK(row.J_star == base.J_star);
    CHECK(row.k_hr == base.k_hr);
  }
}

TEST_CASE("dataset round trip and cross-path equivalence with the simulation") {
  ExperimentConfig c = small_config();
  c.replicates = 1;
  const RunResult sim = run_simulation(c);

  SimulationConfig sc = c.simulation;
  sc.a = 0.5;
  sc.seed = simulation_seed(c.seed, 0.5, 0);
  const SimulatedSample s = generate(sc);
  const fs::path dir = scratch("dataset");
  const std::string data = (dir / "sample.csv").string(), grid = (dir / "sample.grid").string();
  write_dataset(s.curves_observed, data, grid);

  const GridPtr g = read_grid_header(grid);
  CHECK(g->size() == 51);
  CHECK(g->start() == 0.0);
  CHECK(g->end() == 1.0);
  const CurveSet back = read_dataset(data, g);
  CHECK((back.values() - s.curves_observed.values()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.responses() - s.Y).cwiseAbs().maxCoeff() == 0.0);

  ExperimentConfig dc = c;
  dc.mode = RunMode::dataset;
  dc.split_mode = SplitMode::ordered;
  dc.split_ratio = 40.0 / 60.0;
  const RunResult ds = run_dataset(dc, data, grid);
  REQUIRE(ds.rows.size() == sim.rows.size());
  for (std::size_t i = 0; i < ds.rows.size(); ++i) {
    CHECK(ds.rows[i].method == sim.rows[i].method);
    CHECK(ds.rows[i].level == "dataset");
    CHECK(std::abs(ds.rows[i].er - sim.rows[i].er) <= 1e-12);
  }
  for (std::size_t i = 0; i < ds.summary.size(); ++i)
    CHECK(std::abs(ds.summary[i].mean_er - sim.summary[i].mean_er) <= 1e-12);

  // Random splits run end to end and differ between replicates.
  dc.split_mode = SplitMode::random;
  dc.replicates = 2;
  dc.methods = {Method::fllr, Method::nw};
  const RunResult rnd = run_dataset(dc, back);
  CHECK(rnd.rows.size() == 4);
  CHECK(rnd.rows[0].er != rnd.rows[2].er);
  CHECK_FALSE(rnd.failed);

  // exp transform changes the score scale only.
  dc.response_transform = ResponseTransform::exp;
  const RunResult ex = run_dataset(dc, back);
  CHECK(ex.rows[0].k_hr == rnd.rows[0].k_hr);
  CHECK(ex.rows[0].er != rnd.rows[0].er);
}

TEST_CASE("dataset parse errors name the row and column") {
  const fs::path dir = scratch("parse");
  const std::string grid = (dir / "g.txt").string(), data = (dir / "d.csv").string();
  {
    std::ofstream(grid) << "start=0\nend=1\ncount=3\n";
    std::ofstream f(data);
    f << "t_1,t_2,t_3,y\n";
    for (int r = 0; r < 10; ++r) f << r << ",1," << (r == 6 ? "abc" : "2") << "," << r * 0.5 << "\n";
  }
  const GridPtr g = read_grid_header(grid);
  try {
    read_dataset(data, g);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.row() == 8);
    CHECK(e.column() == 3);
  }
  {
    std::ofstream f(data);
    f << "t_1,t_2,y\n1,2,3\n";
  }
  CHECK_THROWS_AS(read_dataset(data, g), ParseError);
  {
    std::ofstream(grid) << "start=0\nend=1\n";
  }
  CHECK_THROWS(read_grid_header(grid));
  CHECK_THROWS(read_grid_header((dir / "missing.txt").string()));
}

TEST_CASE("constant responses are rejected") {
  auto g = Grid::equispaced(0.0, 1.0, 11);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(30, 11);
  ExperimentConfig c = small_config();
  c.mode = RunMode::dataset;
  CHECK_THROWS_AS(run_dataset(c, CurveSet(g, X, Eigen::VectorXd::Ones(30))), std::invalid_argument);
}

TEST_CASE("replicate failures are recorded and excluded from summaries") {
  ExperimentConfig c = small_config();
  c.tuning.k_candidates = {1000};
  const RunResult r = run_simulation(c);
  CHECK(r.failed);
  CHECK(r.diagnostics.failed_replicates == 2);
  for (const auto& row : r.rows) {
    CHECK(row.status == "failed:invalid_input");
    CHECK(std::isnan(row.er));
  }
  for (const auto& s : r.summary) {
    CHECK(s.n_ok == 0);
    CHECK(s.n_failed == 2);
  }
  const fs::path dir = scratch("failed");
  export_result(r, c, dir.string());
  const auto rows = read_per_replicate_csv((dir / "per_replicate.csv").string());
  CHECK(std::isnan(rows[0].er));
  CHECK(rows[0].status == "failed:invalid_input");
  const auto doc = nlohmann::json::parse(slurp(dir / "per_replicate.json"));
  CHECK(doc["rows"][0]["er"].is_null());
}

TEST_CASE("unwritable output directory") {
  const fs::path dir = scratch("blocked");
  std::ofstream(dir / "file") << "x";
  ExperimentConfig c = small_config();
  CHECK_THROWS_AS(export_result(RunResult{}, c, (dir / "file" / "sub").string()), std::runtime_error);
}
