// fllr: simulation studies, dataset evaluation and self-test.

#include "CLI11.hpp"

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "fllr/harness.hpp"
#include "fllr/simgen.hpp"
#include "oracles/selftest.hpp"

namespace {

struct CommonFlags {
  std::vector<std::string> methods{"fllr", "fllr_r", "nw"};
  std::size_t replicates = 50;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::size_t> J;
  std::size_t J_max = 15;
  std::vector<std::size_t> k;
  double max_neighbor_frac = 0.7;
  std::size_t B = 50;
  std::string kernel = "box";
  std::string basis = "fpca";
  std::size_t threads = 0;
  bool no_presmooth = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--methods", f.methods, "Methods to run: fllr, fllr_r, nw")->delimiter(',');
  cmd->add_option("--replicates", f.replicates, "Monte Carlo replicates or random splits")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output directory")->required();
  cmd->add_option("--J", f.J, "Explicit J candidates (overrides --J-max)")->delimiter(',');
  cmd->add_option("--J-max", f.J_max, "J candidates 1..J_max")->check(CLI::PositiveNumber);
  cmd->add_option("--k", f.k, "Explicit neighbour-count candidates")->delimiter(',');
  cmd->add_option("--max-neighbor-frac", f.max_neighbor_frac, "Neighbour cap as a fraction of n-1")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--B", f.B, "Bootstrap repetitions")->check(CLI::PositiveNumber);
  cmd->add_option("--kernel", f.kernel, "box or triangle")->check(CLI::IsMember({"box", "triangle"}));
  cmd->add_option("--basis", f.basis, "fpca or fourier")->check(CLI::IsMember({"fpca", "fourier"}));
  cmd->add_option("--threads", f.threads, "Worker threads (0 = all cores)");
  cmd->add_flag("--no-presmooth", f.no_presmooth, "Use the raw curves");
}

fllr::ExperimentConfig to_config(const CommonFlags& f) {
  fllr::ExperimentConfig c;
  c.methods.clear();
  for (const auto& m : f.methods) c.methods.push_back(fllr::parse_method(m));
  c.replicates = f.replicates;
  c.seed = f.seed;
  c.output_dir = f.out;
  if (!f.J.empty()) {
    c.tuning.J_candidates = f.J;
  } else {
    c.tuning.J_candidates.clear();
    for (std::size_t j = 1; j <= f.J_max; ++j) c.tuning.J_candidates.push_back(j);
  }
  c.tuning.k_candidates = f.k;
  c.tuning.max_neighbor_fraction = f.max_neighbor_frac;
  c.tuning.B = f.B;
  c.tuning.kernel.kind = f.kernel == "triangle" ? fllr::KernelKind::triangle : fllr::KernelKind::box;
  c.basis = f.basis == "fourier" ? fllr::BasisChoice::fourier : fllr::BasisChoice::fpca;
  c.threads = f.threads;
  c.presmooth = !f.no_presmooth;
  return c;
}

int finish(const fllr::RunResult& r, const fllr::ExperimentConfig& c) {
  fllr::export_result(r, c, c.output_dir);
  std::printf("%-8s %-7s %5s %10s %10s %10s\n", "level", "method", "n_ok", "mean_er", "median_er", "mean_k");
  for (const auto& s : r.summary)
    std::printf("%-8s %-7s %5zu %10.4f %10.4f %10.2f\n", s.level.c_str(), s.method.c_str(), s.n_ok, s.mean_er,
                s.median_er, s.mean_k_h);
  const auto& d = r.diagnostics;
  std::printf("replicates %zu, failed %zu, escalations %zu, max est-MSE gap %.3g\n", d.total_replicates,
              d.failed_replicates, d.escalations, d.max_mse_gap);
  if (r.failed) {
    std::fprintf(stderr, "run failed: more than 10%% of replicates failed\n");
    return 3;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ridge-penalized functional local linear regression"};
  app.set_config("--config", "", "TOML/INI file mirroring the command-line flags");
  app.require_subcommand(1);

  CommonFlags sim_flags;
  std::vector<double> a_levels{0.3, 0.5, 0.7};
  fllr::SimulationConfig sim;
  bool fast = false;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study on the mixture model");
  add_common(simulate, sim_flags);
  simulate->add_option("--a", a_levels, "Sliding parameter levels")->delimiter(',');
  simulate->add_option("--n-train", sim.n_train, "Training curves per replicate");
  simulate->add_option("--n-test", sim.n_test, "Test curves per replicate");
  simulate->add_option("--n-basis", sim.n_basis, "Generating Fourier functions");
  simulate->add_option("--sigma-t", sim.sigma_t, "Observation noise s.d.");
  simulate->add_option("--sigma-e", sim.sigma_e, "Response noise s.d.");
  simulate->add_flag("--fast", fast, "CI profile: 20 replicates and J <= 8 unless set explicitly");

  CommonFlags fit_flags;
  fit_flags.max_neighbor_frac = 0.5;
  std::string data_path, grid_path, split_mode = "random", transform = "none";
  double split = 2.0 / 3.0;
  auto* fit = app.add_subcommand("fit", "Random-split evaluation on a CSV dataset");
  add_common(fit, fit_flags);
  fit->add_option("--data", data_path, "CSV with columns t_1..t_p,y")->required()->check(CLI::ExistingFile);
  fit->add_option("--grid-header", grid_path, "Grid sidecar (start, end, count)")->required()->check(CLI::ExistingFile);
  fit->add_option("--split", split, "Training fraction")->check(CLI::Range(0.0, 1.0));
  fit->add_option("--split-mode", split_mode, "random or ordered (first rows train)")
      ->check(CLI::IsMember({"random", "ordered"}));
  fit->add_option("--response-transform", transform, "Apply exp to responses and predictions before scoring")
      ->check(CLI::IsMember({"none", "exp"}));

  double export_a = 0.5;
  std::uint64_t export_seed = 0;
  std::size_t export_rep = 0;
  std::string export_data, export_grid;
  fllr::SimulationConfig export_sim;
  auto* exporter = app.add_subcommand("export-sim", "Write one simulated replicate as a dataset");
  exporter->add_option("--a", export_a, "Sliding parameter")->check(CLI::Range(0.0, 1.0));
  exporter->add_option("--seed", export_seed, "Master seed");
  exporter->add_option("--replicate", export_rep, "Replicate index");
  exporter->add_option("--n-train", export_sim.n_train, "Training curves");
  exporter->add_option("--n-test", export_sim.n_test, "Test curves");
  exporter->add_option("--data-out", export_data, "CSV output")->required();
  exporter->add_option("--grid-out", export_grid, "Grid sidecar output")->required();

  auto* selftest = app.add_subcommand("selftest", "Run the oracle-equivalence suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      if (fast) {
        if (simulate->count("--replicates") == 0) sim_flags.replicates = 20;
        if (simulate->count("--J") == 0 && simulate->count("--J-max") == 0) sim_flags.J_max = 8;
      }
      fllr::ExperimentConfig c = to_config(sim_flags);
      c.mode = fllr::RunMode::simulate;
      c.a_levels = a_levels;
      c.simulation = sim;
      return finish(fllr::run_simulation(c), c);
    }
    if (*fit) {
      fllr::ExperimentConfig c = to_config(fit_flags);
      c.mode = fllr::RunMode::dataset;
      c.split_ratio = split;
      c.split_mode = split_mode == "ordered" ? fllr::SplitMode::ordered : fllr::SplitMode::random;
      c.response_transform = transform == "exp" ? fllr::ResponseTransform::exp : fllr::ResponseTransform::none;
      return finish(fllr::run_dataset(c, data_path, grid_path), c);
    }
    if (*exporter) {
      export_sim.a = export_a;
      export_sim.seed = fllr::simulation_seed(export_seed, export_a, export_rep);
      const auto s = fllr::generate(export_sim);
      fllr::write_dataset(s.curves_observed, export_data, export_grid);
      return 0;
    }
    if (*selftest) return fllr::oracles::run_selftest(std::cout) ? 0 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
