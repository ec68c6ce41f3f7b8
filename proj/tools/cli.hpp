#pragma once

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "proxpty/proxpty.hpp"

namespace proxpty::cli {

/// Procedural stand-ins used when no source images are given on the command
/// line. Both simulate and benchmark must derive them identically so composed
/// pipelines reproduce benchmark cells bit for bit.
inline RealField default_amp_image(int size, std::uint64_t seed) {
  return test_pattern(size, size, seed ^ 0x616d7000ull);
}
inline RealField default_phase_image(int size, std::uint64_t seed) {
  return test_pattern(size, size, seed ^ 0x70687300ull);
}

struct SimulateArgs {
  std::string amp_path;
  std::string phase_path;
  int size = 256;
  double phase_range = 1.0;
  double probe_radius = 3.7;
  int probe_size = 64;
  std::string probe_kind = "fzp";
  double c = 4.0;
  int k = 1261;
  double max_counts = 1e4;
  std::string noise = "poisson";
  double amp_floor = 0.1;
  std::uint64_t seed = 0;
  std::string out;
};

inline SimulationSpec build_spec(const SimulateArgs& a) {
  SimulationSpec spec;
  spec.amp_image = a.amp_path.empty() ? default_amp_image(a.size, a.seed) : read_pgm(a.amp_path);
  spec.phase_image =
      a.phase_path.empty() ? default_phase_image(a.size, a.seed) : read_pgm(a.phase_path);
  spec.phase_range = a.phase_range;
  spec.probe_kind = a.probe_kind == "disk" ? ProbeKind::Disk : ProbeKind::Fzp;
  spec.probe_radius = a.probe_radius;
  spec.probe_rows = a.probe_size;
  spec.probe_cols = a.probe_size;
  spec.fermat_c = a.c;
  spec.positions = a.k;
  spec.max_counts = a.max_counts;
  spec.poisson_noise = a.noise == "poisson";
  spec.amp_floor = a.amp_floor;
  spec.seed = a.seed;
  return spec;
}

inline int cmd_simulate(const SimulateArgs& a) {
  const Dataset ds = simulate(build_spec(a));
  write_dataset(a.out, ds);
  std::cout << "snr_db=" << format_double(ds.snr_db) << "\n";
  return 0;
}

struct ReconstructArgs {
  std::string data_path;
  std::string algo;
  std::string model = "poisson";
  double epsilon = 1e-8;
  double lambda = 1.0;
  double beta = -1.0;   // <0 -> per-algorithm default
  double delta = -1.0;  // <0 -> per-algorithm default
  int tmax = 300;
  int inner_iters = 1;
  bool no_momentum = false;
  int max_backtracks = 20;
  double init_probe_radius = 0.0;
  std::uint64_t seed = 0;
  std::string out_dir;
  // which flags the user passed explicitly, for hygiene warnings
  bool lambda_set = false, beta_set = false, delta_set = false, momentum_set = false,
       backtracks_set = false;
};

inline Algorithm parse_algorithm(const std::string& name) {
  if (name == "er") return Algorithm::ER;
  if (name == "dm") return Algorithm::DM;
  if (name == "pm") return Algorithm::PM;
  if (name == "madmm") return Algorithm::mADMM;
  if (name == "apg") return Algorithm::APG;
  throw std::runtime_error("unknown algorithm '" + name + "'");
}

inline EngineConfig build_engine_config(const ReconstructArgs& a) {
  const Algorithm algo = parse_algorithm(a.algo);
  EngineConfig cfg = EngineConfig::defaults_for(algo);
  cfg.noise_model =
      a.model == "gaussian" ? NoiseModel::gaussian() : NoiseModel::poisson(a.epsilon);
  cfg.lambda0 = a.lambda;
  if (a.beta >= 0.0) cfg.beta = a.beta;
  if (a.delta >= 0.0) cfg.delta = a.delta;
  cfg.t_max = a.tmax;
  cfg.inner_iters = a.inner_iters;
  cfg.momentum_enabled = !a.no_momentum;
  cfg.max_backtracks = a.max_backtracks;
  cfg.init_probe_radius = a.init_probe_radius;
  cfg.seed = a.seed;

  const bool has_lambda = algo == Algorithm::PM || algo == Algorithm::mADMM || algo == Algorithm::APG;
  const bool has_schedule = algo == Algorithm::mADMM || algo == Algorithm::APG;
  if (!has_lambda && a.lambda_set) {
    std::cerr << "warning: --lambda has no effect with --algo " << a.algo << "; ignoring\n";
  }
  if (!has_schedule && a.beta_set) {
    std::cerr << "warning: --beta has no effect with --algo " << a.algo << "; ignoring\n";
  }
  if (!has_schedule && a.delta_set) {
    std::cerr << "warning: --delta has no effect with --algo " << a.algo << "; ignoring\n";
  }
  if (algo != Algorithm::APG && (a.momentum_set || a.backtracks_set)) {
    std::cerr << "warning: momentum/backtracking flags only apply to --algo apg; ignoring\n";
  }
  return cfg;
}

inline std::string format_wall(double seconds) {
  return format_double(runtime_config().deterministic ? 0.0 : seconds);
}

inline int cmd_reconstruct(const ReconstructArgs& a) {
  const Dataset ds = read_dataset(a.data_path);
  const EngineConfig cfg = build_engine_config(a);
  std::filesystem::create_directories(a.out_dir);

  const auto started = std::chrono::steady_clock::now();
  const ReconstructionState st = run(ds, cfg);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const std::string dir = a.out_dir + "/";
  export_field(dir + "object", st.object);
  export_field(dir + "probe", st.probe);
  if (cfg.algorithm == Algorithm::DM && st.best_t > 0) {
    export_field(dir + "object_best", st.best_object);
    export_field(dir + "probe_best", st.best_probe);
  }
  const bool lambda_applies = cfg.algorithm != Algorithm::ER && cfg.algorithm != Algorithm::DM;
  write_trace_csv(dir + "trace.csv", st.trace, lambda_applies);

  std::vector<std::pair<std::string, std::string>> manifest;
  manifest.emplace_back("proxpty_version", kVersion);
  manifest.emplace_back("command", "reconstruct");
  manifest.emplace_back("data", a.data_path);
  manifest.emplace_back("algo", a.algo);
  manifest.emplace_back("model", a.model);
  manifest.emplace_back("epsilon", format_double(a.epsilon));
  manifest.emplace_back("lambda", format_double(cfg.lambda0));
  manifest.emplace_back("beta", format_double(cfg.beta));
  manifest.emplace_back("delta", format_double(cfg.delta));
  manifest.emplace_back("tmax", std::to_string(cfg.t_max));
  manifest.emplace_back("inner_iters", std::to_string(cfg.inner_iters));
  manifest.emplace_back("momentum", cfg.momentum_enabled ? "1" : "0");
  manifest.emplace_back("max_backtracks", std::to_string(cfg.max_backtracks));
  manifest.emplace_back("seed", std::to_string(cfg.seed));
  manifest.emplace_back("iterations", std::to_string(st.t));
  if (!st.trace.empty()) {
    manifest.emplace_back("final_nll", format_double(st.trace.back().nll));
    if (st.trace.back().rmse) {
      manifest.emplace_back("final_rmse", format_double(*st.trace.back().rmse));
    }
    manifest.emplace_back("best_nll", format_double(st.best_nll));
    manifest.emplace_back("best_t", std::to_string(st.best_t));
  }
  manifest.emplace_back("wall_time", format_wall(wall));
  write_manifest(dir + "manifest.txt", manifest);
  return 0;
}

struct EvaluateArgs {
  std::string recon_prefix;
  std::string truth_prefix;
  std::string crop = "full";
  std::string data_path;
};

inline int cmd_evaluate(const EvaluateArgs& a) {
  const ComplexField recon = import_field(a.recon_prefix);
  const ComplexField truth = import_field(a.truth_prefix);
  std::vector<std::uint8_t> mask;
  const std::vector<std::uint8_t>* mask_ptr = nullptr;
  if (a.crop == "illuminated") {
    const Dataset ds = read_dataset(a.data_path);
    mask = illuminated_mask(ds.positions);
    mask_ptr = &mask;
  }
  const cplx a_fit = fit_ambiguity(recon, truth, mask_ptr);
  const double err = rmse(recon, truth, mask_ptr);
  std::cout << "rmse=" << format_double(err) << "\n";
  std::cout << "a=" << format_double(a_fit.real()) << "," << format_double(a_fit.imag()) << "\n";
  return 0;
}

struct BenchmarkArgs {
  std::string algos = "pm,madmm,apg";
  std::string max_counts = "1e2,1e3,1e4,1e5,1e6";
  int tmax = 300;
  std::uint64_t seed = 0;
  std::string out;
  std::string model = "poisson";
  double epsilon = 1e-8;
  // simulation geometry shared by all cells
  std::string amp_path, phase_path;
  int size = 96;
  int k = 150;
  double c = 3.0;
  int probe_size = 32;
  double probe_radius = 3.0;
  double phase_range = 1.0;
  int inner_iters = 1;
};

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

inline int cmd_benchmark(const BenchmarkArgs& a) {
  const std::vector<std::string> algos = split_list(a.algos);
  const std::vector<std::string> count_tokens = split_list(a.max_counts);
  if (algos.empty() || count_tokens.empty()) {
    throw std::runtime_error("benchmark: empty --algos or --max-counts list");
  }

  // One dataset per signal level, shared across algorithms.
  std::map<std::string, Dataset> datasets;
  for (const auto& token : count_tokens) {
    SimulateArgs sim;
    sim.amp_path = a.amp_path;
    sim.phase_path = a.phase_path;
    sim.size = a.size;
    sim.phase_range = a.phase_range;
    sim.probe_radius = a.probe_radius;
    sim.probe_size = a.probe_size;
    sim.c = a.c;
    sim.k = a.k;
    sim.max_counts = std::stod(token);
    sim.seed = a.seed;
    datasets.emplace(token, simulate(build_spec(sim)));
  }

  std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("benchmark: cannot open '" + a.out + "' for writing");
  out << "algo,max_counts,snr_db,final_rmse,iterations,wall_time,error\n";
  bool any_failed = false;
  for (const auto& algo : algos) {
    for (const auto& token : count_tokens) {
      const Dataset& ds = datasets.at(token);
      std::string error;
      double final_rmse = std::numeric_limits<double>::quiet_NaN();
      double wall = 0.0;
      int iterations = 0;
      try {
        EngineConfig cfg = EngineConfig::defaults_for(parse_algorithm(algo));
        cfg.noise_model =
            a.model == "gaussian" ? NoiseModel::gaussian() : NoiseModel::poisson(a.epsilon);
        cfg.t_max = a.tmax;
        cfg.inner_iters = a.inner_iters;
        cfg.seed = a.seed;
        const auto started = std::chrono::steady_clock::now();
        const ReconstructionState st = run(ds, cfg);
        wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        iterations = st.t;
        if (!st.trace.empty() && st.trace.back().rmse) final_rmse = *st.trace.back().rmse;
      } catch (const std::exception& e) {
        error = e.what();
        any_failed = true;
      }
      out << algo << ',' << token << ',' << format_double(ds.snr_db) << ','
          << (std::isnan(final_rmse) ? "" : format_double(final_rmse)) << ',' << iterations << ','
          << format_wall(wall) << ',' << error << "\n";
    }
  }
  if (!out) throw std::runtime_error("benchmark: short write to '" + a.out + "'");
  return any_failed ? 1 : 0;
}

/// Command-line entry point shared by the binary and the test suite.
inline int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"proxpty: proximal-algorithm ptychographic phase retrieval"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic PTYX dataset");
  sim_cmd->add_option("--amp", sim.amp_path, "Amplitude source image (PGM); procedural if omitted");
  sim_cmd->add_option("--phase", sim.phase_path, "Phase source image (PGM); procedural if omitted");
  sim_cmd->add_option("--size", sim.size, "Procedural image extent when no images are given");
  sim_cmd->add_option("--phase-range", sim.phase_range, "Radians spanned by the phase image");
  sim_cmd->add_option("--probe-radius", sim.probe_radius, "Probe footprint radius in pixels");
  sim_cmd->add_option("--probe-size", sim.probe_size, "Probe window extent in pixels");
  sim_cmd->add_option("--probe-kind", sim.probe_kind, "Probe model: fzp or disk")
      ->check(CLI::IsMember({"fzp", "disk"}));
  sim_cmd->add_option("--c", sim.c, "Fermat spiral constant in pixels");
  sim_cmd->add_option("--k", sim.k, "Number of scan positions");
  sim_cmd->add_option("--max-counts", sim.max_counts, "Target maximum detector intensity");
  sim_cmd->add_option("--noise", sim.noise, "Noise model: poisson or none")
      ->check(CLI::IsMember({"poisson", "none"}));
  sim_cmd->add_option("--amp-floor", sim.amp_floor, "Minimum object amplitude after rescale");
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--out", sim.out, "Output PTYX file")->required();

  ReconstructArgs rec;
  auto* rec_cmd = app.add_subcommand("reconstruct", "Run a phase-retrieval engine on a dataset");
  rec_cmd->add_option("--data", rec.data_path, "Input PTYX dataset")->required();
  rec_cmd->add_option("--algo", rec.algo, "Engine: er, dm, pm, madmm, apg")
      ->required()
      ->check(CLI::IsMember({"er", "dm", "pm", "madmm", "apg"}));
  rec_cmd->add_option("--model", rec.model, "Noise model: gaussian or poisson")
      ->check(CLI::IsMember({"gaussian", "poisson"}));
  rec_cmd->add_option("--epsilon", rec.epsilon, "Poisson smoothing constant (counts^2)");
  auto* lambda_opt = rec_cmd->add_option("--lambda", rec.lambda, "Initial step size");
  auto* beta_opt = rec_cmd->add_option("--beta", rec.beta, "Step shrink factor in (0,1)");
  auto* delta_opt = rec_cmd->add_option("--delta", rec.delta, "mADMM threshold / APG reset floor");
  rec_cmd->add_option("--tmax", rec.tmax, "Iteration budget");
  rec_cmd->add_option("--inner-iters", rec.inner_iters, "Alternations per translation projection");
  auto* momentum_opt =
      rec_cmd->add_flag("--no-momentum", rec.no_momentum, "Disable APG extrapolation");
  auto* backtracks_opt =
      rec_cmd->add_option("--max-backtracks", rec.max_backtracks, "APG backtrack budget");
  rec_cmd->add_option("--init-probe-radius", rec.init_probe_radius,
                      "Disk radius of the default probe guess (0 = probe extent / 4)");
  rec_cmd->add_option("--seed", rec.seed, "RNG seed recorded in the manifest");
  rec_cmd->add_option("--out-dir", rec.out_dir, "Output directory")->required();

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Ambiguity-corrected RMSE of a reconstruction");
  eval_cmd->add_option("--recon", eval.recon_prefix, "Reconstruction field prefix")->required();
  eval_cmd->add_option("--truth", eval.truth_prefix, "Ground-truth field prefix")->required();
  eval_cmd->add_option("--crop", eval.crop, "Evaluation region: full or illuminated")
      ->check(CLI::IsMember({"full", "illuminated"}));
  auto* eval_data = eval_cmd->add_option("--data", eval.data_path,
                                         "PTYX dataset supplying the scan geometry (needed for "
                                         "--crop illuminated)");

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "Sweep algorithms across signal levels");
  bench_cmd->add_option("--algos", bench.algos, "Comma-separated engine list");
  bench_cmd->add_option("--max-counts", bench.max_counts, "Comma-separated intensity list");
  bench_cmd->add_option("--tmax", bench.tmax, "Iteration budget per cell");
  bench_cmd->add_option("--seed", bench.seed, "RNG seed");
  bench_cmd->add_option("--out", bench.out, "Output CSV")->required();
  bench_cmd->add_option("--model", bench.model, "Noise model for reconstruction")
      ->check(CLI::IsMember({"gaussian", "poisson"}));
  bench_cmd->add_option("--epsilon", bench.epsilon, "Poisson smoothing constant");
  bench_cmd->add_option("--amp", bench.amp_path, "Amplitude source image (PGM)");
  bench_cmd->add_option("--phase", bench.phase_path, "Phase source image (PGM)");
  bench_cmd->add_option("--size", bench.size, "Procedural image extent");
  bench_cmd->add_option("--k", bench.k, "Number of scan positions");
  bench_cmd->add_option("--c", bench.c, "Fermat spiral constant in pixels");
  bench_cmd->add_option("--probe-size", bench.probe_size, "Probe window extent");
  bench_cmd->add_option("--probe-radius", bench.probe_radius, "Probe footprint radius");
  bench_cmd->add_option("--phase-range", bench.phase_range, "Radians spanned by the phase image");
  bench_cmd->add_option("--inner-iters", bench.inner_iters, "Alternations per projection");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("proxpty");
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(sim_cmd)) return cmd_simulate(sim);
    if (app.got_subcommand(rec_cmd)) {
      rec.lambda_set = lambda_opt->count() > 0;
      rec.beta_set = beta_opt->count() > 0;
      rec.delta_set = delta_opt->count() > 0;
      rec.momentum_set = momentum_opt->count() > 0;
      rec.backtracks_set = backtracks_opt->count() > 0;
      return cmd_reconstruct(rec);
    }
    if (app.got_subcommand(eval_cmd)) {
      if (eval.crop == "illuminated" && eval_data->count() == 0) {
        std::cerr << "error: --crop illuminated requires --data\n";
        return 2;
      }
      return cmd_evaluate(eval);
    }
    if (app.got_subcommand(bench_cmd)) return cmd_benchmark(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace proxpty::cli
