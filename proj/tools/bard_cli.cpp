// bard: segment detection in multi-dimensional series.
//
//   bard simulate  --config cfg.json --out DIR
//   bard detect    --config cfg.json --data data.csv --out DIR [--cache filter.bin]
//   bard sample    --config cfg.json --cache filter.bin --out DIR
//   bard fit-hyper --config cfg.json --data data.csv --out DIR
//   bard evaluate  --truth truth.json --segments segments.csv [--marginals marginals.csv] --out DIR
//
// Exit status: 0 success, 1 bad input/config/usage, 2 numerical failure.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "bard/config.hpp"
#include "bard/error.hpp"
#include "bard/evaluate.hpp"
#include "bard/io.hpp"
#include "bard/kernels.hpp"
#include "bard/pipeline.hpp"
#include "bard/version.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace bard;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<double> gamma;
  std::optional<std::size_t> samples;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, Overrides& o, bool inference) {
  cmd->add_option("--config", o.config, "run configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "master random seed");
  cmd->add_option("--threads", o.threads, "worker threads (default: all cores)");
  if (inference) {
    cmd->add_option("--alpha", o.alpha, "pruning threshold in [0, 1); 0 = exact");
    cmd->add_option("--gamma", o.gamma, "loss ratio; calls abnormal when Pr(A) >= 1/(1+gamma)");
    cmd->add_option("--samples", o.samples, "posterior samples");
  }
}

RunConfig load_config(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig::defaults() : RunConfig::load(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.alpha) cfg.inference.alpha = *o.alpha;
  if (o.gamma) cfg.inference.gamma = *o.gamma;
  if (o.samples) cfg.inference.samples = *o.samples;
  if (o.threads) cfg.threads = *o.threads;
  // re-validate after overrides
  return RunConfig::from_json_text(cfg.to_json());
}

fs::path prepare_out(const std::string& dir) {
  fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw InputError("cannot create output directory " + dir);
  return out;
}

// Identifies the filtering stage: model, pruning threshold, seed and data.
std::string filter_key(const RunConfig& cfg, const std::string& data_hash) {
  nlohmann::json j = nlohmann::json::parse(cfg.to_json());
  return hash_hex(j["model"].dump() + "|" + j["inference"]["alpha"].dump() + "|" + std::to_string(cfg.seed) + "|" +
                  data_hash);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void write_detection(const fs::path& out, const Detection& det, const io::Metadata& meta, bool with_samples) {
  io::write_segments_csv((out / "segments.csv").string(), det.estimate.segments, meta);
  io::write_marginals_csv((out / "marginals.csv").string(), det.summary, det.estimate, meta);
  if (with_samples) io::write_samples_csv((out / "samples.csv").string(), det.samples, meta);
}

int cmd_simulate(const Overrides& o, const std::string& out_dir, std::optional<long> n, std::optional<std::size_t> d) {
  RunConfig cfg = load_config(o);
  Scenario sc = cfg.resolve_scenario();
  if (n) sc.n_target = *n;
  if (d) sc.d = *d;
  cfg.scenario = sc;
  cfg.scenario->process = sc.process;
  const std::string manifest = cfg.hash();
  const auto sim = simulate(sc);
  const auto out = prepare_out(out_dir);
  const std::string dh = io::data_hash(sim.data);
  io::write_data_csv((out / "data.csv").string(), sim.data, {{"manifest", manifest}, {"data_hash", dh}});
  io::write_truth_json((out / "truth.json").string(), {sim.truth, dh, manifest});
  io::write_text((out / "scenario.json").string(), cfg.to_json());
  std::cout << "simulated n=" << sim.truth.n << " d=" << sim.truth.d << " abnormal segments="
            << sim.truth.abnormal_intervals().size() << " -> " << out.string() << "\n";
  return 0;
}

int cmd_detect(const Overrides& o, const std::string& data_path, const std::string& out_dir, const std::string& cache,
               bool with_samples) {
  const auto t0 = std::chrono::steady_clock::now();
  const RunConfig cfg = load_config(o);
  const DataMatrix data = io::read_data_csv(data_path);
  const ModelParams params = cfg.resolve_model(data);
  const std::string dh = io::data_hash(data);
  const auto out = prepare_out(out_dir);

  const InferenceModel model(data, params);
  const Detection det = detect(model, cfg.inference, cfg.seed, cfg.thread_count(), false);

  const std::string run = hash_hex(cfg.hash() + dh);
  write_detection(out, det, {{"manifest", run}, {"data_hash", dh}}, with_samples);

  nlohmann::json evidence{{"log_evidence", det.filter.log_evidence},
                          {"n", data.n()},
                          {"d", data.d()},
                          {"sigma2", params.likelihood.sigma2},
                          {"max_particles", det.filter.max_particles},
                          {"abnormal_segments", det.estimate.segments.size()},
                          {"manifest", run}};
  io::write_text((out / "evidence.json").string(), evidence.dump(2) + "\n");

  if (!cache.empty())
    io::write_filter_cache(cache, {filter_key(cfg, dh), dh, det.filter.log_evidence, det.filter.history});

  nlohmann::json manifest{{"tool", "bard"},
                          {"version", kVersion},
                          {"command", "detect"},
                          {"manifest", run},
                          {"config_hash", cfg.hash()},
                          {"config", nlohmann::json::parse(cfg.to_json())},
                          {"seed", cfg.seed},
                          {"data", data_path},
                          {"data_hash", dh},
                          {"kernel", std::string(kernels::active().name)},
                          {"threads", cfg.thread_count()},
                          {"wall_time_s", seconds_since(t0)}};
  io::write_text((out / "manifest.json").string(), manifest.dump(2) + "\n");
  std::cout << "log evidence " << det.filter.log_evidence << ", " << det.estimate.segments.size()
            << " abnormal segment(s) -> " << out.string() << "\n";
  return 0;
}

int cmd_sample(const Overrides& o, const std::string& cache_path, const std::string& out_dir, bool force,
               bool with_samples) {
  const RunConfig cfg = load_config(o);
  io::FilterCache cache = io::read_filter_cache(cache_path);
  if (cache.config_hash != filter_key(cfg, cache.data_hash) && !force)
    throw InputError("filter cache " + cache_path +
                     " was produced with a different model, alpha or seed; use --force to sample anyway");
  const long n = cache.history.n();
  if (n < 1) throw InputError("filter cache is empty");
  const TransitionModel transitions(cfg.model.process, n);
  FilterResult filter;
  filter.log_evidence = cache.log_evidence;
  filter.history = std::move(cache.history);
  const Detection det = summarise(std::move(filter), transitions, cfg.inference, cfg.seed, cfg.thread_count());
  const auto out = prepare_out(out_dir);
  write_detection(out, det, {{"manifest", hash_hex(cfg.hash() + cache.data_hash)}, {"data_hash", cache.data_hash}},
                  with_samples);
  std::cout << det.estimate.segments.size() << " abnormal segment(s) -> " << out.string() << "\n";
  return 0;
}

int cmd_fit(const Overrides& o, const std::string& data_path, const std::string& out_dir,
            std::optional<std::size_t> max_iters) {
  RunConfig cfg = load_config(o);
  const DataMatrix data = io::read_data_csv(data_path);
  const ModelParams params = cfg.resolve_model(data);
  McemConfig mc = cfg.mcem;
  mc.seed = cfg.seed;
  mc.alpha = cfg.inference.alpha;
  mc.threads = cfg.thread_count();
  if (max_iters) mc.max_iters = *max_iters;
  const McemResult fit = mcem_fit(data, params, mc);
  const auto out = prepare_out(out_dir);
  const std::string dh = io::data_hash(data);
  io::write_mcem_trace_csv((out / "mcem_trace.csv").string(), fit.trace,
                           {{"manifest", hash_hex(cfg.hash() + dh)}, {"data_hash", dh}});
  RunConfig fitted = cfg;
  fitted.model.process = fit.fitted;
  io::write_text((out / "fitted_config.json").string(), fitted.to_json());
  if (!fit.aborted.empty()) {
    std::cerr << "bard: MCEM aborted: " << fit.aborted << "\n";
    return 2;
  }
  std::cout << (fit.converged ? "converged" : "stopped") << " after " << fit.trace.size() << " iteration(s): normal "
            << describe(fit.fitted.los_normal) << ", abnormal " << describe(fit.fitted.los_abnormal)
            << ", pi_n=" << fit.fitted.pi_n << " -> " << out.string() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& truth_path, const std::string& segments_path, const std::string& marginals_path,
                 const std::string& out_dir, std::size_t bins, bool force, bool per_segment) {
  const auto truth = io::read_truth_json(truth_path);
  const auto estimated = io::read_segments_csv(segments_path);
  const auto meta = io::read_metadata(segments_path);
  const auto it = meta.find("data_hash");
  if (!force) {
    if (it == meta.end())
      throw InputError(segments_path + " carries no data hash; use --force to evaluate anyway");
    if (it->second != truth.data_hash)
      throw InputError("segments were computed on different data than " + truth_path + " describes (" + it->second +
                       " vs " + truth.data_hash + "); use --force to evaluate anyway");
  }
  for (const auto& iv : estimated)
    if (iv.end > truth.truth.n) throw InputError(segments_path + ": segment beyond the series length");

  const IntervalSet true_set = per_segment ? truth.truth.abnormal_intervals() : truth.truth.abnormal_regions();
  EvalReport report = evaluate_segmentation(true_set, estimated);
  if (!marginals_path.empty()) {
    const auto summary = io::read_marginals_csv(marginals_path);
    if (summary.n() != truth.truth.n) throw InputError(marginals_path + ": length does not match the truth");
    if (bins < 2) throw ConfigError("--bins must be >= 2");
    report.calibration = calibration(summary, truth.truth.abnormal_labels(), bins);
  }
  const auto out = prepare_out(out_dir);
  const io::Metadata m{{"truth", truth_path},
                       {"segments", segments_path},
                       {"truth_manifest", truth.manifest},
                       {"truth_units", per_segment ? "segments" : "regions"},
                       {"data_hash", truth.data_hash}};
  io::write_report_json((out / "report.json").string(), report, consistency(true_set, estimated), m);
  io::write_d_values_csv((out / "d_values.csv").string(), true_set, report.d_values, m);
  if (!report.calibration.empty()) io::write_calibration_csv((out / "calibration.csv").string(), report.calibration, m);
  std::cout << "detected " << report.detected << "/" << report.true_segments << ", false positives "
            << report.false_positives << " -> " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian detection of abnormal segments in multi-dimensional series"};
  app.set_version_flag("--version", std::string("bard ") + kVersion);
  app.require_subcommand(1);

  Overrides sim_o, det_o, smp_o, fit_o;
  std::string out_dir, data_path, cache_path, truth_path, segments_path, marginals_path;
  std::optional<long> sim_n;
  std::optional<std::size_t> sim_d, max_iters;
  std::size_t bins = 10;
  bool force = false, with_samples = false, per_segment = false;

  auto* sim = app.add_subcommand("simulate", "simulate a data set and its ground truth");
  add_common(sim, sim_o, false);
  sim->add_option("--out", out_dir, "output directory")->required();
  sim->add_option("--n", sim_n, "target series length (overrides the scenario)");
  sim->add_option("--d", sim_d, "dimensions (overrides the scenario)");

  auto* det = app.add_subcommand("detect", "segment a data set");
  add_common(det, det_o, true);
  det->add_option("--data", data_path, "data CSV")->required()->check(CLI::ExistingFile);
  det->add_option("--out", out_dir, "output directory")->required();
  det->add_option("--cache", cache_path, "also store the filter history in this file");
  det->add_flag("--write-samples", with_samples, "write every posterior sample to samples.csv");

  auto* smp = app.add_subcommand("sample", "resample the posterior from a stored filter history");
  add_common(smp, smp_o, true);
  smp->add_option("--cache", cache_path, "filter history written by detect --cache")->required()->check(CLI::ExistingFile);
  smp->add_option("--out", out_dir, "output directory")->required();
  smp->add_flag("--force", force, "accept a cache produced under a different configuration");
  smp->add_flag("--write-samples", with_samples, "write every posterior sample to samples.csv");

  auto* fit = app.add_subcommand("fit-hyper", "fit segment length laws by Monte Carlo EM");
  add_common(fit, fit_o, true);
  fit->add_option("--data", data_path, "data CSV")->required()->check(CLI::ExistingFile);
  fit->add_option("--out", out_dir, "output directory")->required();
  fit->add_option("--max-iters", max_iters, "maximum EM iterations");

  auto* ev = app.add_subcommand("evaluate", "score estimated segments against a ground truth");
  ev->add_option("--truth", truth_path, "truth JSON written by simulate")->required()->check(CLI::ExistingFile);
  ev->add_option("--segments", segments_path, "segments CSV written by detect")->required()->check(CLI::ExistingFile);
  ev->add_option("--marginals", marginals_path, "marginals CSV for calibration")->check(CLI::ExistingFile);
  ev->add_option("--out", out_dir, "output directory")->required();
  ev->add_option("--bins", bins, "calibration bins");
  ev->add_flag("--force", force, "evaluate even if the data hashes differ");
  ev->add_flag("--per-segment", per_segment,
               "score every true abnormal segment separately instead of joining back-to-back ones");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "bard: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    std::cerr << failing->help();
    return 1;
  }

  try {
    if (*sim) return cmd_simulate(sim_o, out_dir, sim_n, sim_d);
    if (*det) return cmd_detect(det_o, data_path, out_dir, cache_path, with_samples);
    if (*smp) return cmd_sample(smp_o, cache_path, out_dir, force, with_samples);
    if (*fit) return cmd_fit(fit_o, data_path, out_dir, max_iters);
    if (*ev) return cmd_evaluate(truth_path, segments_path, marginals_path, out_dir, bins, force, per_segment);
  } catch (const NumericalError& e) {
    std::cerr << "bard: numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "bard: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
