#include <filesystem>
#include <fstream>

#include "bard/config.hpp"
#include "bard/error.hpp"
#include "bard/io.hpp"
#include "bard/pipeline.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"

using namespace bard;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("bard_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& text) { std::ofstream(path) << text; }

template <typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults round-trip through canonical json") {
  const RunConfig cfg = RunConfig::defaults();
  const std::string text = cfg.to_json();
  const RunConfig back = RunConfig::from_json_text(text);
  CHECK(back.to_json() == text);
  CHECK(back.hash() == cfg.hash());
  CHECK(cfg.hash().size() == 16);
}

TEST_CASE("a full configuration round-trips and every field survives") {
  const std::string text = R"({
    "model": {"los_normal": {"family": "geometric", "q": 0.01},
              "los_abnormal": {"family": "uniform", "a": 5, "b": 40},
              "pi_n": 0.3, "p": [0.1, 0.2, 0.3], "sigma2": 2.5,
              "mu_prior": [[-2, -1], [1, 2]], "quad_nodes": 32, "quad_rule": "midpoint"},
    "inference": {"alpha": 0.001, "samples": 77, "gamma": 0.5},
    "mcem": {"max_iters": 4, "samples_schedule": [10, 20], "rel_tol": 0.1, "fit_pi_n": false},
    "scenario": {"n_target": 500, "d": 3, "affected": {"lo": 0.2, "hi": 0.6},
                 "mu": {"law": "normal", "mean": 1.0, "sd": 0.5},
                 "noise": {"law": "student_t", "df": 5, "standardize": true},
                 "process": {"los_normal": {"family": "poisson", "lambda": 30},
                             "los_abnormal": {"family": "nbinom", "r": 3, "p": 0.2}, "pi_n": 0.9}},
    "seed": 99, "threads": 3})";
  const RunConfig cfg = RunConfig::from_json_text(text);
  CHECK(cfg.model.process.pi_n == 0.3);
  CHECK(cfg.model.likelihood.p.size() == 3);
  CHECK(cfg.model.likelihood.sigma2 == 2.5);
  CHECK(cfg.model.likelihood.rule == QuadratureRule::Midpoint);
  CHECK(cfg.inference.samples == 77);
  CHECK(cfg.mcem.samples_schedule.size() == 2);
  CHECK_FALSE(cfg.mcem.fit_pi_n);
  REQUIRE(cfg.scenario.has_value());
  CHECK(cfg.scenario->n_target == 500);
  CHECK(cfg.seed == 99);
  CHECK(cfg.threads == 3);

  const RunConfig back = RunConfig::from_json_text(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
}

TEST_CASE("thread count does not change the configuration hash") {
  RunConfig a = RunConfig::defaults();
  RunConfig b = a;
  b.threads = 7;
  CHECK(a.hash() == b.hash());
  b.seed = 2;
  CHECK(a.hash() != b.hash());
}

TEST_CASE("unknown keys and bad values are rejected with their location") {
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"modle": {}})"), ConfigError);
  CHECK(error_of([] { RunConfig::from_json_text(R"({"model": {"pi": 0.5}})"); }).find("pi") != std::string::npos);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"inference": {"alpha": 1.0}})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"model": {"pi_n": 0}})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"model": {"los_normal": {"family": "zeta"}}})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json_text(R"({"model": {"sigma2": "median"}})"), ConfigError);
  CHECK_THROWS_AS(RunConfig::from_json_text("{not json"), ConfigError);
}

TEST_CASE("p is checked against the data dimension and sigma2 can come from the data") {
  const RunConfig cfg = RunConfig::from_json_text(R"({"model": {"p": [0.1, 0.2], "sigma2": "mad"}})");
  CHECK(cfg.sigma2_from_data);
  const DataMatrix three = fixtures::noise_with_segment(50, 3, 1, 1, 0, 0, 0.0);
  CHECK_THROWS_AS(cfg.resolve_model(three), ConfigError);
  const ModelParams m = cfg.resolve_model(fixtures::noise_with_segment(2000, 2, 5, 1, 0, 0, 0.0));
  CHECK(m.likelihood.sigma2 == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("relative file paths in a config resolve against its directory") {
  TempDir dir("cfgpath");
  fs::create_directories(dir.path / "sub");
  write(dir.file("sub/mu.txt"), "0.5\n0.75\n1.0\n");
  write(dir.file("sub/cfg.json"), R"({"scenario": {"d": 5, "mu": {"law": "empirical", "file": "mu.txt"}}})");
  const RunConfig cfg = RunConfig::load(dir.file("sub/cfg.json"));
  const Scenario sc = cfg.resolve_scenario();
  const auto* emp = std::get_if<EmpiricalMu>(&sc.mu);
  REQUIRE(emp != nullptr);
  CHECK(emp->values.size() == 3);
  CHECK_THROWS_AS(RunConfig::load(dir.file("missing.json")), std::exception);
}

TEST_CASE("data csv round-trips exactly and hashes by value") {
  TempDir dir("csv");
  const DataMatrix data = fixtures::noise_with_segment(50, 4, 3, 10, 20, 2, 1.3);
  io::write_data_csv(dir.file("d.csv"), data, {{"manifest", "abc"}});
  const DataMatrix back = io::read_data_csv(dir.file("d.csv"));
  REQUIRE(back.n() == data.n());
  REQUIRE(back.d() == data.d());
  for (std::size_t i = 0; i < data.values().size(); ++i) CHECK(back.values()[i] == data.values()[i]);
  CHECK(io::data_hash(back) == io::data_hash(data));
  CHECK(io::read_metadata(dir.file("d.csv")).at("manifest") == "abc");

  // a headerless file with comments and different number formatting is the same data
  write(dir.file("h.csv"), "# comment\n1.0,2\n\n3,4e0\n");
  const DataMatrix h = io::read_data_csv(dir.file("h.csv"));
  CHECK(h.n() == 2);
  CHECK(io::data_hash(h) == io::data_hash(DataMatrix(2, 2, {1, 2, 3, 4})));
  CHECK(io::data_hash(h) != io::data_hash(DataMatrix(2, 2, {1, 2, 3, 5})));
}

TEST_CASE("malformed data csv reports line and column") {
  TempDir dir("badcsv");
  write(dir.file("ragged.csv"), "a,b\n1,2\n3\n");
  CHECK(error_of([&] { io::read_data_csv(dir.file("ragged.csv")); }).find("line 3") != std::string::npos);
  write(dir.file("nan.csv"), "1,2\n3,nan\n");
  const std::string e = error_of([&] { io::read_data_csv(dir.file("nan.csv")); });
  CHECK(e.find("line 2") != std::string::npos);
  CHECK(e.find("column 2") != std::string::npos);
  write(dir.file("empty.csv"), "# nothing\n");
  CHECK_THROWS_AS(io::read_data_csv(dir.file("empty.csv")), InputError);
  write(dir.file("blank.csv"), "1,\n");
  CHECK_THROWS_AS(io::read_data_csv(dir.file("blank.csv")), InputError);
  CHECK_THROWS_AS(io::read_data_csv(dir.file("absent.csv")), InputError);
}

TEST_CASE("segments, marginals and truth files round-trip") {
  TempDir dir("files");
  const IntervalSet segs{{3, 9}, {20, 20}};
  io::write_segments_csv(dir.file("s.csv"), segs, {{"data_hash", "x"}});
  CHECK(io::read_segments_csv(dir.file("s.csv")) == segs);

  PosteriorSummary summary;
  summary.marginal_abnormal = {0.0, 0.125, 0.9, 1.0 / 3.0};
  summary.sample_count = 8;
  const PointEstimate est = map_segmentation(summary, LossSpec{1.0 / 3.0});
  io::write_marginals_csv(dir.file("m.csv"), summary, est);
  const PosteriorSummary back = io::read_marginals_csv(dir.file("m.csv"));
  REQUIRE(back.n() == 3);
  for (long t = 1; t <= 3; ++t) CHECK(back.marginal_abnormal[t] == summary.marginal_abnormal[t]);

  Scenario sc;
  sc.n_target = 300;
  sc.d = 6;
  sc.process = ProcessParams(LosDistribution(Geometric{0.05}), LosDistribution(Geometric{0.1}), 0.5);
  sc.affected = {0.5, 0.5, true};
  const SimulatedData sim = simulate(sc);
  io::write_truth_json(dir.file("t.json"), {sim.truth, "h", "m"});
  const io::TruthFile tf = io::read_truth_json(dir.file("t.json"));
  CHECK(tf.data_hash == "h");
  CHECK(tf.manifest == "m");
  CHECK(tf.truth.n == sim.truth.n);
  REQUIRE(tf.truth.segments.size() == sim.truth.segments.size());
  for (std::size_t i = 0; i < tf.truth.segments.size(); ++i) {
    CHECK(tf.truth.segments[i].segment == sim.truth.segments[i].segment);
    CHECK(tf.truth.segments[i].mu == sim.truth.segments[i].mu);
    CHECK(tf.truth.segments[i].affected == sim.truth.segments[i].affected);
  }
  write(dir.file("bad.json"), R"({"format": "something-else"})");
  CHECK_THROWS_AS(io::read_truth_json(dir.file("bad.json")), InputError);
}

TEST_CASE("filter cache round-trips and resampling from it matches the original run") {
  TempDir dir("cache");
  const auto inst = fixtures::random_instance(11, 40, 60);
  const InferenceModel model(inst.data, inst.params);
  InferenceSettings settings;
  settings.samples = 200;
  const Detection det = detect(model, settings, 5, 1, false);
  io::write_filter_cache(dir.file("f.bin"), {"cfg", "data", det.filter.log_evidence, det.filter.history});

  io::FilterCache back = io::read_filter_cache(dir.file("f.bin"));
  CHECK(back.config_hash == "cfg");
  CHECK(back.data_hash == "data");
  CHECK(back.log_evidence == det.filter.log_evidence);
  REQUIRE(back.history.n() == det.filter.history.n());
  CHECK(back.history.offsets() == det.filter.history.offsets());
  for (std::size_t i = 0; i < back.history.total_particles(); ++i) {
    const auto& a = back.history.particles()[i];
    const auto& b = det.filter.history.particles()[i];
    CHECK(a.c == b.c);
    CHECK(a.b == b.b);
    CHECK(a.log_prob == b.log_prob);
  }

  FilterResult filter;
  filter.log_evidence = back.log_evidence;
  filter.history = std::move(back.history);
  const Detection again = summarise(std::move(filter), model.transitions(), settings, 5, 1);
  CHECK(again.summary.marginal_abnormal == det.summary.marginal_abnormal);
  CHECK(again.estimate.segments == det.estimate.segments);

  // corruption is detected
  std::string bytes = io::read_text(dir.file("f.bin"));
  write(dir.file("short.bin"), bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_AS(io::read_filter_cache(dir.file("short.bin")), InputError);
  bytes[0] = 'X';
  write(dir.file("magic.bin"), bytes);
  CHECK_THROWS_AS(io::read_filter_cache(dir.file("magic.bin")), InputError);
}
