#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / ("bard_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    std::atexit([] { fs::remove_all(fs::temp_directory_path() / ("bard_cli_test_" + std::to_string(::getpid()))); });
    return p;
  }();
  return dir;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

int run(const std::string& args) {
  const std::string cmd = std::string(BARD_CLI_PATH) + " " + args + " > " + path("stdout.txt") + " 2> " +
                          path("stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const std::string& p, const std::string& text) { std::ofstream(p) << text; }

// Small scenario: 8 of 40 dimensions shifted by 1.5 in each abnormal segment.
void ensure_simulated() {
  static bool done = false;
  if (done) return;
  write(path("cfg.json"), R"({
    "model": {"p": 0.2, "sigma2": 1.0, "mu_prior": [[-2, -1], [1, 2]], "quad_nodes": 16,
              "los_normal": {"family": "nbinom", "r": 10, "p": 0.1},
              "los_abnormal": {"family": "nbinom", "r": 15, "p": 0.3}},
    "inference": {"samples": 200},
    "scenario": {"n_target": 600, "d": 40, "affected": {"lo": 0.2, "exact_count": true},
                 "mu": {"law": "uniform", "intervals": [[-2, -1], [1, 2]]}},
    "seed": 3})");
  REQUIRE(run("simulate --config " + path("cfg.json") + " --out " + path("sim")) == 0);
  done = true;
}

}  // namespace

TEST_CASE("usage errors exit with status 1 and help exits with 0") {
  CHECK(run("") == 1);
  CHECK(run("frobnicate") == 1);
  CHECK(run("detect") == 1);
  CHECK(slurp(path("stderr.txt")).find("--data") != std::string::npos);
  CHECK(run("--help") == 0);
  CHECK(run("detect --help") == 0);
  CHECK(run("--version") == 0);
}

TEST_CASE("bad inputs exit with status 1 and name the problem") {
  ensure_simulated();
  write(path("bad.csv"), "1,2\n3\n");
  CHECK(run("detect --data " + path("bad.csv") + " --out " + path("x")) == 1);
  CHECK(slurp(path("stderr.txt")).find("line 2") != std::string::npos);
  write(path("badcfg.json"), R"({"model": {"bogus": 1}})");
  CHECK(run("detect --config " + path("badcfg.json") + " --data " + path("sim/data.csv") + " --out " + path("x")) ==
        1);
  CHECK(slurp(path("stderr.txt")).find("bogus") != std::string::npos);
  CHECK(run("detect --config " + path("cfg.json") + " --data " + path("sim/data.csv") + " --out " + path("x") +
            " --alpha 1.5") == 1);
}

TEST_CASE("simulate writes data, truth and the resolved scenario") {
  ensure_simulated();
  CHECK(fs::exists(path("sim/data.csv")));
  CHECK(fs::exists(path("sim/scenario.json")));
  const auto truth = nlohmann::json::parse(slurp(path("sim/truth.json")));
  CHECK(truth["format"] == "bard-truth");
  CHECK(truth["d"] == 40);
  CHECK(truth["n"].get<long>() >= 600);
  CHECK(run("simulate --config " + path("cfg.json") + " --out " + path("sim2")) == 0);
  CHECK(slurp(path("sim/data.csv")) == slurp(path("sim2/data.csv")));
  CHECK(run("simulate --config " + path("cfg.json") + " --out " + path("sim3") + " --seed 4") == 0);
  CHECK(slurp(path("sim/data.csv")) != slurp(path("sim3/data.csv")));
}

TEST_CASE("detect is byte-identical across runs and thread counts") {
  ensure_simulated();
  const std::string base = "detect --config " + path("cfg.json") + " --data " + path("sim/data.csv");
  REQUIRE(run(base + " --out " + path("d1") + " --threads 1") == 0);
  REQUIRE(run(base + " --out " + path("d4") + " --threads 4") == 0);
  for (const char* f : {"segments.csv", "marginals.csv", "evidence.json"})
    CHECK(slurp(path("d1/") + f) == slurp(path("d4/") + f));
  const auto manifest = nlohmann::json::parse(slurp(path("d1/manifest.json")));
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest.contains("data_hash"));
  CHECK(manifest["seed"] == 3);
}

TEST_CASE("detect finds the planted segments and evaluate scores them") {
  ensure_simulated();
  REQUIRE(run("detect --config " + path("cfg.json") + " --data " + path("sim/data.csv") + " --out " + path("det")) ==
          0);
  REQUIRE(run("evaluate --truth " + path("sim/truth.json") + " --segments " + path("det/segments.csv") +
              " --marginals " + path("det/marginals.csv") + " --out " + path("ev")) == 0);
  const auto report = nlohmann::json::parse(slurp(path("ev/report.json")));
  const double rate = report["detection_proportion"].get<double>();
  CHECK(rate >= 0.8);
  CHECK(fs::exists(path("ev/d_values.csv")));
  CHECK(report["metadata"]["truth_units"] == "regions");
  REQUIRE(run("evaluate --truth " + path("sim/truth.json") + " --segments " + path("det/segments.csv") +
              " --out " + path("ev_seg") + " --per-segment") == 0);
  const auto per_segment = nlohmann::json::parse(slurp(path("ev_seg/report.json")));
  CHECK(per_segment["metadata"]["truth_units"] == "segments");
  CHECK(per_segment["true_segments"].get<int>() >= report["true_segments"].get<int>());
  CHECK(fs::exists(path("ev/calibration.csv")));
}

TEST_CASE("evaluate refuses segments computed on other data unless forced") {
  ensure_simulated();
  write(path("other_cfg.json"), slurp(path("cfg.json")));
  REQUIRE(run("simulate --config " + path("cfg.json") + " --seed 8 --out " + path("other")) == 0);
  REQUIRE(run("detect --config " + path("cfg.json") + " --data " + path("other/data.csv") + " --out " +
              path("other_det")) == 0);
  const std::string args =
      "evaluate --truth " + path("sim/truth.json") + " --segments " + path("other_det/segments.csv") + " --out " +
      path("ev_other");
  CHECK(run(args) == 1);
  CHECK(slurp(path("stderr.txt")).find("different data") != std::string::npos);
  CHECK(run(args + " --force") == 0);
}

TEST_CASE("sample reproduces detect from the cached filter history") {
  ensure_simulated();
  const std::string cfg = " --config " + path("cfg.json");
  REQUIRE(run("detect" + cfg + " --data " + path("sim/data.csv") + " --out " + path("c") + " --cache " +
              path("c/filter.bin")) == 0);
  REQUIRE(run("sample" + cfg + " --cache " + path("c/filter.bin") + " --out " + path("s")) == 0);
  CHECK(slurp(path("c/segments.csv")) == slurp(path("s/segments.csv")));
  CHECK(slurp(path("c/marginals.csv")) == slurp(path("s/marginals.csv")));
  // a different alpha would have produced a different history
  CHECK(run("sample" + cfg + " --cache " + path("c/filter.bin") + " --out " + path("s2") + " --alpha 0.01") == 1);
  CHECK(run("sample" + cfg + " --cache " + path("c/filter.bin") + " --out " + path("s2") + " --gamma 1") == 0);
}

TEST_CASE("exact inference runs with alpha 0") {
  ensure_simulated();
  write(path("small.csv"), slurp(path("sim/data.csv")).substr(0, 4000));
  // truncate to whole lines
  std::string text = slurp(path("small.csv"));
  write(path("small.csv"), text.substr(0, text.rfind('\n') + 1));
  CHECK(run("detect --config " + path("cfg.json") + " --data " + path("small.csv") + " --out " + path("exact") +
            " --alpha 0") == 0);
  const auto ev = nlohmann::json::parse(slurp(path("exact/evidence.json")));
  CHECK(std::isfinite(ev["log_evidence"].get<double>()));
}

TEST_CASE("pure noise gives no abnormal segments") {
  write(path("noise_cfg.json"), R"({
    "model": {"p": 0.2, "sigma2": 1.0, "mu_prior": [[-2, -1], [1, 2]], "quad_nodes": 16},
    "inference": {"samples": 200},
    "scenario": {"n_target": 400, "d": 40, "affected": 1e-9,
                 "mu": {"law": "uniform", "intervals": [[1, 2]]}},
    "seed": 5})");
  REQUIRE(run("simulate --config " + path("noise_cfg.json") + " --out " + path("noise")) == 0);
  REQUIRE(run("detect --config " + path("noise_cfg.json") + " --data " + path("noise/data.csv") + " --out " +
              path("noise_det")) == 0);
  const std::string segs = slurp(path("noise_det/segments.csv"));
  CHECK(segs.substr(segs.find("start,end")) == "start,end\n");
}

TEST_CASE("fit-hyper writes a loadable fitted configuration") {
  ensure_simulated();
  REQUIRE(run("fit-hyper --config " + path("cfg.json") + " --data " + path("sim/data.csv") + " --out " +
              path("fit") + " --max-iters 2") == 0);
  CHECK(fs::exists(path("fit/mcem_trace.csv")));
  CHECK(run("detect --config " + path("fit/fitted_config.json") + " --data " + path("sim/data.csv") + " --out " +
            path("refit")) == 0);
}
