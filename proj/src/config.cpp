#include "bard/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "bard/error.hpp"
#include "json.hpp"

namespace bard {
namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

double number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  if (!obj[key].is_number()) throw ConfigError(where + "." + key + ": expected a number");
  return obj[key].get<double>();
}

template <class T>
T integer(const json& v, const std::string& where) {
  if (!v.is_number_integer() && !(v.is_number() && v.get<double>() == std::floor(v.get<double>())))
    throw ConfigError(where + ": expected an integer");
  if constexpr (std::is_unsigned_v<T>) {
    if (v.get<double>() < 0) throw ConfigError(where + ": expected a non-negative integer");
  }
  return static_cast<T>(v.get<double>());
}

LosDistribution parse_los(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("family") || !j["family"].is_string())
    throw ConfigError(where + ": expected {\"family\": ..., parameters}");
  const auto family = j["family"].get<std::string>();
  if (family == "geometric") {
    check_keys(j, {"family", "q"}, where);
    return LosDistribution(Geometric{number(j, "q", where)});
  }
  if (family == "nbinom") {
    check_keys(j, {"family", "r", "p"}, where);
    return LosDistribution(NegativeBinomial{number(j, "r", where), number(j, "p", where)});
  }
  if (family == "uniform") {
    check_keys(j, {"family", "a", "b"}, where);
    return LosDistribution(DiscreteUniform{integer<long>(j.at("a"), where + ".a"), integer<long>(j.at("b"), where + ".b")});
  }
  if (family == "poisson") {
    check_keys(j, {"family", "lambda"}, where);
    return LosDistribution(ShiftedPoisson{number(j, "lambda", where)});
  }
  throw ConfigError(where + ": unknown LOS family '" + family + "'");
}

json los_json(const LosDistribution& dist) {
  return std::visit(
      [](const auto& law) -> json {
        using T = std::decay_t<decltype(law)>;
        if constexpr (std::is_same_v<T, Geometric>) return {{"family", "geometric"}, {"q", law.q}};
        if constexpr (std::is_same_v<T, NegativeBinomial>) return {{"family", "nbinom"}, {"r", law.r}, {"p", law.p}};
        if constexpr (std::is_same_v<T, DiscreteUniform>) return {{"family", "uniform"}, {"a", law.a}, {"b", law.b}};
        if constexpr (std::is_same_v<T, ShiftedPoisson>) return {{"family", "poisson"}, {"lambda", law.lambda}};
      },
      dist.law());
}

MuPrior parse_intervals(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a list of [lo, hi] pairs");
  std::vector<MuInterval> out;
  for (const auto& iv : j) {
    if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number())
      throw ConfigError(where + ": each interval must be [lo, hi]");
    out.push_back({iv[0].get<double>(), iv[1].get<double>()});
  }
  return MuPrior(std::move(out));
}

json intervals_json(const MuPrior& prior) {
  json out = json::array();
  for (const auto& iv : prior.intervals()) out.push_back({iv.lo, iv.hi});
  return out;
}

std::vector<double> read_value_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open value list " + path.string());
  std::vector<double> out;
  std::string token;
  while (in >> token) {
    if (token.front() == '#') {
      std::getline(in, token);
      continue;
    }
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw ConfigError("value list " + path.string() + ": not a number: '" + token + "'");
    }
  }
  return out;
}

ProcessParams parse_process(const json& j, const std::string& where, const ProcessParams& fallback) {
  check_keys(j, {"los_normal", "los_abnormal", "pi_n"}, where);
  return ProcessParams(j.contains("los_normal") ? parse_los(j["los_normal"], where + ".los_normal") : fallback.los_normal,
                       j.contains("los_abnormal") ? parse_los(j["los_abnormal"], where + ".los_abnormal")
                                                  : fallback.los_abnormal,
                       j.contains("pi_n") ? number(j, "pi_n", where) : fallback.pi_n);
}

json process_json(const ProcessParams& p) {
  return {{"los_normal", los_json(p.los_normal)}, {"los_abnormal", los_json(p.los_abnormal)}, {"pi_n", p.pi_n}};
}

Scenario parse_scenario(const json& j, const ProcessParams& model_process, const std::filesystem::path& base) {
  const std::string where = "scenario";
  check_keys(j, {"n_target", "d", "process", "layout", "affected", "mu", "noise"}, where);
  Scenario sc;
  if (j.contains("n_target")) sc.n_target = integer<long>(j["n_target"], "scenario.n_target");
  if (j.contains("d")) sc.d = integer<std::size_t>(j["d"], "scenario.d");
  if (j.contains("process")) sc.process = parse_process(j["process"], "scenario.process", model_process);
  if (j.contains("layout")) {
    const auto& l = j["layout"];
    check_keys(l, {"starts", "followed_by_abnormal", "intensities"}, "scenario.layout");
    FixedLayout layout;
    for (const auto& s : l.value("starts", json::array())) layout.starts.push_back(integer<long>(s, "scenario.layout.starts"));
    for (const auto& f : l.value("followed_by_abnormal", json::array())) {
      if (!f.is_boolean()) throw ConfigError("scenario.layout.followed_by_abnormal: expected booleans");
      layout.followed_by_abnormal.push_back(f.get<bool>());
    }
    if (!l.contains("followed_by_abnormal")) layout.followed_by_abnormal.assign(layout.starts.size(), false);
    for (const auto& x : l.value("intensities", json::array())) {
      if (!x.is_number()) throw ConfigError("scenario.layout.intensities: expected numbers");
      layout.intensities.push_back(x.get<double>());
    }
    sc.layout = std::move(layout);
  }
  if (j.contains("affected")) {
    const auto& a = j["affected"];
    if (a.is_number()) {
      sc.affected = {a.get<double>(), a.get<double>(), false};
    } else {
      check_keys(a, {"lo", "hi", "exact_count"}, "scenario.affected");
      sc.affected.lo = number(a, "lo", "scenario.affected");
      sc.affected.hi = a.contains("hi") ? number(a, "hi", "scenario.affected") : sc.affected.lo;
      sc.affected.exact_count = a.value("exact_count", false);
    }
  }
  if (j.contains("mu")) {
    const auto& m = j["mu"];
    const auto law = m.is_object() ? m.value("law", std::string{}) : std::string{};
    if (law == "uniform") {
      check_keys(m, {"law", "intervals"}, "scenario.mu");
      sc.mu = UniformMu{parse_intervals(m.at("intervals"), "scenario.mu.intervals")};
    } else if (law == "normal") {
      check_keys(m, {"law", "mean", "sd"}, "scenario.mu");
      sc.mu = NormalMu{number(m, "mean", "scenario.mu"), number(m, "sd", "scenario.mu")};
    } else if (law == "empirical") {
      check_keys(m, {"law", "values", "file"}, "scenario.mu");
      EmpiricalMu e;
      if (m.contains("file")) {
        std::filesystem::path file = m["file"].get<std::string>();
        if (file.is_relative()) file = base / file;
        e.values = read_value_list(file);
      }
      for (const auto& v : m.value("values", json::array())) e.values.push_back(v.get<double>());
      sc.mu = std::move(e);
    } else {
      throw ConfigError("scenario.mu: law must be uniform, normal or empirical");
    }
  }
  if (j.contains("noise")) {
    const auto& nz = j["noise"];
    const auto law = nz.is_object() ? nz.value("law", std::string{}) : std::string{};
    if (law == "gaussian") {
      check_keys(nz, {"law", "sigma2"}, "scenario.noise");
      sc.noise = GaussianNoise{nz.contains("sigma2") ? number(nz, "sigma2", "scenario.noise") : 1.0};
    } else if (law == "student_t") {
      check_keys(nz, {"law", "df", "standardize"}, "scenario.noise");
      sc.noise = StudentTNoise{nz.contains("df") ? number(nz, "df", "scenario.noise") : 15.0, nz.value("standardize", false)};
    } else {
      throw ConfigError("scenario.noise: law must be gaussian or student_t");
    }
  }
  return sc;
}

json scenario_json(const Scenario& sc) {
  json j;
  j["n_target"] = sc.n_target;
  j["d"] = sc.d;
  if (sc.process) j["process"] = process_json(*sc.process);
  if (sc.layout) {
    j["layout"] = {{"starts", sc.layout->starts},
                   {"followed_by_abnormal", sc.layout->followed_by_abnormal},
                   {"intensities", sc.layout->intensities}};
  }
  j["affected"] = {{"lo", sc.affected.lo}, {"hi", sc.affected.hi}, {"exact_count", sc.affected.exact_count}};
  if (const auto* u = std::get_if<UniformMu>(&sc.mu)) j["mu"] = {{"law", "uniform"}, {"intervals", intervals_json(u->support)}};
  if (const auto* nm = std::get_if<NormalMu>(&sc.mu)) j["mu"] = {{"law", "normal"}, {"mean", nm->mean}, {"sd", nm->sd}};
  if (const auto* e = std::get_if<EmpiricalMu>(&sc.mu)) j["mu"] = {{"law", "empirical"}, {"values", e->values}};
  if (const auto* g = std::get_if<GaussianNoise>(&sc.noise)) j["noise"] = {{"law", "gaussian"}, {"sigma2", g->sigma2}};
  if (const auto* t = std::get_if<StudentTNoise>(&sc.noise))
    j["noise"] = {{"law", "student_t"}, {"df", t->df}, {"standardize", t->standardize}};
  return j;
}

RunConfig parse(const json& root, const std::filesystem::path& base) {
  check_keys(root, {"model", "inference", "mcem", "scenario", "seed", "threads"}, "config");
  RunConfig cfg = RunConfig::defaults();

  if (root.contains("model")) {
    const auto& m = root["model"];
    check_keys(m, {"los_normal", "los_abnormal", "pi_n", "p", "sigma2", "mu_prior", "quad_nodes", "quad_rule"}, "model");
    cfg.model.process = parse_process(
        [&] {
          json p = json::object();
          for (const char* key : {"los_normal", "los_abnormal", "pi_n"})
            if (m.contains(key)) p[key] = m[key];
          return p;
        }(),
        "model", cfg.model.process);
    auto& lp = cfg.model.likelihood;
    if (m.contains("p")) {
      lp.p.clear();
      if (m["p"].is_number()) {
        lp.p.push_back(m["p"].get<double>());
      } else if (m["p"].is_array() && !m["p"].empty()) {
        for (const auto& v : m["p"]) {
          if (!v.is_number()) throw ConfigError("model.p: expected numbers");
          lp.p.push_back(v.get<double>());
        }
      } else {
        throw ConfigError("model.p: expected a number or a non-empty list");
      }
    }
    if (m.contains("sigma2")) {
      if (m["sigma2"].is_string() && m["sigma2"].get<std::string>() == "mad") {
        cfg.sigma2_from_data = true;
      } else if (m["sigma2"].is_number()) {
        lp.sigma2 = m["sigma2"].get<double>();
      } else {
        throw ConfigError("model.sigma2: expected a number or \"mad\"");
      }
    }
    if (m.contains("mu_prior")) lp.mu_prior = parse_intervals(m["mu_prior"], "model.mu_prior");
    if (m.contains("quad_nodes")) lp.quad_nodes = integer<std::size_t>(m["quad_nodes"], "model.quad_nodes");
    if (m.contains("quad_rule")) {
      const auto rule = m["quad_rule"].is_string() ? m["quad_rule"].get<std::string>() : std::string{};
      if (rule == "gauss-legendre") {
        lp.rule = QuadratureRule::GaussLegendre;
      } else if (rule == "midpoint") {
        lp.rule = QuadratureRule::Midpoint;
      } else {
        throw ConfigError("model.quad_rule: expected \"gauss-legendre\" or \"midpoint\"");
      }
    }
    if (!(lp.sigma2 > 0.0)) throw ConfigError("model.sigma2 must be positive");
    if (lp.quad_nodes < 2) throw ConfigError("model.quad_nodes must be >= 2");
    for (double pk : lp.p)
      if (!(pk > 0.0 && pk < 1.0)) throw ConfigError("model.p: values must lie in (0, 1)");
  }

  if (root.contains("inference")) {
    const auto& inf = root["inference"];
    check_keys(inf, {"alpha", "samples", "gamma"}, "inference");
    if (inf.contains("alpha")) cfg.inference.alpha = number(inf, "alpha", "inference");
    if (inf.contains("samples")) cfg.inference.samples = integer<std::size_t>(inf["samples"], "inference.samples");
    if (inf.contains("gamma")) cfg.inference.gamma = number(inf, "gamma", "inference");
  }
  if (!(cfg.inference.alpha >= 0.0 && cfg.inference.alpha < 1.0)) throw ConfigError("inference.alpha must lie in [0, 1)");
  if (cfg.inference.samples < 1) throw ConfigError("inference.samples must be >= 1");
  if (!(cfg.inference.gamma > 0.0)) throw ConfigError("inference.gamma must be positive");

  if (root.contains("mcem")) {
    const auto& mc = root["mcem"];
    check_keys(mc, {"max_iters", "samples_schedule", "rel_tol", "fit_pi_n"}, "mcem");
    if (mc.contains("max_iters")) cfg.mcem.max_iters = integer<std::size_t>(mc["max_iters"], "mcem.max_iters");
    if (mc.contains("samples_schedule")) {
      cfg.mcem.samples_schedule.clear();
      for (const auto& v : mc["samples_schedule"])
        cfg.mcem.samples_schedule.push_back(integer<std::size_t>(v, "mcem.samples_schedule"));
    }
    if (mc.contains("rel_tol")) cfg.mcem.rel_tol = number(mc, "rel_tol", "mcem");
    if (mc.contains("fit_pi_n")) {
      if (!mc["fit_pi_n"].is_boolean()) throw ConfigError("mcem.fit_pi_n: expected a boolean");
      cfg.mcem.fit_pi_n = mc["fit_pi_n"].get<bool>();
    }
    cfg.mcem.validate();
  }

  if (root.contains("seed")) cfg.seed = integer<std::uint64_t>(root["seed"], "seed");
  if (root.contains("threads")) cfg.threads = integer<unsigned>(root["threads"], "threads");
  if (root.contains("scenario")) {
    cfg.scenario = parse_scenario(root["scenario"], cfg.model.process, base);
    cfg.resolve_scenario().validate();
  }
  return cfg;
}

}  // namespace

std::string hash_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig RunConfig::defaults() {
  return RunConfig{
      ModelParams{ProcessParams(LosDistribution(NegativeBinomial{10, 0.1}), LosDistribution(NegativeBinomial{15, 0.3}), 0.5),
                  LikelihoodParams{}},
      false, InferenceSettings{}, McemConfig{}, std::nullopt, 1, 0};
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return parse(root, std::filesystem::current_path());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json root;
  try {
    root = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": not valid JSON: " + e.what());
  }
  try {
    return parse(root, std::filesystem::path(path).parent_path());
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string RunConfig::to_json() const {
  json j;
  const auto& lp = model.likelihood;
  json m = process_json(model.process);
  m["p"] = lp.p.size() == 1 ? json(lp.p[0]) : json(lp.p);
  m["sigma2"] = sigma2_from_data ? json("mad") : json(lp.sigma2);
  m["mu_prior"] = intervals_json(lp.mu_prior);
  m["quad_nodes"] = lp.quad_nodes;
  m["quad_rule"] = lp.rule == QuadratureRule::Midpoint ? "midpoint" : "gauss-legendre";
  j["model"] = m;
  j["inference"] = {{"alpha", inference.alpha}, {"samples", inference.samples}, {"gamma", inference.gamma}};
  j["mcem"] = {{"max_iters", mcem.max_iters},
               {"samples_schedule", mcem.samples_schedule},
               {"rel_tol", mcem.rel_tol},
               {"fit_pi_n", mcem.fit_pi_n}};
  if (scenario) j["scenario"] = scenario_json(*scenario);
  j["seed"] = seed;
  j["threads"] = threads;
  return j.dump(2) + "\n";
}

std::string RunConfig::hash() const {
  // Thread count does not affect results, so it is left out of the hash.
  RunConfig copy = *this;
  copy.threads = 0;
  return hash_hex(copy.to_json());
}

ModelParams RunConfig::resolve_model(const DataMatrix& data) const {
  ModelParams out = model;
  if (sigma2_from_data) {
    out.likelihood.sigma2 = estimate_sigma2_mad(data);
    if (!(out.likelihood.sigma2 > 0.0))
      throw InputError("cannot estimate sigma2 from data: median absolute difference is zero");
  }
  out.likelihood.validate(data.d());
  return out;
}

unsigned RunConfig::thread_count() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

Scenario RunConfig::resolve_scenario() const {
  Scenario sc = scenario.value_or(Scenario{});
  sc.seed = seed;
  if (!sc.process && !sc.layout) sc.process = model.process;
  return sc;
}

}  // namespace bard
