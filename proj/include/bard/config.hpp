#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bard/filter.hpp"
#include "bard/hyperfit.hpp"
#include "bard/pipeline.hpp"
#include "bard/simulate.hpp"

namespace bard {

// Everything a run needs, loaded from JSON. Unknown keys anywhere are rejected.
//
// {
//   "model": {
//     "los_normal":   {"family": "nbinom", "r": 10, "p": 0.1},
//     "los_abnormal": {"family": "nbinom", "r": 15, "p": 0.3},
//     "pi_n": 0.5,
//     "p": 0.02,                      // or one value per dimension
//     "sigma2": 1.0,                  // or "mad" to estimate from the data
//     "mu_prior": [[-0.7, -0.3], [0.3, 0.7]],
//     "quad_nodes": 128,
//     "quad_rule": "gauss-legendre"   // or "midpoint"
//   },
//   "inference": {"alpha": 1e-4, "samples": 1000, "gamma": 0.3333333333333333},
//   "mcem": {"max_iters": 10, "samples_schedule": [50, 100, 200, 400, 800, 1000],
//            "rel_tol": 0.05, "fit_pi_n": true},
//   "scenario": { ... },             // only used by `simulate`
//   "seed": 1,
//   "threads": 0                     // 0 = all available cores
// }
//
// LOS families: geometric {q}, nbinom {r, p}, uniform {a, b}, poisson {lambda}
// (length 1 + Poisson(lambda)).
struct RunConfig {
  ModelParams model;
  bool sigma2_from_data = false;
  InferenceSettings inference;
  McemConfig mcem;
  std::optional<Scenario> scenario;
  std::uint64_t seed = 1;
  unsigned threads = 0;

  static RunConfig defaults();
  static RunConfig from_json_text(const std::string& text);
  static RunConfig load(const std::string& path);

  // Canonical JSON (sorted keys, all defaults filled in). Loading the output
  // gives back an identical config.
  std::string to_json() const;
  // 16 hex digits; FNV-1a of to_json().
  std::string hash() const;

  // Resolves "mad" and checks p against the dimension count.
  ModelParams resolve_model(const DataMatrix& data) const;
  unsigned thread_count() const;
  // Scenario with the configured seed and, when it has neither its own process
  // nor a fixed layout, the model's process.
  Scenario resolve_scenario() const;
};

std::string hash_hex(std::string_view bytes);

}  // namespace bard
