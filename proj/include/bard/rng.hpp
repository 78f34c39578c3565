#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bard {

using Rng = std::mt19937_64;

// All randomness flows from one master seed. Each consumer asks for a named
// stream (optionally indexed, e.g. one per posterior trajectory) so components
// can be rerun independently and still reproduce the same draws.
//
// Stream names in use:
//   "src"             stratified rejection control, one uniform per step
//   "backward"        posterior trajectories, indexed by sample number
//   "simulate.hidden" segment layout
//   "simulate.data"   observations
//   "mcem"            E-step seeds, indexed by iteration
//   "replicate"       per-replicate master seeds, indexed by replicate
std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

Rng make_stream(std::uint64_t master, std::string_view stream, std::uint64_t index = 0);

// Uniform on [0, 1) with 53 random bits; independent of the standard library's
// distribution implementations.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on the open interval (0, 1).
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace bard
