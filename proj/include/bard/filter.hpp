#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bard/likelihood.hpp"
#include "bard/process.hpp"
#include "bard/rng.hpp"

namespace bard {

struct ModelParams {
  ProcessParams process;
  LikelihoodParams likelihood;
};

// Everything the recursions need for one data set: segment likelihoods and
// tabulated transition hazards up to horizon n.
class InferenceModel {
 public:
  InferenceModel(const DataMatrix& data, const ModelParams& params);
  InferenceModel(const DataMatrix& data, const ModelParams& params, const kernels::KernelSet& kernel);

  const DataMatrix& data() const { return segments_.data(); }
  long n() const { return static_cast<long>(segments_.data().n()); }
  const SegmentModel& segments() const { return segments_; }
  const TransitionModel& transitions() const { return transitions_; }

 private:
  SegmentModel segments_;
  TransitionModel transitions_;
};

// One support point (C_t, B_t) of the filtering distribution.
struct Particle {
  long c;
  SegmentType b;
  double log_prob;
  double log_seg_ml;  // log P_b(c + 1, t)
  std::uint32_t steps_since_refresh = 0;
};

struct FilterState {
  long t = 0;
  // Ordered by (c ascending, Normal before Abnormal).
  std::vector<Particle> particles;
  double log_evidence_increment = 0.0;
};

FilterState filter_init(const InferenceModel& model);
// Advances the filtering distribution from t to t + 1. Throws NumericalError
// if every transition has zero mass.
FilterState filter_step(const FilterState& state, const InferenceModel& model);

// Normal-segment caches are rebuilt from prefix sums after this many extensions.
inline constexpr std::uint32_t kCacheRefreshInterval = 512;

#ifdef NDEBUG
inline constexpr bool kDebugChecks = false;
#else
inline constexpr bool kDebugChecks = true;
#endif

struct SrcOptions {
  double alpha = 0.0;
  // Verify the Kolmogorov-Smirnov distance between the input and the
  // (unnormalised) output is at most alpha; throws NumericalError otherwise.
  bool check_ks = kDebugChecks;
};

// Stratified rejection control. Particles with mass >= alpha are kept as is;
// the rest are visited in order with a single uniform offset and either dropped
// or promoted to mass alpha. Survivors are renormalised. alpha = 0 is the identity.
// When ks_out is given it receives the pre-renormalisation KS distance.
std::vector<Particle> src_prune(std::span<const Particle> particles, const SrcOptions& options, Rng& rng,
                                double* ks_out = nullptr);

// Largest absolute difference of the cumulative masses (in particle order)
// between `before` and `after`; masses in `after` are taken unnormalised.
double ks_distance(std::span<const double> before, std::span<const double> after);

// Compact filter history: for every t the normalised support points.
struct StoredParticle {
  std::int32_t c;
  SegmentType b;
  double log_prob;
};

class FilterHistory {
 public:
  void append(const FilterState& state);
  long n() const { return static_cast<long>(offsets_.size()) - 1; }
  std::span<const StoredParticle> at(long t) const {
    const auto i = static_cast<std::size_t>(t);
    return {particles_.data() + offsets_[i - 1], offsets_[i] - offsets_[i - 1]};
  }
  std::size_t total_particles() const { return particles_.size(); }

  // Raw storage, used by the binary cache.
  const std::vector<std::size_t>& offsets() const { return offsets_; }
  const std::vector<StoredParticle>& particles() const { return particles_; }
  static FilterHistory from_raw(std::vector<std::size_t> offsets, std::vector<StoredParticle> particles);

 private:
  std::vector<std::size_t> offsets_{0};
  std::vector<StoredParticle> particles_;
};

struct FilterOptions {
  double alpha = 1e-4;
  std::uint64_t seed = 0;
  bool check_ks = kDebugChecks;
  bool keep_history = true;
};

struct FilterResult {
  FilterHistory history;
  double log_evidence = 0.0;
  // Pr(B_t = A | y_{1:t}) for t = 1..n (index 0 unused).
  std::vector<double> filtered_abnormal;
  std::size_t max_particles = 0;
  double max_ks = 0.0;
};

// Forward pass over t = 1..n: filter_step followed by src_prune (also at t = 1).
FilterResult run_filter(const InferenceModel& model, const FilterOptions& options);

}  // namespace bard
