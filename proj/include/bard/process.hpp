#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "bard/los.hpp"

namespace bard {

enum class SegmentType : std::uint8_t { Normal = 0, Abnormal = 1 };

constexpr std::string_view to_string(SegmentType b) { return b == SegmentType::Normal ? "N" : "A"; }

// X_t = (C_t, B_t): end of the previous segment (0 for the first segment) and
// the type of the current one.
struct HiddenState {
  long c;
  SegmentType b;
};

struct ProcessParams {
  LosDistribution los_normal;
  LosDistribution los_abnormal;
  // Probability that an abnormal segment is followed by a normal one.
  double pi_n;

  ProcessParams(LosDistribution normal, LosDistribution abnormal, double pi_n);

  double pi_a() const { return 1.0 - pi_n; }
  const LosDistribution& los(SegmentType b) const {
    return b == SegmentType::Normal ? los_normal : los_abnormal;
  }
};

// Stationary Pr(B_1 = b); C_1 is always 0.
double initial_prob(SegmentType b, const ProcessParams& params);

// Pr(X_{t+1} = to | X_t = from). Evaluated directly from the LOS survival
// functions; the filter uses the tabulated TransitionModel instead.
double transition_prob(const HiddenState& from, const HiddenState& to, long t, const ProcessParams& params);

// log Pr(new segment of type `to` | previous segment of type `from` ends).
double log_type_factor(SegmentType from, SegmentType to, const ProcessParams& params);

// Per-type hazard tables for elapsed segment lengths 1..horizon, for both the
// first segment (stationary forward-recurrence law) and later segments.
class TransitionModel {
 public:
  TransitionModel(const ProcessParams& params, long horizon);

  const ProcessParams& params() const { return params_; }
  long horizon() const { return horizon_; }

  // The current segment started after `c` and has lasted `elapsed` steps.
  double log_continue(SegmentType b, long elapsed, bool first) const {
    return table(b, first).log_continue[static_cast<std::size_t>(elapsed)];
  }
  double log_hazard(SegmentType b, long elapsed, bool first) const {
    return table(b, first).log_hazard[static_cast<std::size_t>(elapsed)];
  }
  // log Pr(C_{t+1} = t, B_{t+1} = to | C_t = c, B_t = from).
  double log_birth(SegmentType from, SegmentType to, long elapsed, bool first) const {
    return log_hazard(from, elapsed, first) + log_factor_[index(from)][index(to)];
  }
  double log_factor(SegmentType from, SegmentType to) const { return log_factor_[index(from)][index(to)]; }
  double log_initial(SegmentType b) const { return log_initial_[index(b)]; }

 private:
  struct Table {
    std::vector<double> log_continue;
    std::vector<double> log_hazard;
  };

  static std::size_t index(SegmentType b) { return static_cast<std::size_t>(b); }
  const Table& table(SegmentType b, bool first) const { return tables_[index(b)][first ? 1 : 0]; }

  static Table build(const LosDistribution& dist, long horizon, bool first);

  ProcessParams params_;
  long horizon_;
  Table tables_[2][2];
  double log_factor_[2][2];
  double log_initial_[2];
};

}  // namespace bard
