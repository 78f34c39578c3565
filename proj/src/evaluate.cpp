#include "bard/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bard/error.hpp"
#include "bard/rng.hpp"

namespace bard {

double dissimilarity(const Interval& truth, std::span<const Interval> estimated) {
  if (truth.length() < 1) throw DomainError("dissimilarity: empty true segment");
  double best = 1.0;
  const double truth_len = static_cast<double>(truth.length());
  for (const auto& e : estimated) {
    const long inter = overlap(truth, e);
    if (inter == 0) continue;
    const double d = 1.0 - static_cast<double>(inter) / std::sqrt(static_cast<double>(e.length()) * truth_len);
    best = std::min(best, std::max(0.0, d));
  }
  return best;
}

DetectionCounts tp_fp(std::span<const Interval> truth, std::span<const Interval> estimated) {
  DetectionCounts out;
  for (const auto& t : truth)
    if (std::any_of(estimated.begin(), estimated.end(), [&](const Interval& e) { return overlap(t, e) > 0; }))
      ++out.detected;
  for (const auto& e : estimated)
    if (std::none_of(truth.begin(), truth.end(), [&](const Interval& t) { return overlap(t, e) > 0; }))
      ++out.false_positives;
  return out;
}

std::vector<CalibrationBin> calibration(const PosteriorSummary& summary, const std::vector<bool>& truth_abnormal,
                                        std::size_t bins) {
  if (bins < 2) throw DomainError("calibration: need at least two bins");
  std::vector<CalibrationBin> out(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    out[i].lo = static_cast<double>(i) / static_cast<double>(bins);
    out[i].hi = static_cast<double>(i + 1) / static_cast<double>(bins);
  }
  accumulate_calibration(out, summary, truth_abnormal);
  return out;
}

void accumulate_calibration(std::vector<CalibrationBin>& bins, const PosteriorSummary& summary,
                            const std::vector<bool>& truth_abnormal) {
  const long n = summary.n();
  if (static_cast<long>(truth_abnormal.size()) != n + 1)
    throw DomainError("calibration: truth labels and marginals differ in length");
  const auto count = bins.size();
  for (long t = 1; t <= n; ++t) {
    const double p = std::clamp(summary.marginal_abnormal[static_cast<std::size_t>(t)], 0.0, 1.0);
    auto idx = static_cast<std::size_t>(p * static_cast<double>(count));
    if (idx >= count) idx = count - 1;
    ++bins[idx].count;
    if (truth_abnormal[static_cast<std::size_t>(t)]) ++bins[idx].abnormal;
  }
}

double consistency(std::span<const Interval> a, std::span<const Interval> b) {
  if (a.empty() && b.empty()) return 0.0;
  auto mean_d = [](std::span<const Interval> from, std::span<const Interval> to) {
    if (from.empty()) return 1.0;
    double total = 0.0;
    for (const auto& x : from) total += dissimilarity(x, to);
    return total / static_cast<double>(from.size());
  };
  return 0.5 * (mean_d(a, b) + mean_d(b, a));
}

double EvalReport::detection_proportion() const {
  return true_segments ? static_cast<double>(detected) / static_cast<double>(true_segments)
                       : std::numeric_limits<double>::quiet_NaN();
}

double EvalReport::mean_d_detected() const {
  double total = 0.0;
  std::size_t count = 0;
  for (double d : d_values) {
    if (d < 1.0) {
      total += d;
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

EvalReport evaluate_segmentation(std::span<const Interval> truth, std::span<const Interval> estimated) {
  EvalReport report;
  report.true_segments = truth.size();
  report.estimated_segments = estimated.size();
  const auto counts = tp_fp(truth, estimated);
  report.detected = counts.detected;
  report.false_positives = counts.false_positives;
  for (const auto& t : truth) report.d_values.push_back(dissimilarity(t, estimated));
  return report;
}

std::pair<double, double> bootstrap_mean_ci(std::span<const double> values, std::size_t reps, double level,
                                            std::uint64_t seed) {
  if (values.empty() || reps == 0) throw DomainError("bootstrap: need values and replicates");
  if (!(level > 0.0 && level < 1.0)) throw DomainError("bootstrap: level must lie in (0, 1)");
  Rng rng = make_stream(seed, "bootstrap");
  std::vector<double> means(reps);
  const std::size_t n = values.size();
  for (auto& m : means) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += values[static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n))];
    m = total / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double tail = 0.5 * (1.0 - level);
  auto pick = [&](double q) {
    const auto idx = static_cast<std::size_t>(std::clamp(q * static_cast<double>(reps - 1), 0.0, static_cast<double>(reps - 1)));
    return means[idx];
  };
  return {pick(tail), pick(1.0 - tail)};
}

}  // namespace bard
