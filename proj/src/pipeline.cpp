#include "bard/pipeline.hpp"

namespace bard {

Detection detect(const InferenceModel& model, const InferenceSettings& settings, std::uint64_t seed, unsigned threads,
                 bool check_ks) {
  FilterOptions opts;
  opts.alpha = settings.alpha;
  opts.seed = seed;
  opts.check_ks = check_ks;
  return summarise(run_filter(model, opts), model.transitions(), settings, seed, threads);
}

Detection summarise(FilterResult filter, const TransitionModel& transitions, const InferenceSettings& settings,
                    std::uint64_t seed, unsigned threads) {
  Detection out;
  out.filter = std::move(filter);
  out.samples = sample_posterior(out.filter.history, transitions, settings.samples, seed, threads);
  out.summary = marginal_abnormal(out.samples, out.filter.history.n());
  out.estimate = map_segmentation(out.summary, LossSpec(settings.gamma));
  return out;
}

}  // namespace bard
