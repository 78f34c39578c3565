#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "bard/data.hpp"
#include "bard/kernels.hpp"
#include "bard/process.hpp"

namespace bard {

struct MuInterval {
  double lo;
  double hi;
};

// Uniform prior on a union of disjoint open intervals.
class MuPrior {
 public:
  explicit MuPrior(std::vector<MuInterval> intervals);

  // (-0.7, -0.3) U (0.3, 0.7)
  static MuPrior split_uniform_cnv();

  const std::vector<MuInterval>& intervals() const { return intervals_; }
  double total_length() const;
  double density(double mu) const;
  bool contains(double mu) const;

 private:
  std::vector<MuInterval> intervals_;
};

enum class QuadratureRule { GaussLegendre, Midpoint };

// Nodes and weights for integrating against the mu prior. Weights absorb the
// prior density and sum to one.
class QuadratureGrid {
 public:
  // Throws ConfigError unless weights are positive and sum to 1 within 1e-12.
  QuadratureGrid(std::vector<double> nodes, std::vector<double> weights);

  // Composite midpoint rule; `count` nodes split across the intervals in
  // proportion to their length (largest-remainder rounding, at least one each).
  static QuadratureGrid midpoint(const MuPrior& prior, std::size_t count);
  // Gauss-Legendre rule on each interval, nodes split as for midpoint().
  static QuadratureGrid gauss_legendre(const MuPrior& prior, std::size_t count);
  static QuadratureGrid build(const MuPrior& prior, std::size_t count, QuadratureRule rule);
  static QuadratureGrid point_mass(double mu);

  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

struct LikelihoodParams {
  double sigma2 = 1.0;
  // Per-dimension abnormality probabilities; a single entry is broadcast.
  std::vector<double> p{0.04};
  MuPrior mu_prior = MuPrior::split_uniform_cnv();
  std::size_t quad_nodes = 128;
  QuadratureRule rule = QuadratureRule::GaussLegendre;

  // Throws ConfigError on invalid values or a p vector whose size is neither 1 nor d.
  void validate(std::size_t d) const;
  double p_for(std::size_t k) const { return p.size() == 1 ? p[0] : p[k]; }
};

// log of the per-dimension likelihood ratio prod_i N(y_i; mu, s2) / N(y_i; 0, s2)
// for a segment of `length` points with sum `seg_sum`.
double log_bayes_factor_dim(double seg_sum, double length, double mu, double sigma2);

// log N(y; 0, sigma2)
double log_normal_density(double y, double sigma2);

// Segment marginal likelihoods for one data set. Construction precomputes
// per-row normal log densities and the quadrature constants; evaluation is
// O(1) for normal segments and O(d * M) for abnormal ones.
class SegmentModel {
 public:
  SegmentModel(const DataMatrix& data, LikelihoodParams params, QuadratureGrid grid,
               const kernels::KernelSet& kernel = kernels::active());
  SegmentModel(const DataMatrix& data, LikelihoodParams params);

  const DataMatrix& data() const { return *data_; }
  const LikelihoodParams& params() const { return params_; }
  const QuadratureGrid& grid() const { return grid_; }

  // log P_N(first, last); 0 when last < first.
  double log_p_normal(long first, long last) const;
  // log P_A(first, last); 0 when last < first.
  double log_p_abnormal(long first, long last) const;
  double log_p(SegmentType b, long first, long last) const {
    return b == SegmentType::Normal ? log_p_normal(first, last) : log_p_abnormal(first, last);
  }
  // sum_k log N(y_{t,k}; 0, sigma2)
  double log_normal_row(long t) const { return row_log_normal_[static_cast<std::size_t>(t)]; }

  struct PredictiveStep {
    double log_ratio;   // log P_b(c+1, t_next) - cached
    double log_seg_ml;  // log P_b(c+1, t_next)
  };
  // Extends a segment starting at c+1 from t_next-1 to t_next. `cached` must be
  // log P_b(c+1, t_next-1) for this model; this is not checked. Normal segments
  // update the cache incrementally, abnormal ones recompute it from prefix sums.
  PredictiveStep extend(SegmentType b, double cached, long c, long t_next) const;

 private:
  void check_range(long first, long last) const;

  const DataMatrix* data_;
  LikelihoodParams params_;
  QuadratureGrid grid_;
  const kernels::KernelSet* kernel_;
  std::vector<double> log_p_;
  std::vector<double> log1m_p_;
  std::vector<double> slope_;
  std::vector<double> curvature_;
  std::vector<double> log_weight_;
  std::vector<double> row_log_normal_;     // index t = 1..n
  std::vector<double> prefix_log_normal_;  // compensated prefix of row_log_normal_
};

// Free-function forms of the segment likelihoods.
double log_p_normal(const DataMatrix& data, long first, long last, const LikelihoodParams& params);
double log_p_abnormal(const DataMatrix& data, long first, long last, const LikelihoodParams& params,
                      const QuadratureGrid& grid);
std::pair<double, double> log_predictive_ratio(double cached_log_ml, const DataMatrix& data, long c, long t_next,
                                               SegmentType b, const LikelihoodParams& params,
                                               const QuadratureGrid& grid);

// Robust noise variance estimate: (1.4826 * MAD of first differences)^2 / 2,
// pooled over all dimensions.
double estimate_sigma2_mad(const DataMatrix& data);

}  // namespace bard
