#include "bard/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/legendre.hpp>

#include "bard/compensated.hpp"
#include "bard/error.hpp"
#include "bard/logmath.hpp"

namespace bard {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

}  // namespace

MuPrior::MuPrior(std::vector<MuInterval> intervals) : intervals_(std::move(intervals)) {
  if (intervals_.empty()) throw ConfigError("mu prior needs at least one interval");
  std::sort(intervals_.begin(), intervals_.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const auto& iv = intervals_[i];
    if (!(std::isfinite(iv.lo) && std::isfinite(iv.hi) && iv.lo < iv.hi))
      throw ConfigError("mu prior interval needs finite lo < hi");
    if (i > 0 && iv.lo < intervals_[i - 1].hi) throw ConfigError("mu prior intervals overlap");
  }
}

MuPrior MuPrior::split_uniform_cnv() { return MuPrior({{-0.7, -0.3}, {0.3, 0.7}}); }

double MuPrior::total_length() const {
  double total = 0.0;
  for (const auto& iv : intervals_) total += iv.hi - iv.lo;
  return total;
}

bool MuPrior::contains(double mu) const {
  return std::any_of(intervals_.begin(), intervals_.end(),
                     [mu](const auto& iv) { return mu > iv.lo && mu < iv.hi; });
}

double MuPrior::density(double mu) const { return contains(mu) ? 1.0 / total_length() : 0.0; }

QuadratureGrid::QuadratureGrid(std::vector<double> nodes, std::vector<double> weights)
    : nodes_(std::move(nodes)), weights_(std::move(weights)) {
  if (nodes_.empty() || nodes_.size() != weights_.size())
    throw ConfigError("quadrature grid: nodes and weights must be non-empty and equal in size");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!std::isfinite(nodes_[i])) throw ConfigError("quadrature grid: non-finite node");
    if (!(weights_[i] > 0.0)) throw ConfigError("quadrature grid: weights must be positive");
  }
  if (std::abs(compensated_sum(weights_) - 1.0) > 1e-12) throw ConfigError("quadrature grid: weights must sum to 1");
}

namespace {

// Nodes per interval in proportion to interval length; largest-remainder
// rounding, at least one each.
std::vector<std::size_t> split_nodes(const MuPrior& prior, std::size_t count) {
  const auto& ivs = prior.intervals();
  if (count < ivs.size()) throw ConfigError("quadrature grid: fewer nodes than prior intervals");
  const double total = prior.total_length();
  std::vector<std::size_t> per(ivs.size(), 1);
  std::size_t remaining = count - ivs.size();
  std::vector<double> share(ivs.size());
  for (std::size_t i = 0; i < ivs.size(); ++i) share[i] = static_cast<double>(remaining) * (ivs[i].hi - ivs[i].lo) / total;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    const auto whole = static_cast<std::size_t>(std::floor(share[i]));
    per[i] += whole;
    assigned += whole;
    share[i] -= static_cast<double>(whole);
  }
  std::vector<std::size_t> order(ivs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return share[a] > share[b]; });
  for (std::size_t j = 0; assigned < remaining; ++j, ++assigned) ++per[order[j % order.size()]];
  return per;
}

// Gauss-Legendre nodes and weights on [-1, 1], ascending.
void legendre_rule(std::size_t count, std::vector<double>& x, std::vector<double>& w) {
  x.clear();
  w.clear();
  const auto n = static_cast<int>(count);
  for (double z : boost::math::legendre_p_zeros<double>(n)) {
    const double dp = boost::math::legendre_p_prime<double>(n, z);
    const double weight = 2.0 / ((1.0 - z * z) * dp * dp);
    x.push_back(z);
    w.push_back(weight);
    if (z != 0.0) {
      x.push_back(-z);
      w.push_back(weight);
    }
  }
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> xs, ws;
  for (std::size_t i : order) {
    xs.push_back(x[i]);
    ws.push_back(w[i]);
  }
  x = std::move(xs);
  w = std::move(ws);
}

QuadratureGrid normalised(std::vector<double> nodes, std::vector<double> weights) {
  // Rescale away rounding so the constructor's normalisation check is exact.
  const double sum = compensated_sum(weights);
  for (double& w : weights) w /= sum;
  return QuadratureGrid(std::move(nodes), std::move(weights));
}

}  // namespace

QuadratureGrid QuadratureGrid::midpoint(const MuPrior& prior, std::size_t count) {
  const auto& ivs = prior.intervals();
  const auto per = split_nodes(prior, count);
  const double total = prior.total_length();
  std::vector<double> nodes;
  std::vector<double> weights;
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    const double width = (ivs[i].hi - ivs[i].lo) / static_cast<double>(per[i]);
    for (std::size_t j = 0; j < per[i]; ++j) {
      nodes.push_back(ivs[i].lo + (static_cast<double>(j) + 0.5) * width);
      weights.push_back(width / total);
    }
  }
  return normalised(std::move(nodes), std::move(weights));
}

QuadratureGrid QuadratureGrid::gauss_legendre(const MuPrior& prior, std::size_t count) {
  const auto& ivs = prior.intervals();
  const auto per = split_nodes(prior, count);
  const double total = prior.total_length();
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> x, w;
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    legendre_rule(per[i], x, w);
    const double half = 0.5 * (ivs[i].hi - ivs[i].lo);
    const double centre = 0.5 * (ivs[i].hi + ivs[i].lo);
    for (std::size_t j = 0; j < x.size(); ++j) {
      nodes.push_back(centre + half * x[j]);
      weights.push_back(w[j] * half / total);
    }
  }
  return normalised(std::move(nodes), std::move(weights));
}

QuadratureGrid QuadratureGrid::build(const MuPrior& prior, std::size_t count, QuadratureRule rule) {
  return rule == QuadratureRule::Midpoint ? midpoint(prior, count) : gauss_legendre(prior, count);
}

QuadratureGrid QuadratureGrid::point_mass(double mu) { return QuadratureGrid({mu}, {1.0}); }

void LikelihoodParams::validate(std::size_t d) const {
  if (!(sigma2 > 0.0 && std::isfinite(sigma2))) throw ConfigError("sigma2 must be positive and finite");
  if (p.empty() || (p.size() != 1 && p.size() != d))
    throw ConfigError("p must have one entry or one per dimension");
  for (double pk : p)
    if (!(pk > 0.0 && pk < 1.0)) throw ConfigError("p_k must lie in (0, 1)");
  if (quad_nodes < 2) throw ConfigError("quad_nodes must be >= 2");
}

double log_bayes_factor_dim(double seg_sum, double length, double mu, double sigma2) {
  return (mu * seg_sum - 0.5 * mu * mu * length) / sigma2;
}

double log_normal_density(double y, double sigma2) {
  return -0.5 * (kLog2Pi + std::log(sigma2)) - 0.5 * y * y / sigma2;
}

SegmentModel::SegmentModel(const DataMatrix& data, LikelihoodParams params)
    : SegmentModel(data, params, QuadratureGrid::build(params.mu_prior, params.quad_nodes, params.rule)) {}

SegmentModel::SegmentModel(const DataMatrix& data, LikelihoodParams params, QuadratureGrid grid,
                           const kernels::KernelSet& kernel)
    : data_(&data), params_(std::move(params)), grid_(std::move(grid)), kernel_(&kernel) {
  params_.validate(data.d());
  const std::size_t d = data.d();
  log_p_.resize(d);
  log1m_p_.resize(d);
  for (std::size_t k = 0; k < d; ++k) {
    log_p_[k] = std::log(params_.p_for(k));
    log1m_p_[k] = std::log1p(-params_.p_for(k));
  }
  const std::size_t m_count = grid_.size();
  slope_.resize(m_count);
  curvature_.resize(m_count);
  log_weight_.resize(m_count);
  for (std::size_t m = 0; m < m_count; ++m) {
    const double mu = grid_.nodes()[m];
    slope_[m] = mu / params_.sigma2;
    curvature_[m] = 0.5 * mu * mu / params_.sigma2;
    log_weight_[m] = std::log(grid_.weights()[m]);
  }

  const std::size_t n = data.n();
  row_log_normal_.assign(n + 1, 0.0);
  prefix_log_normal_.assign(n + 1, 0.0);
  const double row_const = -0.5 * static_cast<double>(d) * (kLog2Pi + std::log(params_.sigma2));
  CompensatedSum prefix;
  for (std::size_t t = 1; t <= n; ++t) {
    double sq = 0.0;
    for (double y : data.row(static_cast<long>(t))) sq += y * y;
    const double row = row_const - 0.5 * sq / params_.sigma2;
    row_log_normal_[t] = row;
    prefix.add(row);
    prefix_log_normal_[t] = prefix.value();
  }
}

void SegmentModel::check_range(long first, long last) const {
  if (first < 1 || last > static_cast<long>(data_->n()))
    throw DomainError("segment likelihood: indices out of range");
}

double SegmentModel::log_p_normal(long first, long last) const {
  if (last < first) return 0.0;
  check_range(first, last);
  return prefix_log_normal_[static_cast<std::size_t>(last)] - prefix_log_normal_[static_cast<std::size_t>(first - 1)];
}

double SegmentModel::log_p_abnormal(long first, long last) const {
  if (last < first) return 0.0;
  check_range(first, last);
  thread_local std::vector<double> sums;
  thread_local std::vector<double> acc;
  sums.resize(data_->d());
  acc.resize(grid_.size());
  data_->segment_sums(first, last, sums);
  kernel_->mixture({sums, static_cast<double>(last - first + 1), log_p_, log1m_p_, slope_, curvature_, acc});
  for (std::size_t m = 0; m < acc.size(); ++m) acc[m] += log_weight_[m];
  return log_p_normal(first, last) + log_sum_exp(acc);
}

SegmentModel::PredictiveStep SegmentModel::extend(SegmentType b, double cached, long c, long t_next) const {
  if (b == SegmentType::Normal) {
    check_range(t_next, t_next);
    const double ratio = row_log_normal_[static_cast<std::size_t>(t_next)];
    return {ratio, cached + ratio};
  }
  const double fresh = log_p_abnormal(c + 1, t_next);
  return {fresh - cached, fresh};
}

double log_p_normal(const DataMatrix& data, long first, long last, const LikelihoodParams& params) {
  if (last < first) return 0.0;
  if (first < 1 || last > static_cast<long>(data.n())) throw DomainError("log_p_normal: indices out of range");
  params.validate(data.d());
  const double sq = data.segment_sum_squares(first, last);
  const double count = static_cast<double>(last - first + 1) * static_cast<double>(data.d());
  return -0.5 * count * (kLog2Pi + std::log(params.sigma2)) - 0.5 * sq / params.sigma2;
}

double log_p_abnormal(const DataMatrix& data, long first, long last, const LikelihoodParams& params,
                      const QuadratureGrid& grid) {
  return SegmentModel(data, params, grid).log_p_abnormal(first, last);
}

std::pair<double, double> log_predictive_ratio(double cached_log_ml, const DataMatrix& data, long c, long t_next,
                                               SegmentType b, const LikelihoodParams& params,
                                               const QuadratureGrid& grid) {
  const auto step = SegmentModel(data, params, grid).extend(b, cached_log_ml, c, t_next);
  return {step.log_ratio, step.log_seg_ml};
}

double estimate_sigma2_mad(const DataMatrix& data) {
  if (data.n() < 3) throw InputError("sigma2 estimate needs at least three rows");
  std::vector<double> diffs;
  diffs.reserve((data.n() - 1) * data.d());
  for (long t = 2; t <= static_cast<long>(data.n()); ++t)
    for (std::size_t k = 0; k < data.d(); ++k) diffs.push_back(data.value(t, k) - data.value(t - 1, k));
  auto median = [](std::vector<double>& v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
  };
  const double centre = median(diffs);
  for (double& x : diffs) x = std::abs(x - centre);
  const double sd_diff = 1.4826 * median(diffs);
  return sd_diff * sd_diff / 2.0;
}

}  // namespace bard
