#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bard {

// n x d observations, time-major. Time indices in the public API are 1-based
// (t = 1..n) to match segment boundaries; dimension indices are 0-based.
// Prefix sums are accumulated with Neumaier compensation so that segment sums
// stay accurate for long series.
class DataMatrix {
 public:
  DataMatrix(std::size_t n, std::size_t d, std::vector<double> values);

  std::size_t n() const { return n_; }
  std::size_t d() const { return d_; }

  double value(long t, std::size_t k) const { return values_[(static_cast<std::size_t>(t) - 1) * d_ + k]; }
  std::span<const double> row(long t) const {
    return {values_.data() + (static_cast<std::size_t>(t) - 1) * d_, d_};
  }
  std::span<const double> values() const { return values_; }

  // prefix_sum(i)[k] = sum_{u <= i} y[u][k]; prefix_sum(0) is all zeros.
  std::span<const double> prefix_sum(long i) const {
    return {prefix_.data() + static_cast<std::size_t>(i) * d_, d_};
  }
  // Per-dimension sums over times first..last (inclusive) written into out.
  void segment_sums(long first, long last, std::span<double> out) const;
  // sum over times first..last and all dimensions of y^2.
  double segment_sum_squares(long first, long last) const;

 private:
  std::size_t n_;
  std::size_t d_;
  std::vector<double> values_;
  std::vector<double> prefix_;      // (n + 1) x d
  std::vector<double> prefix_sq_;   // n + 1
};

}  // namespace bard
