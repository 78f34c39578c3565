#include "bard/data.hpp"

#include <cmath>
#include <string>

#include "bard/compensated.hpp"
#include "bard/error.hpp"

namespace bard {

DataMatrix::DataMatrix(std::size_t n, std::size_t d, std::vector<double> values)
    : n_(n), d_(d), values_(std::move(values)) {
  if (n_ == 0 || d_ == 0) throw InputError("data matrix must have at least one row and one column");
  if (values_.size() != n_ * d_) throw InputError("data matrix size does not match n x d");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw InputError("non-finite value at row " + std::to_string(i / d_ + 1) + ", column " +
                       std::to_string(i % d_ + 1));
  }

  prefix_.assign((n_ + 1) * d_, 0.0);
  prefix_sq_.assign(n_ + 1, 0.0);
  std::vector<CompensatedSum> acc(d_);
  CompensatedSum acc_sq;
  for (std::size_t i = 1; i <= n_; ++i) {
    const double* y = values_.data() + (i - 1) * d_;
    double* out = prefix_.data() + i * d_;
    for (std::size_t k = 0; k < d_; ++k) {
      acc[k].add(y[k]);
      out[k] = acc[k].value();
      acc_sq.add(y[k] * y[k]);
    }
    prefix_sq_[i] = acc_sq.value();
  }
}

void DataMatrix::segment_sums(long first, long last, std::span<double> out) const {
  const auto hi = prefix_sum(last);
  const auto lo = prefix_sum(first - 1);
  for (std::size_t k = 0; k < d_; ++k) out[k] = hi[k] - lo[k];
}

double DataMatrix::segment_sum_squares(long first, long last) const {
  return prefix_sq_[static_cast<std::size_t>(last)] - prefix_sq_[static_cast<std::size_t>(first - 1)];
}

}  // namespace bard
