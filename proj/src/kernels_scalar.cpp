#include <algorithm>
#include <cmath>

#include "bard/kernels.hpp"

namespace bard::kernels {

void mixture_scalar(const MixtureArgs& args) {
  const std::size_t d = args.sums.size();
  const std::size_t m_count = args.acc.size();
  std::fill(args.acc.begin(), args.acc.end(), 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    const double s = args.sums[k];
    const double a = args.log1m_p[k];
    const double lp = args.log_p[k];
    for (std::size_t m = 0; m < m_count; ++m) {
      const double z = lp + args.slope[m] * s - args.curvature[m] * args.length;
      const double hi = std::max(a, z);
      args.acc[m] += hi + std::log1p(std::exp(-std::abs(a - z)));
    }
  }
}

}  // namespace bard::kernels
