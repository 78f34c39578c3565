#pragma once

#include <cstddef>
#include <span>
#include <string_view>

namespace bard::kernels {

// Inputs of the abnormal-segment mixture kernel. For quadrature node m and
// dimension k, with segment sum S_k over a segment of length L:
//
//   acc[m] += logaddexp(log1m_p[k], log_p[k] + slope[m] * S_k - curvature[m] * L)
//
// where slope = mu / sigma^2 and curvature = mu^2 / (2 sigma^2). After the call
// acc[m] = sum_k log(1 + p_k (X_k(mu_m) - 1)).
struct MixtureArgs {
  std::span<const double> sums;      // S_k, size d
  double length;                     // L
  std::span<const double> log_p;     // size d
  std::span<const double> log1m_p;   // size d
  std::span<const double> slope;     // size M
  std::span<const double> curvature; // size M
  std::span<double> acc;             // size M, overwritten
};

using MixtureFn = void (*)(const MixtureArgs&);

// Reference implementation using std::exp / std::log1p.
void mixture_scalar(const MixtureArgs& args);

#if defined(BARD_HAVE_AVX2_KERNEL)
// AVX2 + FMA, four quadrature nodes per lane group; polynomial exp/log1p.
void mixture_avx2(const MixtureArgs& args);
#endif

struct KernelSet {
  std::string_view name;
  MixtureFn mixture;
};

// Best kernel set for the running CPU. BARD_KERNEL=scalar in the environment
// forces the reference path.
const KernelSet& active();
const KernelSet& scalar();
// nullptr when the AVX2 kernel is not compiled in or not supported by the CPU.
const KernelSet* avx2();

}  // namespace bard::kernels
