// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "bard/kernels.hpp"

namespace bard::kernels {
namespace {

// exp(x) for x <= 0 (Cephes rational approximation, ~1 ulp). Inputs below
// -708 are clamped; the result there is < 1e-307 and only ever added to 1.
inline __m256d exp_nonpositive(__m256d x) {
  const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
  const __m256d c1 = _mm256_set1_pd(6.93145751953125E-1);
  const __m256d c2 = _mm256_set1_pd(1.42860682030941723212E-6);

  x = _mm256_max_pd(x, _mm256_set1_pd(-708.0));
  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  x = _mm256_fnmadd_pd(n, c1, x);
  x = _mm256_fnmadd_pd(n, c2, x);

  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, xx, _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, x);
  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, xx, _mm256_set1_pd(2.00000000000000000009E0));
  const __m256d r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), _mm256_div_pd(p, _mm256_sub_pd(q, p)),
                                    _mm256_set1_pd(1.0));

  // 2^n through the exponent field; n lies in [-1022, 0].
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  __m256i bits = _mm256_cvtepi32_epi64(n32);
  bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
  bits = _mm256_slli_epi64(bits, 52);
  return _mm256_mul_pd(r, _mm256_castsi256_pd(bits));
}

// log(1 + u) for u in [0, 1] (Cephes log rational approximation on
// [sqrt(1/2) - 1, sqrt(2) - 1]). u is exact, so small arguments keep full
// relative precision.
inline __m256d log1p_unit(__m256d u) {
  const __m256d big = _mm256_cmp_pd(u, _mm256_set1_pd(0.41421356237309504880), _CMP_GE_OQ);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d x = _mm256_blendv_pd(u, _mm256_fmsub_pd(u, half, half), big);
  const __m256d e = _mm256_and_pd(big, _mm256_set1_pd(1.0));

  __m256d p = _mm256_set1_pd(1.01875663804580931796E-4);
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(4.97494994976747001425E-1));
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(4.70579119878881725854E0));
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(1.44989225341610930846E1));
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(1.79368678507819816313E1));
  p = _mm256_fmadd_pd(p, x, _mm256_set1_pd(7.70838733755885391666E0));
  __m256d q = _mm256_add_pd(x, _mm256_set1_pd(1.12873587189167450590E1));
  q = _mm256_fmadd_pd(q, x, _mm256_set1_pd(4.52279145837532221105E1));
  q = _mm256_fmadd_pd(q, x, _mm256_set1_pd(8.29875266912776603211E1));
  q = _mm256_fmadd_pd(q, x, _mm256_set1_pd(7.11544750618563894466E1));
  q = _mm256_fmadd_pd(q, x, _mm256_set1_pd(2.31251620126765340583E1));

  const __m256d z = _mm256_mul_pd(x, x);
  __m256d y = _mm256_mul_pd(x, _mm256_mul_pd(z, _mm256_div_pd(p, q)));
  y = _mm256_fnmadd_pd(e, _mm256_set1_pd(2.121944400546905827679E-4), y);
  y = _mm256_fnmadd_pd(z, half, y);
  __m256d r = _mm256_add_pd(x, y);
  return _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), r);
}

inline __m256d log_add_exp_step(__m256d a, __m256d z) {
  const __m256d sign_mask = _mm256_set1_pd(-0.0);
  const __m256d hi = _mm256_max_pd(a, z);
  const __m256d neg_abs = _mm256_or_pd(_mm256_sub_pd(a, z), sign_mask);
  return _mm256_add_pd(hi, log1p_unit(exp_nonpositive(neg_abs)));
}

}  // namespace

void mixture_avx2(const MixtureArgs& args) {
  const std::size_t d = args.sums.size();
  const std::size_t m_count = args.acc.size();
  const std::size_t m_vec = m_count & ~std::size_t{7};
  const __m256d len = _mm256_set1_pd(args.length);

  for (std::size_t m = 0; m < m_vec; m += 8) {
    const __m256d slope0 = _mm256_loadu_pd(args.slope.data() + m);
    const __m256d slope1 = _mm256_loadu_pd(args.slope.data() + m + 4);
    const __m256d shift0 = _mm256_mul_pd(_mm256_loadu_pd(args.curvature.data() + m), len);
    const __m256d shift1 = _mm256_mul_pd(_mm256_loadu_pd(args.curvature.data() + m + 4), len);
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    for (std::size_t k = 0; k < d; ++k) {
      const __m256d s = _mm256_set1_pd(args.sums[k]);
      const __m256d a = _mm256_set1_pd(args.log1m_p[k]);
      const __m256d lp = _mm256_set1_pd(args.log_p[k]);
      const __m256d z0 = _mm256_fmadd_pd(slope0, s, _mm256_sub_pd(lp, shift0));
      const __m256d z1 = _mm256_fmadd_pd(slope1, s, _mm256_sub_pd(lp, shift1));
      acc0 = _mm256_add_pd(acc0, log_add_exp_step(a, z0));
      acc1 = _mm256_add_pd(acc1, log_add_exp_step(a, z1));
    }
    _mm256_storeu_pd(args.acc.data() + m, acc0);
    _mm256_storeu_pd(args.acc.data() + m + 4, acc1);
  }

  if (m_vec < m_count) {
    std::fill(args.acc.begin() + static_cast<std::ptrdiff_t>(m_vec), args.acc.end(), 0.0);
    for (std::size_t k = 0; k < d; ++k) {
      const double s = args.sums[k];
      const double a = args.log1m_p[k];
      for (std::size_t m = m_vec; m < m_count; ++m) {
        const double z = args.log_p[k] + args.slope[m] * s - args.curvature[m] * args.length;
        args.acc[m] += std::max(a, z) + std::log1p(std::exp(-std::abs(a - z)));
      }
    }
  }
}

}  // namespace bard::kernels
