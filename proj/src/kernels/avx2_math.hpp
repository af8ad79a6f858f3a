#pragma once

// Double-precision exp/log on __m256d, fdlibm polynomials.

#if !defined(__AVX2__) || !defined(__FMA__)
#error "avx2_math.hpp needs -mavx2 -mfma"
#endif

#include <immintrin.h>

#if defined(__GNUC__)
#define PHARM_INLINE inline __attribute__((always_inline))
#else
#define PHARM_INLINE inline
#endif

namespace pharm::kernels::simd {

PHARM_INLINE __m256d set1(double a) { return _mm256_set1_pd(a); }

// x > 0, finite, normal
PHARM_INLINE __m256d log(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);
    // exponent field as double: or-in 2^52 and subtract
    const __m256i ebits = _mm256_or_si256(_mm256_srli_epi64(bits, 52), _mm256_castpd_si256(set1(4503599627370496.0)));
    __m256d k = _mm256_sub_pd(_mm256_castsi256_pd(ebits), set1(4503599627370496.0 + 1023.0));
    __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000fffffffffffffLL)),
                                                    _mm256_set1_epi64x(0x3ff0000000000000LL)));
    const __m256d big = _mm256_cmp_pd(m, set1(1.41421356237309504880), _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(m, set1(0.5)), big);
    k = _mm256_add_pd(k, _mm256_and_pd(big, set1(1.0)));

    const __m256d f = _mm256_sub_pd(m, set1(1.0));
    const __m256d s = _mm256_div_pd(f, _mm256_add_pd(set1(2.0), f));
    const __m256d z = _mm256_mul_pd(s, s);
    const __m256d w = _mm256_mul_pd(z, z);
    __m256d t1 = _mm256_fmadd_pd(w, set1(1.531383769920937332e-01), set1(2.222219843214978396e-01));
    t1 = _mm256_fmadd_pd(w, t1, set1(3.999999999940941908e-01));
    t1 = _mm256_mul_pd(w, t1);
    __m256d t2 = _mm256_fmadd_pd(w, set1(1.479819860511658591e-01), set1(1.818357216161805012e-01));
    t2 = _mm256_fmadd_pd(w, t2, set1(2.857142874366239149e-01));
    t2 = _mm256_fmadd_pd(w, t2, set1(6.666666666666735130e-01));
    t2 = _mm256_mul_pd(z, t2);
    const __m256d R = _mm256_add_pd(t1, t2);
    const __m256d hfsq = _mm256_mul_pd(set1(0.5), _mm256_mul_pd(f, f));
    // k*ln2_hi - ((hfsq - (s*(hfsq+R) + k*ln2_lo)) - f)
    __m256d inner = _mm256_fmadd_pd(k, set1(1.90821492927058770002e-10), _mm256_mul_pd(s, _mm256_add_pd(hfsq, R)));
    inner = _mm256_sub_pd(_mm256_sub_pd(hfsq, inner), f);
    return _mm256_fmsub_pd(k, set1(6.93147180369123816490e-01), inner);
}

// |x| < 700
PHARM_INLINE __m256d exp(__m256d x) {
    x = _mm256_max_pd(_mm256_min_pd(x, set1(700.0)), set1(-700.0));
    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, set1(1.44269504088896338700)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, set1(6.93147180369123816490e-01), x);
    r = _mm256_fnmadd_pd(n, set1(1.90821492927058770002e-10), r);
    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d P = _mm256_fmadd_pd(rr, set1(4.13813679705723846039e-08), set1(-1.65339022054652515390e-06));
    P = _mm256_fmadd_pd(rr, P, set1(6.61375632143793436117e-05));
    P = _mm256_fmadd_pd(rr, P, set1(-2.77777777770155933842e-03));
    P = _mm256_fmadd_pd(rr, P, set1(1.66666666666666019037e-01));
    const __m256d c = _mm256_fnmadd_pd(rr, P, r);
    // 1 - ((r*c)/(c-2) - r)
    const __m256d q = _mm256_div_pd(_mm256_mul_pd(r, c), _mm256_sub_pd(c, set1(2.0)));
    const __m256d y = _mm256_sub_pd(set1(1.0), _mm256_sub_pd(q, r));
    // 2^n through the exponent field
    const __m256i ni = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, set1(6755399441055744.0))),
                                        _mm256_castpd_si256(set1(6755399441055744.0)));
    const __m256i scale = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
    return _mm256_mul_pd(y, _mm256_castsi256_pd(scale));
}

}  // namespace pharm::kernels::simd
