#include <cstddef>

#include "avx2_math.hpp"
#include "cell_scalar.hpp"

namespace pharm::kernels {

namespace {

constexpr int kMaxComp = 8;

struct Density {
    __m256d phi, dphi;
};

PHARM_INLINE Density vdensity(__m256d s, double p, double eps2) {
    const __m256d t = _mm256_add_pd(s, simd::set1(eps2));
    if (p == 2.0) return {_mm256_mul_pd(simd::set1(0.5), t), simd::set1(0.5)};
    const __m256d pos = _mm256_cmp_pd(t, _mm256_setzero_pd(), _CMP_GT_OQ);
    const __m256d safe = _mm256_blendv_pd(simd::set1(1.0), t, pos);
    const __m256d pw = simd::exp(_mm256_mul_pd(simd::set1(0.5 * p), simd::log(safe)));
    const __m256d phi = _mm256_and_pd(pos, _mm256_mul_pd(pw, simd::set1(1.0 / p)));
    const __m256d dphi = _mm256_and_pd(pos, _mm256_div_pd(_mm256_mul_pd(simd::set1(0.5), pw), safe));
    return {phi, dphi};
}

PHARM_INLINE void add_to(double* dst, __m256d v) { _mm256_storeu_pd(dst, _mm256_add_pd(_mm256_loadu_pd(dst), v)); }

PHARM_INLINE double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v), hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

}  // namespace

double energy_avx2(const EnergyInput& in, double* grad, double* diag) {
    if (in.ncomp > kMaxComp) return energy_scalar(in, grad, diag);
    const std::size_t nx = static_cast<std::size_t>(in.nx);
    const std::size_t plane = nx * static_cast<std::size_t>(in.ny);
    const int nc = in.ncomp;
    const double inv_h2 = 1.0 / (in.h * in.h);
    const double quarter = 0.25 * in.h * in.h;
    const double eps2 = in.eps * in.eps;
    const double gp[2] = {kGaussLo, kGaussHi};

    __m256d dx0[kMaxComp], dx1[kMaxComp], dy0[kMaxComp], dy1[kMaxComp];
    __m256d a00[kMaxComp], a10[kMaxComp], a01[kMaxComp], a11[kMaxComp];
    double total = 0.0;

    for (int cj = 0; cj + 1 < in.ny; ++cj) {
        const RowRange r = in.rows[cj];
        __m256d vsum = _mm256_setzero_pd();
        double tail = 0.0;
        int ci = r.begin;
        for (; ci + 4 <= r.end; ci += 4) {
            const __m256d w = _mm256_loadu_pd(in.cell_weight + static_cast<std::size_t>(cj) * (nx - 1) + ci);
            const std::size_t n00 = static_cast<std::size_t>(cj) * nx + ci;
            const std::size_t n10 = n00 + 1, n01 = n00 + nx, n11 = n01 + 1;
            for (int c = 0; c < nc; ++c) {
                const double* v = in.values + c * plane;
                const __m256d v00 = _mm256_loadu_pd(v + n00), v10 = _mm256_loadu_pd(v + n10);
                const __m256d v01 = _mm256_loadu_pd(v + n01), v11 = _mm256_loadu_pd(v + n11);
                dx0[c] = _mm256_sub_pd(v10, v00);
                dx1[c] = _mm256_sub_pd(v11, v01);
                dy0[c] = _mm256_sub_pd(v01, v00);
                dy1[c] = _mm256_sub_pd(v11, v10);
                a00[c] = a10[c] = a01[c] = a11[c] = _mm256_setzero_pd();
            }
            __m256d d00 = _mm256_setzero_pd(), d10 = d00, d01 = d00, d11 = d00;
            const __m256d wq = _mm256_mul_pd(w, simd::set1(quarter));
            for (int a = 0; a < 2; ++a) {
                const __m256d xi = simd::set1(gp[a]), xim = simd::set1(1.0 - gp[a]);
                for (int b = 0; b < 2; ++b) {
                    const __m256d eta = simd::set1(gp[b]), etam = simd::set1(1.0 - gp[b]);
                    __m256d s = _mm256_setzero_pd();
                    for (int c = 0; c < nc; ++c) {
                        const __m256d Gx = _mm256_fmadd_pd(etam, dx0[c], _mm256_mul_pd(eta, dx1[c]));
                        const __m256d Gy = _mm256_fmadd_pd(xim, dy0[c], _mm256_mul_pd(xi, dy1[c]));
                        s = _mm256_fmadd_pd(Gx, Gx, s);
                        s = _mm256_fmadd_pd(Gy, Gy, s);
                    }
                    const Density d = vdensity(_mm256_mul_pd(s, simd::set1(inv_h2)), in.p, eps2);
                    vsum = _mm256_fmadd_pd(wq, d.phi, vsum);
                    if (!grad) continue;
                    const __m256d coef = _mm256_mul_pd(_mm256_mul_pd(wq, d.dphi), simd::set1(2.0 * inv_h2));
                    for (int c = 0; c < nc; ++c) {
                        const __m256d Gx =
                            _mm256_mul_pd(coef, _mm256_fmadd_pd(etam, dx0[c], _mm256_mul_pd(eta, dx1[c])));
                        const __m256d Gy =
                            _mm256_mul_pd(coef, _mm256_fmadd_pd(xim, dy0[c], _mm256_mul_pd(xi, dy1[c])));
                        a00[c] = _mm256_sub_pd(a00[c], _mm256_fmadd_pd(etam, Gx, _mm256_mul_pd(xim, Gy)));
                        a10[c] = _mm256_add_pd(a10[c], _mm256_fmsub_pd(etam, Gx, _mm256_mul_pd(xi, Gy)));
                        a01[c] = _mm256_add_pd(a01[c], _mm256_fmsub_pd(xim, Gy, _mm256_mul_pd(eta, Gx)));
                        a11[c] = _mm256_add_pd(a11[c], _mm256_fmadd_pd(eta, Gx, _mm256_mul_pd(xi, Gy)));
                    }
                    if (diag) {
                        const double e0 = (1.0 - gp[b]) * (1.0 - gp[b]), e1 = gp[b] * gp[b];
                        const double x0 = (1.0 - gp[a]) * (1.0 - gp[a]), x1 = gp[a] * gp[a];
                        d00 = _mm256_fmadd_pd(coef, simd::set1(e0 + x0), d00);
                        d10 = _mm256_fmadd_pd(coef, simd::set1(e0 + x1), d10);
                        d01 = _mm256_fmadd_pd(coef, simd::set1(e1 + x0), d01);
                        d11 = _mm256_fmadd_pd(coef, simd::set1(e1 + x1), d11);
                    }
                }
            }
            if (grad) {
                for (int c = 0; c < nc; ++c) {
                    double* g = grad + c * plane;
                    add_to(g + n00, a00[c]);
                    add_to(g + n10, a10[c]);
                    add_to(g + n01, a01[c]);
                    add_to(g + n11, a11[c]);
                }
            }
            if (diag) {
                add_to(diag + n00, d00);
                add_to(diag + n10, d10);
                add_to(diag + n01, d01);
                add_to(diag + n11, d11);
            }
        }
        for (; ci < r.end; ++ci) {
            const double w = in.cell_weight[static_cast<std::size_t>(cj) * (nx - 1) + ci];
            if (w == 0.0) continue;
            tail += detail::cell_energy(in, plane, static_cast<std::size_t>(cj) * nx + ci, w, grad, diag);
        }
        total += hsum(vsum) + tail;
    }
    return total;
}

}  // namespace pharm::kernels
