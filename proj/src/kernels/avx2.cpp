// Compiled with -mavx2 -mfma; only called after a CPUID check.

#include <immintrin.h>


#include "qmfs/kernels.hpp"

namespace qmfs::kernels::detail {

void lorentzian_sum_avx2(double floor, std::span<const Lorentzian> peaks,
                         std::span<const double> omega, std::span<double> out) {
    const std::size_t n = omega.size();
    const std::size_t vec_end = n - n % 4;
    const __m256d vfloor = _mm256_set1_pd(floor);
    for (std::size_t i = 0; i < vec_end; i += 4) {
        const __m256d w = _mm256_loadu_pd(omega.data() + i);
        __m256d acc = vfloor;
        for (const auto& p : peaks) {
            const __m256d d = _mm256_sub_pd(w, _mm256_set1_pd(p.center));
            const __m256d den = _mm256_fmadd_pd(d, d, _mm256_set1_pd(0.25 * p.fwhm * p.fwhm));
            acc = _mm256_add_pd(acc, _mm256_div_pd(_mm256_set1_pd(p.area * p.fwhm), den));
        }
        _mm256_storeu_pd(out.data() + i, acc);
    }
    lorentzian_sum_scalar(floor, peaks, omega.subspan(vec_end), out.subspan(vec_end));
}

void rational_psd_avx2(const RationalPsd& psd, std::span<const double> omega, std::span<double> out) {
    constexpr std::size_t max_poles = 16;
    const std::size_t m = psd.poles.size();
    if (m > max_poles) {
        rational_psd_scalar(psd, omega, out);
        return;
    }
    const std::size_t n = omega.size();
    const std::size_t vec_end = n - n % 4;
    __m256d inv_re[max_poles];
    __m256d inv_im[max_poles];
    for (std::size_t i = 0; i < vec_end; i += 4) {
        const __m256d w = _mm256_loadu_pd(omega.data() + i);
        // 1 / (-i w - lambda) = (a - i b) / (a^2 + b^2), a = -Re lambda, b = -w - Im lambda
        for (std::size_t k = 0; k < m; ++k) {
            const __m256d a = _mm256_set1_pd(-psd.poles[k].real());
            const __m256d b = _mm256_sub_pd(_mm256_set1_pd(-psd.poles[k].imag()), w);
            const __m256d den = _mm256_fmadd_pd(a, a, _mm256_mul_pd(b, b));
            const __m256d rden = _mm256_div_pd(_mm256_set1_pd(1.0), den);
            inv_re[k] = _mm256_mul_pd(a, rden);
            inv_im[k] = _mm256_mul_pd(_mm256_sub_pd(_mm256_setzero_pd(), b), rden);
        }
        __m256d acc = _mm256_set1_pd(psd.offset);
        for (std::size_t t = 0; t < psd.terms(); ++t) {
            __m256d h_re = _mm256_set1_pd(psd.direct[t]);
            __m256d h_im = _mm256_setzero_pd();
            const auto* r = psd.residues.data() + t * m;
            for (std::size_t k = 0; k < m; ++k) {
                const __m256d rr = _mm256_set1_pd(r[k].real());
                const __m256d ri = _mm256_set1_pd(r[k].imag());
                h_re = _mm256_fmadd_pd(rr, inv_re[k], h_re);
                h_re = _mm256_fnmadd_pd(ri, inv_im[k], h_re);
                h_im = _mm256_fmadd_pd(rr, inv_im[k], h_im);
                h_im = _mm256_fmadd_pd(ri, inv_re[k], h_im);
            }
            const __m256d mag = _mm256_fmadd_pd(h_re, h_re, _mm256_mul_pd(h_im, h_im));
            acc = _mm256_fmadd_pd(_mm256_set1_pd(psd.weight[t]), mag, acc);
        }
        _mm256_storeu_pd(out.data() + i, acc);
    }
    rational_psd_scalar(psd, omega.subspan(vec_end), out.subspan(vec_end));
}

} // namespace qmfs::kernels::detail
