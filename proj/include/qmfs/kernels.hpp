#pragma once

// Frequency-grid inner loops. Every kernel has a scalar reference and, on
// x86-64, an AVX2/FMA variant; the variant is chosen once at runtime from
// CPUID and can be forced with QMFS_KERNEL=scalar|avx2.

#include <complex>
#include <span>
#include <string_view>
#include <vector>

namespace qmfs::kernels {

enum class Isa { scalar, avx2 };

/// Sum of weighted squared transfer functions written in pole-residue form:
///
///   out[i] = offset + sum_t weight[t] * |direct[t] + sum_m residues[t*M + m] / (-i w_i - poles[m])|^2
struct RationalPsd {
    std::vector<std::complex<double>> poles;
    std::vector<double> weight;
    std::vector<double> direct;
    std::vector<std::complex<double>> residues;
    double offset = 0.0;

    std::size_t terms() const { return weight.size(); }
};

struct Lorentzian {
    double center = 0.0;
    double fwhm = 1.0;
    /// Integral over d(omega)/2pi.
    double area = 0.0;
};

/// out[i] = floor + sum_p area_p * fwhm_p / ((w_i - c_p)^2 + fwhm_p^2/4)
void lorentzian_sum(Isa isa, double floor, std::span<const Lorentzian> peaks,
                    std::span<const double> omega, std::span<double> out);

void rational_psd(Isa isa, const RationalPsd& psd, std::span<const double> omega, std::span<double> out);

bool isa_available(Isa isa);
/// Best available ISA, honouring QMFS_KERNEL.
Isa active_isa();
std::string_view isa_name(Isa isa);

namespace detail {
void lorentzian_sum_scalar(double floor, std::span<const Lorentzian> peaks,
                           std::span<const double> omega, std::span<double> out);
void rational_psd_scalar(const RationalPsd& psd, std::span<const double> omega, std::span<double> out);
#if defined(QMFS_HAVE_AVX2)
void lorentzian_sum_avx2(double floor, std::span<const Lorentzian> peaks,
                         std::span<const double> omega, std::span<double> out);
void rational_psd_avx2(const RationalPsd& psd, std::span<const double> omega, std::span<double> out);
#endif
} // namespace detail

} // namespace qmfs::kernels
