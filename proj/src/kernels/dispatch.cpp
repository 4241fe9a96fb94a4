#include <cstdlib>
#include <stdexcept>
#include <string>

#include "qmfs/kernels.hpp"

namespace qmfs::kernels {

namespace {

void check_sizes(std::span<const double> omega, std::span<double> out) {
    if (omega.size() != out.size()) {
        throw std::invalid_argument("kernel output span must match the frequency grid");
    }
}

Isa detect() {
    if (const char* env = std::getenv("QMFS_KERNEL")) {
        const std::string v(env);
        if (v == "scalar") {
            return Isa::scalar;
        }
        if (v == "avx2" && isa_available(Isa::avx2)) {
            return Isa::avx2;
        }
    }
    return isa_available(Isa::avx2) ? Isa::avx2 : Isa::scalar;
}

} // namespace

bool isa_available(Isa isa) {
    switch (isa) {
    case Isa::scalar:
        return true;
    case Isa::avx2:
#if defined(QMFS_HAVE_AVX2)
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

Isa active_isa() {
    static const Isa isa = detect();
    return isa;
}

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

void lorentzian_sum(Isa isa, double floor, std::span<const Lorentzian> peaks,
                    std::span<const double> omega, std::span<double> out) {
    check_sizes(omega, out);
#if defined(QMFS_HAVE_AVX2)
    if (isa == Isa::avx2 && isa_available(Isa::avx2)) {
        detail::lorentzian_sum_avx2(floor, peaks, omega, out);
        return;
    }
#endif
    (void)isa;
    detail::lorentzian_sum_scalar(floor, peaks, omega, out);
}

void rational_psd(Isa isa, const RationalPsd& psd, std::span<const double> omega, std::span<double> out) {
    check_sizes(omega, out);
    if (psd.direct.size() != psd.terms() || psd.residues.size() != psd.terms() * psd.poles.size()) {
        throw std::invalid_argument("rational_psd: inconsistent term arrays");
    }
#if defined(QMFS_HAVE_AVX2)
    if (isa == Isa::avx2 && isa_available(Isa::avx2)) {
        detail::rational_psd_avx2(psd, omega, out);
        return;
    }
#endif
    (void)isa;
    detail::rational_psd_scalar(psd, omega, out);
}

} // namespace qmfs::kernels
