#include "qmfs/kernels.hpp"

namespace qmfs::kernels::detail {

void lorentzian_sum_scalar(double floor, std::span<const Lorentzian> peaks,
                           std::span<const double> omega, std::span<double> out) {
    for (std::size_t i = 0; i < omega.size(); ++i) {
        double acc = floor;
        for (const auto& p : peaks) {
            const double d = omega[i] - p.center;
            acc += p.area * p.fwhm / (d * d + 0.25 * p.fwhm * p.fwhm);
        }
        out[i] = acc;
    }
}

void rational_psd_scalar(const RationalPsd& psd, std::span<const double> omega, std::span<double> out) {
    const std::size_t m = psd.poles.size();
    std::vector<std::complex<double>> inv(m);
    for (std::size_t i = 0; i < omega.size(); ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            inv[k] = 1.0 / (std::complex<double>(0.0, -omega[i]) - psd.poles[k]);
        }
        double acc = psd.offset;
        for (std::size_t t = 0; t < psd.terms(); ++t) {
            std::complex<double> h = psd.direct[t];
            const auto* r = psd.residues.data() + t * m;
            for (std::size_t k = 0; k < m; ++k) {
                h += r[k] * inv[k];
            }
            acc += psd.weight[t] * std::norm(h);
        }
        out[i] = acc;
    }
}

} // namespace qmfs::kernels::detail
