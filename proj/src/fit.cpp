#include <algorithm>
#include <array>
#include <cmath>

#include <fmt/format.h>

#include "qmfs/error.hpp"
#include "qmfs/kernels.hpp"
#include "qmfs/spectra.hpp"

namespace qmfs {

namespace {

// Parameter vector: floor, then (center, fwhm, area) for each peak.
using Params = Eigen::Matrix<double, 7, 1>;

std::array<kernels::Lorentzian, 2> peaks_of(const Params& p) {
    return {kernels::Lorentzian{p[1], p[2], p[3]}, kernels::Lorentzian{p[4], p[5], p[6]}};
}

void model_values(const Params& p, std::span<const double> x, std::vector<double>& out) {
    out.resize(x.size());
    const auto peaks = peaks_of(p);
    kernels::lorentzian_sum(kernels::active_isa(), p[0], peaks, x, out);
}

double cost(const Params& p, std::span<const double> x, std::span<const double> y, std::vector<double>& buf) {
    model_values(p, x, buf);
    double c = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = buf[i] - y[i];
        c += r * r;
    }
    return c;
}

bool admissible(const Params& p) {
    return p.allFinite() && p[2] > 0.0 && p[5] > 0.0 && p[3] >= 0.0 && p[6] >= 0.0;
}

double half_width(std::span<const double> x, std::span<const double> y, std::size_t peak, double floor) {
    const double half = floor + 0.5 * (y[peak] - floor);
    std::size_t lo = peak;
    while (lo > 0 && y[lo] > half) {
        --lo;
    }
    std::size_t hi = peak;
    while (hi + 1 < y.size() && y[hi] > half) {
        ++hi;
    }
    const double step = x.size() > 1 ? (x.back() - x.front()) / static_cast<double>(x.size() - 1) : 1.0;
    return std::max(x[hi] - x[lo], 2.0 * step);
}

} // namespace

double TwoPeakFit::model(double omega) const {
    auto l = [omega](const PeakFit& p) {
        const double d = omega - p.center;
        return p.area * p.fwhm / (d * d + 0.25 * p.fwhm * p.fwhm);
    };
    return left.floor + l(left) + l(right);
}

TwoPeakFit fit_two_lorentzians(const SpectrumTrace& trace) {
    const auto n = trace.omega.size();
    if (n < 8 || trace.psd.size() != n) {
        throw std::invalid_argument("fit_two_lorentzians: trace too short");
    }

    // Scale to O(1) numbers for the normal equations.
    const double xs = std::max(std::abs(trace.omega.front()), std::abs(trace.omega.back()));
    const double ys = *std::max_element(trace.psd.begin(), trace.psd.end());
    const double ymin = *std::min_element(trace.psd.begin(), trace.psd.end());
    if (!(ys > 0.0) || ys - ymin <= 1e-9 * ys) {
        throw NumericalError("peaks unresolved: trace is flat");
    }
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = trace.omega[i] / xs;
        y[i] = trace.psd[i] / ys;
    }

    const double mid = 0.5 * (x.front() + x.back());
    const auto split = static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), mid) - x.begin());
    const auto left_peak = static_cast<std::size_t>(
        std::max_element(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(split, 1))) -
        y.begin());
    const auto right_peak = static_cast<std::size_t>(
        std::max_element(y.begin() + static_cast<std::ptrdiff_t>(std::min(split, n - 1)), y.end()) - y.begin());
    const double floor0 = ymin / ys;

    Params p;
    p[0] = floor0;
    const std::array<std::size_t, 2> idx{left_peak, right_peak};
    for (int k = 0; k < 2; ++k) {
        const auto i = idx[static_cast<std::size_t>(k)];
        const double w = half_width(x, y, i, floor0);
        const double h = std::max(y[i] - floor0, 1e-12);
        p[1 + 3 * k] = x[i];
        p[2 + 3 * k] = w;
        p[3 + 3 * k] = h * w / 4.0;
    }
    if (left_peak == right_peak || std::abs(x[left_peak] - x[right_peak]) < p[2]) {
        // One merged maximum: split it so the Jacobian is not rank deficient.
        p[1] -= 0.25 * p[2];
        p[4] += 0.25 * p[5];
        p[3] *= 0.5;
        p[6] *= 0.5;
    }

    std::vector<double> buf;
    double c = cost(p, x, y, buf);
    double lambda = 1e-3;
    int it = 0;
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), 7);
    Eigen::VectorXd res(static_cast<Eigen::Index>(n));
    for (; it < 200; ++it) {
        model_values(p, x, buf);
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            res[row] = buf[i] - y[i];
            jac(row, 0) = 1.0;
            for (int k = 0; k < 2; ++k) {
                const double cen = p[1 + 3 * k];
                const double w = p[2 + 3 * k];
                const double a = p[3 + 3 * k];
                const double d = x[i] - cen;
                const double den = d * d + 0.25 * w * w;
                jac(row, 1 + 3 * k) = 2.0 * a * w * d / (den * den);
                jac(row, 2 + 3 * k) = a * (den - 0.5 * w * w) / (den * den);
                jac(row, 3 + 3 * k) = w / den;
            }
        }
        const Eigen::Matrix<double, 7, 7> jtj = jac.transpose() * jac;
        const Params g = jac.transpose() * res;

        bool accepted = false;
        double step_norm = 0.0;
        for (int tries = 0; tries < 30 && !accepted; ++tries) {
            Eigen::Matrix<double, 7, 7> lhs = jtj;
            for (int d = 0; d < 7; ++d) {
                lhs(d, d) += lambda * std::max(jtj(d, d), 1e-30);
            }
            const Params delta = lhs.ldlt().solve(-g);
            const Params trial = p + delta;
            if (admissible(trial)) {
                const double ct = cost(trial, x, y, buf);
                if (ct <= c) {
                    step_norm = delta.norm() / (p.norm() + 1e-300);
                    p = trial;
                    c = ct;
                    lambda = std::max(lambda / 3.0, 1e-12);
                    accepted = true;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if (!accepted || step_norm < 1e-8) {
            break;
        }
    }

    if (p[1] > p[4]) {
        std::swap(p[1], p[4]);
        std::swap(p[2], p[5]);
        std::swap(p[3], p[6]);
    }

    TwoPeakFit fit;
    fit.iterations = it;
    fit.rms_residual = std::sqrt(c / static_cast<double>(n)) * ys;
    fit.left = {p[1] * xs, p[2] * xs, p[3] * xs * ys, p[0] * ys};
    fit.right = {p[4] * xs, p[5] * xs, p[6] * xs * ys, p[0] * ys};
    fit.resolved = (fit.right.center - fit.left.center) > std::max(fit.left.fwhm, fit.right.fwhm);

    const double h_left = 4.0 * fit.left.area / fit.left.fwhm;
    const double h_right = 4.0 * fit.right.area / fit.right.fwhm;
    if (std::min(h_left, h_right) <= 3.0 * fit.rms_residual) {
        throw NumericalError(fmt::format(
            "peaks unresolved: peak heights {:.3g}, {:.3g} not above 3x fit residual {:.3g}", h_left, h_right,
            fit.rms_residual));
    }
    return fit;
}

} // namespace qmfs
