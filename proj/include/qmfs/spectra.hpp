#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmfs/dynamics.hpp"
#include "qmfs/kernels.hpp"

namespace qmfs {

/// Symmetrized output PSD in quanta (vacuum = 1/2 per quadrature) on a grid of
/// frequencies relative to the cavity resonance, rad/s.
struct SpectrumTrace {
    std::vector<double> omega;
    std::vector<double> psd;
    CavityId cavity = CavityId::pump;
    double lo_phase = 0.0;
    Detection detection = Detection::phase_insensitive;
    double n_amp = 0.0;
};

/// Symmetric grid of `points` frequencies on [-half_span, half_span].
std::vector<double> symmetric_grid(double half_span, std::size_t points);
/// +-(Omega + 30 gamma) with 8001 points.
std::vector<double> default_grid(const LinearModel& model, std::size_t points = 8001);

/// Complex transfer matrix chi(w) = (-i w I - A)^{-1} by a direct LU solve.
Eigen::MatrixXcd susceptibility(const LinearModel& model, double omega);

/// S(w) = sum_r weight_r sum_k |H_rk(w)|^2 (n_k + 1/2) + n_amp with
/// H = rows chi B + feedthrough. Evaluated in pole-residue form with the SIMD
/// kernels; falls back to per-frequency LU when A is close to defective.
SpectrumTrace output_spectrum(const LinearModel& model, const OutputMap& routing,
                              std::span<const double> grid, double n_amp);
/// Same quantity, always by per-frequency LU.
std::vector<double> output_spectrum_direct(const LinearModel& model, const OutputMap& routing,
                                           std::span<const double> grid, double n_amp);

/// Two-sided PSD of the state combination q . x (length dim, or 4 for the
/// mechanical block); integrates over d(omega)/2pi to q^T V q.
std::vector<double> state_spectrum(const LinearModel& model, const Eigen::VectorXd& q,
                                   std::span<const double> grid);

/// Trapezoid integral of (psd - baseline) d(omega)/2pi. Tails beyond the grid
/// edges are added assuming a 1/(w - c)^2 decay about the nearest of `centers`.
double integrate_excess(std::span<const double> omega, std::span<const double> psd, double baseline,
                        std::span<const double> centers = {});

struct PeakFit {
    double center = 0.0;
    double fwhm = 0.0;
    double area = 0.0;
    double floor = 0.0;
};

struct TwoPeakFit {
    PeakFit left;
    PeakFit right;
    /// False when |c_right - c_left| < fwhm: the joint fit is still reported.
    bool resolved = true;
    int iterations = 0;
    double rms_residual = 0.0;

    double floor() const { return left.floor; }
    /// Fitted model at w.
    double model(double omega) const;
};

/// Damped least-squares fit of floor + two Lorentzians with an analytic
/// Jacobian, initialized from the maxima left and right of the grid centre.
/// Throws NumericalError("peaks unresolved ...") when no peak stands above
/// three times the fit residual.
TwoPeakFit fit_two_lorentzians(const SpectrumTrace& trace);

struct TransductionGain {
    /// Output PSD per unit two-sided PSD of the measured quadrature at +-Omega.
    double gain = 0.0;
    /// Measured mechanical quadrature over (X1, P1, X2, P2), unit norm.
    Eigen::Vector4d measured;
    double omega = 0.0;
};

/// Throws std::invalid_argument("no transduction") without mechanical coupling.
TransductionGain calibrate_gain(const LinearModel& model, const OutputMap& routing);

struct EffectiveOccupation {
    double x2_eff = 0.0;
    double n_imp = 0.0;
};

/// x2_eff = gamma S_eff(+-Omega)/2 averaged over both peaks, n_imp = gamma floor/(2 gain).
EffectiveOccupation effective_occupation(const TwoPeakFit& fit, double gamma, double gain);
EffectiveOccupation effective_occupation(const SpectrumTrace& trace, double gamma, double gain);

/// Variance of the measured quadrature from the integrated peak areas,
/// (area_left + area_right) / gain. Needs no linewidth.
double integrated_variance(const TwoPeakFit& fit, double gain);

/// CSV with header "# omega_rel_hz, psd_quanta" (omega/2pi in Hz).
std::string spectrum_csv(const SpectrumTrace& trace);

} // namespace qmfs
