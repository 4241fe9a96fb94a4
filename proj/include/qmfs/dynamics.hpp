#pragma once

// Linear time-invariant Langevin model dx/dt = A x + B xi in the frame where
// the cavity rotates at its resonance and the oscillators at omega_1 - Omega
// and omega_2 + Omega. Counter-rotating terms are dropped, so A is constant.
//
// Tone set -> Hamiltonian. Each tone contributes a^dag (G e^{i theta} b_j) for
// a red tone and a^dag (G e^{i theta} b_j^dag) for a blue tone, plus h.c.
// Collecting terms,
//
//     H_c = (G_ref/2) a (A- X- + A+ X+ + B- P- + B+ P+) + h.c.,
//     H_0 = Omega (X+ X- + P+ P-),
//
// with G_ref the mean tone amplitude and
//
//     A+- = [(g1-* + g1+*) +- (g2-* + g2+*)] / G_ref,
//     B+- = i[(g1+* - g1-*) +- (g2+* - g2-*)] / G_ref,   g_j+- = |G_j+-| e^{i theta_j+-}.
//
// With equal amplitudes and phases (0, phi, phi, 0) this is
// 2 sqrt2 G X_c^phi (X+ cos(phi/2) + P- sin(phi/2)); with (0, theta, 0, theta)
// the cavity couples to X+ cos(theta/2) + P+ sin(theta/2).

#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmfs/model.hpp"

namespace qmfs {

enum class CavityId { pump, probe };

/// Quadrature ordering [X_c, P_c, (X_d, P_d), X1, P1, X2, P2].
struct StateLayout {
    bool has_probe = false;

    int dim() const { return has_probe ? 8 : 6; }
    /// Index of the cavity X quadrature; P follows.
    int cavity(CavityId id) const;
    /// Index of X_j for oscillator j in {1, 2}; P_j follows.
    int mech(int oscillator) const { return (has_probe ? 4 : 2) + 2 * (oscillator - 1); }
    int mech_begin() const { return mech(1); }
    int cavity_count() const { return has_probe ? 2 : 1; }
};

/// One bosonic bath. Feeds white noise of symmetrized strength
/// (occupation + 1/2) into two adjacent state quadratures with weight sqrt(rate).
struct InputChannel {
    std::string id;
    double rate = 0.0;
    double occupation = 0.0;
    int state_index = 0;
    /// First of the two noise columns of LinearModel::input.
    int column = 0;
};

struct LinearModel {
    StateLayout layout;
    Eigen::MatrixXd drift;
    Eigen::MatrixXd diffusion;
    Eigen::MatrixXd input;
    /// occupation + 1/2 for every column of `input`.
    Eigen::VectorXd input_noise;
    std::vector<InputChannel> channels;

    double kappa_pump = 0.0;
    double kappa_ext_pump = 0.0;
    double kappa_probe = 0.0;
    double kappa_ext_probe = 0.0;
    double detuning = 0.0;
    double mean_gamma = 0.0;
    double amplifier_noise = 0.0;

    const InputChannel& channel(const std::string& id) const;
};

struct CouplingCoefficients {
    std::complex<double> a_minus;
    std::complex<double> a_plus;
    std::complex<double> b_minus;
    std::complex<double> b_plus;
    /// G_ref, rad/s.
    double reference = 0.0;
};

CouplingCoefficients coupling_coefficients(const ToneSet& tones);

/// Cavity-quadrature coupling vectors over (X1, P1, X2, P2): the interaction is
/// x_weights . x_mech * X_c + p_weights . x_mech * P_c.
struct CavityCoupling {
    Eigen::Vector4d x_weights;
    Eigen::Vector4d p_weights;
};
CavityCoupling cavity_coupling(const ToneSet& tones);

struct DriftOptions {
    /// Replace Omega by -Omega in H_0.
    bool mirror_detuning = false;
    bool check_stability = true;
};

/// Throws InstabilityError("unstable model") when A has an eigenvalue with
/// positive real part.
LinearModel assemble_drift(const CheckedConfig& config, const DriftOptions& options = {});

double max_real_eigenvalue(const Eigen::MatrixXd& a);

enum class Detection {
    /// One output quadrature selected by the local-oscillator phase.
    homodyne,
    /// Spectrum-analyzer detection: mean of two orthogonal output quadratures.
    phase_insensitive,
};

/// Affine output map y = rows x + feedthrough xi for a_out = a_in - sqrt(kappa_E) a.
/// A local-oscillator phase psi detects -sin(psi) X_out + cos(psi) P_out, the
/// quadrature conjugate to X_out^{2 psi}; it carries the signal of a BAE tone
/// set whose cavity quadrature is X_c^{2 psi}.
struct OutputMap {
    CavityId cavity = CavityId::pump;
    double lo_phase = 0.0;
    Detection detection = Detection::phase_insensitive;
    Eigen::MatrixXd rows;
    Eigen::MatrixXd feedthrough;
    /// Per-row weight of the detected PSD (1 for homodyne, 1/2 each otherwise).
    Eigen::VectorXd weights;
};

/// Throws std::invalid_argument("no probe cavity") if the probe is requested but absent.
OutputMap output_routing(const LinearModel& model, CavityId cavity, double lo_phase,
                         Detection detection = Detection::phase_insensitive);

/// Tone phases (theta_1- = 0) that make the cavity couple to a single
/// collective quadrature. The target must weigh both oscillators equally;
/// every collective and generalized selector does.
TonePhases bae_phases(const QuadratureSelector& measured);
/// Local-oscillator phase that detects the signal of bae_phases(measured).
double bae_lo_phase(const QuadratureSelector& measured);

/// Orthogonal map (X1,P1,X2,P2) -> (X+,P+,X-,P-).
Eigen::Matrix4d collective_basis();

} // namespace qmfs
