#pragma once

// Closed-form noise budget of a four-tone backaction-evading measurement,
// in quanta of a collective quadrature (vacuum = 1/2).

#include <functional>

namespace qmfs::budget {

/// C = 4 G^2 / (kappa gamma). Throws std::invalid_argument for G < 0 or
/// nonpositive kappa, gamma.
double cooperativity(double g, double kappa, double gamma);

/// <X^2>^T = (n1 + n2)/2 + 1/2.
double thermal_variance(double n1, double n2);

struct Backaction {
    /// Quantum backaction 2C.
    double qba = 0.0;
    /// Classical backaction from cavity occupation, 4 C n_c.
    double cba = 0.0;
};
Backaction backaction(double c, double n_cavity);

/// n_imp = (n_amp + 1/2) / (8 C); infinite at C = 0.
double imprecision(double c, double n_amp);

struct CoolingResult {
    double gamma = 0.0;
    double n = 0.0;
};
/// Resolved-sideband cooling: gamma0 (1 + C), n0 / (1 + C) + residual.
CoolingResult sideband_cooling_effective(double gamma0, double n0, double c_cool, double residual = 0.0);

/// 10 log10(value).
double duan_margin_db(double duan_value);

/// Level of the full quantum limit for x2_eff.
inline constexpr double full_quantum_limit = 1.0;

/// Optional power-dependent heating C -> Delta<X^2>^T.
using TechnicalHeating = std::function<double(double)>;

struct NoiseBudget {
    double thermal = 0.0;
    double qba = 0.0;
    double cba = 0.0;
    double imprecision = 0.0;

    /// Measured quadrature (and its QMFS partner) as seen in the output: thermal + imprecision.
    double measured_total() const { return thermal + imprecision; }
    /// Quadratures that receive the backaction: thermal + qba + cba.
    double conjugate_total() const { return thermal + qba + cba; }
};

NoiseBudget make_budget(double thermal, double c, double n_cavity, double n_amp,
                        const TechnicalHeating& heating = {});

} // namespace qmfs::budget
