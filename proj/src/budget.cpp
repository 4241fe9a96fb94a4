#include "qmfs/budget.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qmfs::budget {

double cooperativity(double g, double kappa, double gamma) {
    if (!(g >= 0.0) || !(kappa > 0.0) || !(gamma > 0.0)) {
        throw std::invalid_argument("cooperativity: need G >= 0 and kappa, gamma > 0");
    }
    return 4.0 * g * g / (kappa * gamma);
}

double thermal_variance(double n1, double n2) { return 0.5 * (n1 + n2) + 0.5; }

Backaction backaction(double c, double n_cavity) { return {2.0 * c, 4.0 * c * n_cavity}; }

double imprecision(double c, double n_amp) {
    if (c <= 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return (n_amp + 0.5) / (8.0 * c);
}

CoolingResult sideband_cooling_effective(double gamma0, double n0, double c_cool, double residual) {
    if (c_cool < 0.0) {
        throw std::invalid_argument("sideband_cooling_effective: cooling cooperativity must be >= 0");
    }
    if (std::isinf(c_cool)) {
        return {std::numeric_limits<double>::infinity(), residual};
    }
    return {gamma0 * (1.0 + c_cool), n0 / (1.0 + c_cool) + residual};
}

double duan_margin_db(double duan_value) { return 10.0 * std::log10(duan_value); }

NoiseBudget make_budget(double thermal, double c, double n_cavity, double n_amp,
                        const TechnicalHeating& heating) {
    NoiseBudget b;
    b.thermal = thermal + (heating ? heating(c) : 0.0);
    const auto ba = backaction(c, n_cavity);
    b.qba = ba.qba;
    b.cba = ba.cba;
    b.imprecision = imprecision(c, n_amp);
    return b;
}

} // namespace qmfs::budget
