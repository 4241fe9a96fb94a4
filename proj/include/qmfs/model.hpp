#pragma once

// Domain types for two mechanical oscillators read out through one or two
// microwave cavities driven by four-tone sideband pumping.
//
// Conventions: hbar = 1, quadratures X = (b + b^dag)/sqrt2, P = i(b^dag - b)/sqrt2,
// so the vacuum variance of every quadrature is 1/2.

#include <array>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace qmfs {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// A rate or frequency. Stored as f = omega/2pi so that configuration files,
/// which are written in Hz, round-trip exactly; arithmetic uses rad_s().
class Rate {
  public:
    constexpr Rate() = default;
    static constexpr Rate hz(double f) { return Rate(f); }
    static constexpr Rate rad_s(double w) { return Rate(w / two_pi); }

    constexpr double in_hz() const { return hz_; }
    constexpr double rad_s() const { return two_pi * hz_; }

    friend constexpr bool operator==(Rate, Rate) = default;
    friend constexpr Rate operator+(Rate a, Rate b) { return Rate(a.hz_ + b.hz_); }
    friend constexpr Rate operator*(double s, Rate r) { return Rate(s * r.hz_); }

  private:
    constexpr explicit Rate(double f) : hz_(f) {}
    double hz_ = 0.0;
};

struct MechanicalMode {
    Rate omega;
    Rate gamma_intrinsic;
    /// Damping including any sideband cooling through the probe cavity.
    Rate gamma_effective;
    /// Bath occupation seen with gamma_effective.
    double n_thermal = 0.0;

    friend bool operator==(const MechanicalMode&, const MechanicalMode&) = default;
};

struct CavityMode {
    Rate omega;
    Rate kappa_ext;
    Rate kappa_int;
    double n_thermal = 0.0;

    Rate kappa() const { return kappa_ext + kappa_int; }
    friend bool operator==(const CavityMode&, const CavityMode&) = default;
};

enum class Sideband { red, blue };

/// One coherent drive near the red (-) or blue (+) sideband of oscillator 1 or 2,
/// described by its linearized coupling |G| e^{i theta}.
struct PumpTone {
    int oscillator = 1;
    Sideband sideband = Sideband::red;
    Rate amplitude;
    double phase = 0.0;

    friend bool operator==(const PumpTone&, const PumpTone&) = default;
};

/// theta_{1-}, theta_{1+}, theta_{2-}, theta_{2+}.
struct TonePhases {
    double red1 = 0.0;
    double blue1 = 0.0;
    double red2 = 0.0;
    double blue2 = 0.0;
};

struct ToneSet {
    std::array<PumpTone, 4> tones;
    /// Omega: offset of every tone from its mechanical sideband.
    Rate detuning;

    const PumpTone& tone(int oscillator, Sideband sideband) const;
    PumpTone& tone(int oscillator, Sideband sideband);

    /// Four tones with red amplitude g_red, blue amplitude g_blue on both oscillators.
    static ToneSet make(Rate g_red, Rate g_blue, Rate detuning, const TonePhases& phases = {});
    static ToneSet uniform(Rate g, Rate detuning, const TonePhases& phases = {}) {
        return make(g, g, detuning, phases);
    }

    TonePhases phases() const;
    void set_phases(const TonePhases& phases);
    /// Multiply every amplitude by s.
    ToneSet scaled(double s) const;

    friend bool operator==(const ToneSet&, const ToneSet&) = default;
};

struct SystemConfig {
    std::array<MechanicalMode, 2> mech;
    CavityMode pump_cavity;
    ToneSet pump_tones;
    std::optional<CavityMode> probe_cavity;
    std::optional<ToneSet> probe_tones;
    /// n_amp: noise quanta added by the phase-insensitive amplifier chain.
    double amplifier_noise = 0.0;

    friend bool operator==(const SystemConfig&, const SystemConfig&) = default;
};

/// A SystemConfig whose invariants have been checked. Phases are folded
/// into [0, 2pi) and derived quantities are cached.
class CheckedConfig {
  public:
    const SystemConfig& config() const { return config_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    double kappa_pump() const { return kappa_pump_; }
    double kappa_probe() const { return kappa_probe_; }
    /// gamma = (gamma_1 + gamma_2)/2 from the effective dampings, rad/s.
    double mean_gamma() const { return mean_gamma_; }
    double mean_gamma_intrinsic() const { return mean_gamma_intrinsic_; }

  private:
    friend CheckedConfig validate(const SystemConfig& config);
    SystemConfig config_;
    std::vector<std::string> warnings_;
    double kappa_pump_ = 0.0;
    double kappa_probe_ = 0.0;
    double mean_gamma_ = 0.0;
    double mean_gamma_intrinsic_ = 0.0;
};

/// Checks every invariant; throws ConfigError naming the offending field.
/// Emits regime warnings where the rotating-wave treatment is questionable.
CheckedConfig validate(const SystemConfig& config);

/// Fold an angle into [0, 2pi).
double fold_phase(double angle);

/// Device values of the two-drum, two-cavity circuit: intrinsic damping,
/// cryostat-limited occupations, no sideband cooling, and a four-tone BAE
/// pump on X+ with all phases zero.
SystemConfig device_default_config();

// ---------------------------------------------------------------------------
// Quadrature selection

enum class Quad { X, P };
enum class Branch { plus, minus };

struct SingleQuadrature {
    int oscillator = 1;
    Quad quad = Quad::X;
};

/// X+- = (X1 +- X2)/sqrt2, P+- likewise.
struct CollectiveQuadrature {
    Branch branch = Branch::plus;
    Quad quad = Quad::X;
    friend bool operator==(const CollectiveQuadrature&, const CollectiveQuadrature&) = default;
};

/// cos(angle/2) * first + sin(angle/2) * second, e.g. X+^phi for (X+, P-).
struct GeneralizedQuadrature {
    CollectiveQuadrature first;
    CollectiveQuadrature second;
    double angle = 0.0;
};

using QuadratureSelector =
    std::variant<SingleQuadrature, CollectiveQuadrature, GeneralizedQuadrature>;

inline constexpr CollectiveQuadrature x_plus{Branch::plus, Quad::X};
inline constexpr CollectiveQuadrature p_plus{Branch::plus, Quad::P};
inline constexpr CollectiveQuadrature x_minus{Branch::minus, Quad::X};
inline constexpr CollectiveQuadrature p_minus{Branch::minus, Quad::P};

/// Builds a generalized selector; only the pairs {X+,P-}, {X-,P+}, {X+,P+}
/// and {X-,P-} (either order) are accepted. The angle is folded.
GeneralizedQuadrature make_generalized(CollectiveQuadrature first, CollectiveQuadrature second,
                                       double angle);

/// Unit vector over the mechanical quadratures (X1, P1, X2, P2).
Eigen::Vector4d selector_vector(const QuadratureSelector& q);

/// "X1", "P2", "X+", "P-", "X+^1.5708/P-" (generalized: first^angle/second).
QuadratureSelector parse_selector(const std::string& text);
std::string selector_label(const QuadratureSelector& q);

} // namespace qmfs
