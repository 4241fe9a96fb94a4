#include "qmfs/model.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>
#include <utility>

#include "qmfs/error.hpp"

namespace qmfs {

namespace {

int tone_slot(int oscillator, Sideband sideband) {
    if (oscillator != 1 && oscillator != 2) {
        throw ConfigError(fmt::format("oscillator index {} is not 1 or 2", oscillator));
    }
    return 2 * (oscillator - 1) + (sideband == Sideband::blue ? 1 : 0);
}

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) {
        throw ConfigError(fmt::format("{}: {}", field, what));
    }
}

void check_finite(double v, const std::string& field) {
    require(std::isfinite(v), field, "must be finite");
}

void check_cavity(const CavityMode& c, const std::string& name) {
    check_finite(c.omega.in_hz(), name + ".frequency_hz");
    check_finite(c.kappa_ext.in_hz(), name + ".kappa_ext_hz");
    check_finite(c.kappa_int.in_hz(), name + ".kappa_int_hz");
    check_finite(c.n_thermal, name + ".n_thermal");
    require(c.omega.in_hz() > 0.0, name + ".frequency_hz", "must be positive");
    require(c.kappa_ext.in_hz() >= 0.0, name + ".kappa_ext_hz", "must be non-negative");
    require(c.kappa_int.in_hz() >= 0.0, name + ".kappa_int_hz", "must be non-negative");
    require(c.kappa().in_hz() > 0.0, name, "cavity undamped (kappa_ext + kappa_int must be > 0)");
    require(c.n_thermal >= 0.0, name + ".n_thermal", "must be non-negative");
}

void check_tones(ToneSet& set, const std::string& name) {
    std::array<int, 4> seen{};
    for (std::size_t i = 0; i < set.tones.size(); ++i) {
        auto& t = set.tones[i];
        const auto field = fmt::format("{}.tones[{}]", name, i);
        require(t.oscillator == 1 || t.oscillator == 2, field + ".oscillator", "must be 1 or 2");
        check_finite(t.amplitude.in_hz(), field + ".amplitude_hz");
        check_finite(t.phase, field + ".phase_rad");
        require(t.amplitude.in_hz() >= 0.0, field + ".amplitude_hz", "must be non-negative");
        ++seen[static_cast<std::size_t>(tone_slot(t.oscillator, t.sideband))];
        t.phase = fold_phase(t.phase);
    }
    for (int s : seen) {
        require(s == 1, name + ".tones", "need exactly one tone per (oscillator, sideband) pair");
    }
    check_finite(set.detuning.in_hz(), name + ".detuning_hz");
    require(set.detuning.in_hz() > 0.0, name + ".detuning_hz", "must be positive");
}

} // namespace

double fold_phase(double angle) {
    double r = std::fmod(angle, two_pi);
    if (r < 0.0) {
        r += two_pi;
    }
    if (r >= two_pi) {
        r = 0.0;
    }
    return r;
}

const PumpTone& ToneSet::tone(int oscillator, Sideband sideband) const {
    for (const auto& t : tones) {
        if (t.oscillator == oscillator && t.sideband == sideband) {
            return t;
        }
    }
    throw ConfigError(fmt::format("no tone for oscillator {} {} sideband", oscillator,
                                  sideband == Sideband::red ? "red" : "blue"));
}

PumpTone& ToneSet::tone(int oscillator, Sideband sideband) {
    return const_cast<PumpTone&>(std::as_const(*this).tone(oscillator, sideband));
}

ToneSet ToneSet::make(Rate g_red, Rate g_blue, Rate detuning, const TonePhases& phases) {
    ToneSet set;
    set.detuning = detuning;
    set.tones = {PumpTone{1, Sideband::red, g_red, 0.0}, PumpTone{1, Sideband::blue, g_blue, 0.0},
                 PumpTone{2, Sideband::red, g_red, 0.0}, PumpTone{2, Sideband::blue, g_blue, 0.0}};
    set.set_phases(phases);
    return set;
}

TonePhases ToneSet::phases() const {
    return {tone(1, Sideband::red).phase, tone(1, Sideband::blue).phase,
            tone(2, Sideband::red).phase, tone(2, Sideband::blue).phase};
}

void ToneSet::set_phases(const TonePhases& p) {
    tone(1, Sideband::red).phase = fold_phase(p.red1);
    tone(1, Sideband::blue).phase = fold_phase(p.blue1);
    tone(2, Sideband::red).phase = fold_phase(p.red2);
    tone(2, Sideband::blue).phase = fold_phase(p.blue2);
}

ToneSet ToneSet::scaled(double s) const {
    ToneSet out = *this;
    for (auto& t : out.tones) {
        t.amplitude = s * t.amplitude;
    }
    return out;
}

CheckedConfig validate(const SystemConfig& input) {
    CheckedConfig out;
    out.config_ = input;
    SystemConfig& c = out.config_;

    for (int j = 0; j < 2; ++j) {
        const auto& m = c.mech[static_cast<std::size_t>(j)];
        const auto name = fmt::format("mechanical[{}]", j);
        check_finite(m.omega.in_hz(), name + ".frequency_hz");
        check_finite(m.gamma_intrinsic.in_hz(), name + ".gamma_intrinsic_hz");
        check_finite(m.gamma_effective.in_hz(), name + ".gamma_effective_hz");
        check_finite(m.n_thermal, name + ".n_thermal");
        require(m.omega.in_hz() > 0.0, name + ".frequency_hz", "must be positive");
        require(m.gamma_intrinsic.in_hz() > 0.0, name + ".gamma_intrinsic_hz", "must be positive");
        require(m.gamma_effective.in_hz() >= m.gamma_intrinsic.in_hz(), name + ".gamma_effective_hz",
                "must be >= gamma_intrinsic_hz");
        require(m.n_thermal >= 0.0, name + ".n_thermal", "must be non-negative");
    }

    check_cavity(c.pump_cavity, "pump_cavity");
    check_tones(c.pump_tones, "pump_tones");
    if (c.probe_cavity) {
        check_cavity(*c.probe_cavity, "probe_cavity");
    }
    if (c.probe_tones) {
        require(c.probe_cavity.has_value(), "probe_tones", "probe tones require a probe_cavity");
        check_tones(*c.probe_tones, "probe_tones");
        require(c.probe_tones->detuning == c.pump_tones.detuning, "probe_tones.detuning_hz",
                "must equal pump_tones.detuning_hz");
    }
    check_finite(c.amplifier_noise, "amplifier_noise");
    require(c.amplifier_noise >= 0.0, "amplifier_noise", "must be non-negative");

    out.kappa_pump_ = c.pump_cavity.kappa().rad_s();
    out.kappa_probe_ = c.probe_cavity ? c.probe_cavity->kappa().rad_s() : 0.0;
    out.mean_gamma_ = 0.5 * (c.mech[0].gamma_effective.rad_s() + c.mech[1].gamma_effective.rad_s());
    out.mean_gamma_intrinsic_ =
        0.5 * (c.mech[0].gamma_intrinsic.rad_s() + c.mech[1].gamma_intrinsic.rad_s());

    // Rotating-wave regime: resolved sidebands (omega_j > kappa) and tones on
    // different oscillators separated by more than a cavity linewidth.
    constexpr double rwa_margin = 1.0;
    const double kappa_max = std::max(out.kappa_pump_, out.kappa_probe_);
    for (int j = 0; j < 2; ++j) {
        if (c.mech[static_cast<std::size_t>(j)].omega.rad_s() <= rwa_margin * kappa_max) {
            out.warnings_.push_back(fmt::format(
                "mechanical[{}]: frequency not >> kappa, sideband resolution violates RWA", j));
        }
    }
    if (std::abs(c.mech[0].omega.rad_s() - c.mech[1].omega.rad_s()) <= rwa_margin * kappa_max) {
        out.warnings_.push_back("sideband separation violates RWA (|omega_1 - omega_2| not >> kappa)");
    }
    return out;
}

SystemConfig device_default_config() {
    SystemConfig c;
    c.mech[0] = {Rate::hz(6.692e6), Rate::hz(55.0), Rate::hz(55.0), 32.0};
    c.mech[1] = {Rate::hz(9.032e6), Rate::hz(84.0), Rate::hz(84.0), 24.0};
    c.pump_cavity = {Rate::hz(4.98e9), Rate::hz(1.45e6), Rate::hz(130e3), 0.23};
    c.probe_cavity = CavityMode{Rate::hz(6.62e9), Rate::hz(820e3), Rate::hz(350e3), 0.0};
    c.pump_tones = ToneSet::uniform(Rate::hz(121e3), Rate::hz(10e3));
    c.amplifier_noise = 10.0;
    return c;
}

// ---------------------------------------------------------------------------

namespace {

bool allowed_pair(CollectiveQuadrature a, CollectiveQuadrature b) {
    if (a.quad == b.quad) {
        return false;
    }
    // {X+,P-}, {X-,P+} are the commuting QMFS pairs; {X+,P+}, {X-,P-} conjugate pairs.
    return true;
}

std::string collective_label(CollectiveQuadrature c) {
    return std::string(c.quad == Quad::X ? "X" : "P") + (c.branch == Branch::plus ? "+" : "-");
}

std::optional<CollectiveQuadrature> parse_collective(const std::string& s) {
    if (s.size() != 2 || (s[0] != 'X' && s[0] != 'P') || (s[1] != '+' && s[1] != '-')) {
        return std::nullopt;
    }
    return CollectiveQuadrature{s[1] == '+' ? Branch::plus : Branch::minus,
                                s[0] == 'X' ? Quad::X : Quad::P};
}

} // namespace

GeneralizedQuadrature make_generalized(CollectiveQuadrature first, CollectiveQuadrature second,
                                       double angle) {
    if (!allowed_pair(first, second)) {
        throw std::invalid_argument(fmt::format("generalized quadrature needs an X/P pair, got {} and {}",
                                                collective_label(first), collective_label(second)));
    }
    return {first, second, fold_phase(angle)};
}

Eigen::Vector4d selector_vector(const QuadratureSelector& q) {
    const double s = std::numbers::sqrt2 / 2.0;
    auto collective = [s](CollectiveQuadrature c) {
        Eigen::Vector4d v = Eigen::Vector4d::Zero();
        const int offset = c.quad == Quad::X ? 0 : 1;
        v[offset] = s;
        v[2 + offset] = c.branch == Branch::plus ? s : -s;
        return v;
    };
    return std::visit(
        [&](const auto& sel) -> Eigen::Vector4d {
            using T = std::decay_t<decltype(sel)>;
            if constexpr (std::is_same_v<T, SingleQuadrature>) {
                Eigen::Vector4d v = Eigen::Vector4d::Zero();
                v[2 * (sel.oscillator - 1) + (sel.quad == Quad::X ? 0 : 1)] = 1.0;
                return v;
            } else if constexpr (std::is_same_v<T, CollectiveQuadrature>) {
                return collective(sel);
            } else {
                return std::cos(sel.angle / 2.0) * collective(sel.first) +
                       std::sin(sel.angle / 2.0) * collective(sel.second);
            }
        },
        q);
}

QuadratureSelector parse_selector(const std::string& text) {
    if (text.size() == 2 && (text[0] == 'X' || text[0] == 'P') && (text[1] == '1' || text[1] == '2')) {
        return SingleQuadrature{text[1] - '0', text[0] == 'X' ? Quad::X : Quad::P};
    }
    if (auto c = parse_collective(text)) {
        return *c;
    }
    const auto caret = text.find('^');
    const auto slash = text.find('/');
    if (caret != std::string::npos && slash != std::string::npos && caret < slash) {
        auto first = parse_collective(text.substr(0, caret));
        auto second = parse_collective(text.substr(slash + 1));
        if (first && second) {
            std::size_t used = 0;
            const auto angle_text = text.substr(caret + 1, slash - caret - 1);
            double angle = 0.0;
            try {
                angle = std::stod(angle_text, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == angle_text.size() && used > 0) {
                return make_generalized(*first, *second, angle);
            }
        }
    }
    throw std::invalid_argument(
        fmt::format("unknown quadrature '{}' (expected X1, P2, X+, P-, or X+^<angle>/P-)", text));
}

std::string selector_label(const QuadratureSelector& q) {
    return std::visit(
        [](const auto& sel) -> std::string {
            using T = std::decay_t<decltype(sel)>;
            if constexpr (std::is_same_v<T, SingleQuadrature>) {
                return std::string(sel.quad == Quad::X ? "X" : "P") + std::to_string(sel.oscillator);
            } else if constexpr (std::is_same_v<T, CollectiveQuadrature>) {
                return collective_label(sel);
            } else {
                return fmt::format("{}^{}/{}", collective_label(sel.first), sel.angle,
                                   collective_label(sel.second));
            }
        },
        q);
}

} // namespace qmfs
