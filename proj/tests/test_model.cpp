#include <doctest.h>

#include <numbers>

#include "qmfs/budget.hpp"
#include "qmfs/error.hpp"
#include "qmfs/model.hpp"

using namespace qmfs;

namespace {

bool has_warning(const CheckedConfig& c, const std::string& fragment) {
    for (const auto& w : c.warnings()) {
        if (w.find(fragment) != std::string::npos) {
            return true;
        }
    }
    return false;
}

std::string config_error_of(const SystemConfig& c) {
    try {
        validate(c);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("rates convert between hertz and rad/s") {
    CHECK(Rate::hz(1.0).rad_s() == doctest::Approx(2.0 * std::numbers::pi));
    CHECK(Rate::rad_s(2.0 * std::numbers::pi).in_hz() == doctest::Approx(1.0));
    CHECK((Rate::hz(2.0) + Rate::hz(3.0)).in_hz() == 5.0);
    CHECK((2.0 * Rate::hz(3.0)).in_hz() == 6.0);
}

TEST_CASE("device configuration is accepted without warnings") {
    const CheckedConfig c = validate(device_default_config());
    CHECK(c.warnings().empty());
    CHECK(c.kappa_pump() / two_pi == doctest::Approx(1.58e6));
    CHECK(c.kappa_probe() / two_pi == doctest::Approx(1.17e6));
    CHECK(c.mean_gamma_intrinsic() / two_pi == doctest::Approx(69.5));
    const auto& m = c.config().mech;
    CHECK(budget::thermal_variance(m[0].n_thermal, m[1].n_thermal) == doctest::Approx(28.5));
}

TEST_CASE("undamped cavity is rejected with the field name") {
    SystemConfig c = device_default_config();
    c.pump_cavity.kappa_ext = Rate::hz(0.0);
    c.pump_cavity.kappa_int = Rate::hz(0.0);
    const std::string msg = config_error_of(c);
    CHECK(msg.find("pump_cavity") != std::string::npos);
    CHECK(msg.find("cavity undamped") != std::string::npos);
}

TEST_CASE("invariant violations name the offending field") {
    SystemConfig c = device_default_config();
    c.mech[1].gamma_effective = Rate::hz(10.0);
    CHECK(config_error_of(c).find("mechanical[1].gamma_effective_hz") != std::string::npos);

    c = device_default_config();
    c.mech[0].n_thermal = -1.0;
    CHECK(config_error_of(c).find("mechanical[0].n_thermal") != std::string::npos);

    c = device_default_config();
    c.pump_tones.tones[2].amplitude = Rate::hz(-1.0);
    CHECK(config_error_of(c).find("pump_tones.tones[2].amplitude_hz") != std::string::npos);

    c = device_default_config();
    c.pump_tones.tones[1] = c.pump_tones.tones[0];
    CHECK(config_error_of(c).find("exactly one tone") != std::string::npos);

    c = device_default_config();
    c.pump_tones.detuning = Rate::hz(0.0);
    CHECK(config_error_of(c).find("pump_tones.detuning_hz") != std::string::npos);

    c = device_default_config();
    c.probe_tones = c.pump_tones;
    c.probe_cavity.reset();
    CHECK(config_error_of(c).find("probe_cavity") != std::string::npos);

    c = device_default_config();
    c.probe_tones = ToneSet::uniform(Rate::hz(1e3), Rate::hz(20e3));
    CHECK(config_error_of(c).find("probe_tones.detuning_hz") != std::string::npos);

    c = device_default_config();
    c.amplifier_noise = -0.1;
    CHECK(config_error_of(c).find("amplifier_noise") != std::string::npos);
}

TEST_CASE("degenerate oscillators trigger the RWA warning") {
    SystemConfig c = device_default_config();
    c.mech[1].omega = c.mech[0].omega;
    CHECK(has_warning(validate(c), "sideband separation violates RWA"));

    c = device_default_config();
    c.mech[0].omega = Rate::hz(1e6);
    CHECK(has_warning(validate(c), "mechanical[0]"));
}

TEST_CASE("validate folds phases and is idempotent") {
    SystemConfig c = device_default_config();
    c.pump_tones.tones[1].phase = -0.5;
    c.pump_tones.tones[3].phase = 7.0;
    const CheckedConfig once = validate(c);
    CHECK(once.config().pump_tones.tones[1].phase == doctest::Approx(2.0 * std::numbers::pi - 0.5));
    CHECK(once.config().pump_tones.tones[3].phase == doctest::Approx(7.0 - 2.0 * std::numbers::pi));
    const CheckedConfig twice = validate(once.config());
    CHECK(twice.config() == once.config());
}

TEST_CASE("fold_phase maps onto [0, 2pi)") {
    CHECK(fold_phase(0.0) == 0.0);
    CHECK(fold_phase(2.0 * std::numbers::pi) == 0.0);
    CHECK(fold_phase(-std::numbers::pi) == doctest::Approx(std::numbers::pi));
    for (double a : {-20.0, -3.0, 0.3, 6.2, 13.0, 1e6}) {
        const double f = fold_phase(a);
        CHECK(f >= 0.0);
        CHECK(f < 2.0 * std::numbers::pi);
        CHECK(std::remainder(f - a, 2.0 * std::numbers::pi) == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("tone sets are addressed by oscillator and sideband") {
    const ToneSet t = ToneSet::make(Rate::hz(100.0), Rate::hz(37.0), Rate::hz(5.0), {0.1, 0.2, 0.3, 0.4});
    CHECK(t.tone(1, Sideband::red).amplitude.in_hz() == 100.0);
    CHECK(t.tone(2, Sideband::blue).amplitude.in_hz() == 37.0);
    CHECK(t.phases().red2 == doctest::Approx(0.3));
    CHECK(t.scaled(2.0).tone(2, Sideband::red).amplitude.in_hz() == 200.0);
    CHECK_THROWS_AS((void)t.tone(3, Sideband::red), ConfigError);
}

TEST_CASE("collective selectors are orthonormal combinations") {
    const double s = std::numbers::sqrt2 / 2.0;
    CHECK(selector_vector(x_plus).isApprox(Eigen::Vector4d(s, 0, s, 0)));
    CHECK(selector_vector(p_minus).isApprox(Eigen::Vector4d(0, s, 0, -s)));
    Eigen::Matrix4d m;
    m << selector_vector(x_plus), selector_vector(p_plus), selector_vector(x_minus), selector_vector(p_minus);
    CHECK((m.transpose() * m).isApprox(Eigen::Matrix4d::Identity()));
}

TEST_CASE("generalized selectors interpolate between their endpoints") {
    const auto g0 = make_generalized(x_plus, p_minus, 0.0);
    CHECK(selector_vector(g0).isApprox(selector_vector(x_plus)));
    const auto gpi = make_generalized(x_plus, p_minus, std::numbers::pi);
    CHECK(selector_vector(gpi).isApprox(selector_vector(p_minus), 1e-12));
    CHECK(make_generalized(x_plus, p_plus, -1.0).angle == doctest::Approx(2.0 * std::numbers::pi - 1.0));
    CHECK_THROWS_AS(make_generalized(x_plus, x_minus, 0.3), std::invalid_argument);
}

TEST_CASE("selectors parse and print") {
    for (const std::string label : {"X1", "P2", "X+", "P-", "X-", "P+"}) {
        CHECK(selector_label(parse_selector(label)) == label);
    }
    const auto g = parse_selector("X+^1.5/P-");
    CHECK(std::holds_alternative<GeneralizedQuadrature>(g));
    CHECK(std::get<GeneralizedQuadrature>(g).angle == doctest::Approx(1.5));
    CHECK(selector_label(parse_selector(selector_label(g))) == selector_label(g));
    CHECK_THROWS_AS(parse_selector("X3"), std::invalid_argument);
    CHECK_THROWS_AS(parse_selector("X+^abc/P-"), std::invalid_argument);
    CHECK_THROWS_AS(parse_selector("X+^1/X-"), std::invalid_argument);
}
