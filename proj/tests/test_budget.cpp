#include <doctest.h>

#include <cmath>
#include <limits>

#include "qmfs/budget.hpp"
#include "qmfs/dynamics.hpp"
#include "qmfs/model.hpp"
#include "qmfs/scenarios.hpp"
#include "qmfs/spectra.hpp"
#include "qmfs/steadystate.hpp"

using namespace qmfs;

TEST_CASE("cooperativity definition") {
    const double kappa = two_pi * 1.58e6;
    const double gamma = two_pi * 69.5;
    const double g = two_pi * 100e3;
    CHECK(budget::cooperativity(g, kappa, gamma) == doctest::Approx(4.0 * 100e3 * 100e3 / (1.58e6 * 69.5)));
    CHECK(budget::cooperativity(0.0, kappa, gamma) == 0.0);
    CHECK_THROWS_AS(budget::cooperativity(-1.0, kappa, gamma), std::invalid_argument);
    CHECK_THROWS_AS(budget::cooperativity(g, 0.0, gamma), std::invalid_argument);
    CHECK_THROWS_AS(budget::cooperativity(g, kappa, -1.0), std::invalid_argument);
}

TEST_CASE("backaction and imprecision at C = 2.1") {
    const auto ba = budget::backaction(2.1, 0.23);
    CHECK(ba.qba == doctest::Approx(4.2));
    CHECK(ba.cba == doctest::Approx(1.932));
    CHECK(budget::imprecision(2.1, 0.0) == doctest::Approx(1.0 / (16.0 * 2.1)));
    CHECK(std::isinf(budget::imprecision(0.0, 10.0)));
}

TEST_CASE("thermal variance of the device baths") {
    CHECK(budget::thermal_variance(28.0, 28.0) == doctest::Approx(28.5));
    CHECK(budget::thermal_variance(0.0, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("Duan margin in dB") {
    CHECK(budget::duan_margin_db(std::pow(10.0, -0.14)) == doctest::Approx(-1.4));
    CHECK(budget::duan_margin_db(1.0) == doctest::Approx(0.0));
    CHECK(budget::duan_margin_db(2.0) == doctest::Approx(3.0103).epsilon(1e-4));
}

TEST_CASE("sideband cooling lands near the weak-cooling operating point") {
    const double gamma0 = 69.5;
    const double gamma = 630.0;
    const double c_cool = gamma / gamma0 - 1.0;
    const auto r = budget::sideband_cooling_effective(gamma0, 28.0, c_cool);
    CHECK(r.gamma == doctest::Approx(gamma));
    CHECK(r.n + 0.5 == doctest::Approx(3.2).epsilon(0.25));

    const auto inf = budget::sideband_cooling_effective(gamma0, 28.0, std::numeric_limits<double>::infinity(), 0.1);
    CHECK(inf.n == doctest::Approx(0.1));
    CHECK_THROWS_AS(budget::sideband_cooling_effective(gamma0, 28.0, -1.0), std::invalid_argument);
}

TEST_CASE("budget terms are monotone in the cooperativity") {
    double prev_imp = std::numeric_limits<double>::infinity();
    double prev_conj = 0.0;
    for (double c : {0.1, 0.5, 1.0, 5.0, 20.0, 50.0}) {
        const auto b = budget::make_budget(3.2, c, 0.23, 10.0);
        CHECK(b.imprecision < prev_imp);
        CHECK(b.conjugate_total() > prev_conj);
        CHECK(b.measured_total() == doctest::Approx(3.2 + b.imprecision));
        prev_imp = b.imprecision;
        prev_conj = b.conjugate_total();
    }
}

TEST_CASE("technical heating adds to the thermal term") {
    const budget::TechnicalHeating heating = [](double c) { return 0.1 * c; };
    const auto plain = budget::make_budget(3.2, 5.0, 0.23, 10.0);
    const auto heated = budget::make_budget(3.2, 5.0, 0.23, 10.0, heating);
    CHECK(heated.thermal == doctest::Approx(plain.thermal + 0.5));
    CHECK(heated.qba == plain.qba);
    CHECK(heated.imprecision == plain.imprecision);
}

TEST_CASE("conjugate total tracks the full model in the adiabatic regime") {
    for (double c : {0.5, 2.1, 10.0}) {
        CAPTURE(c);
        const SystemConfig cfg = presets::bae_measurement(presets::Cooling::weak, c);
        const LinearModel m = assemble_drift(validate(cfg));
        REQUIRE(m.kappa_pump / cfg.pump_tones.tones[0].amplitude.rad_s() >= 20.0);
        REQUIRE(m.kappa_pump / m.detuning >= 5.0);
        const auto b = budget::make_budget(3.2, c, cfg.pump_cavity.n_thermal, cfg.amplifier_noise);
        CHECK(b.conjugate_total() == doctest::Approx(quadrature_variance(solve_lyapunov(m), p_plus)).epsilon(0.05));
    }
}

TEST_CASE("measured total tracks the fitted x2_eff") {
    for (double c : {1.0, 3.0, 10.0, 30.0}) {
        CAPTURE(c);
        const SystemConfig cfg = presets::bae_measurement(presets::Cooling::weak, c);
        const LinearModel m = assemble_drift(validate(cfg));
        const auto b = budget::make_budget(3.2, c, cfg.pump_cavity.n_thermal, cfg.amplifier_noise);
        const OutputMap r = output_routing(m, CavityId::pump, bae_lo_phase(x_plus));
        const TwoPeakFit f = fit_two_lorentzians(output_spectrum(m, r, default_grid(m), cfg.amplifier_noise));
        const auto occ = effective_occupation(f, m.mean_gamma, calibrate_gain(m, r).gain);
        CHECK(b.measured_total() == doctest::Approx(occ.x2_eff).epsilon(0.10));
    }
}
