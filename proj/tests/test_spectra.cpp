#include <doctest.h>

#include <algorithm>
#include <numbers>

#include "oracles.hpp"
#include "qmfs/budget.hpp"
#include "qmfs/error.hpp"
#include "qmfs/scenarios.hpp"
#include "qmfs/spectra.hpp"
#include "qmfs/steadystate.hpp"

using namespace qmfs;

namespace {

LinearModel weak_model(double c, double n_cavity = 0.23, double n_amp = 10.0) {
    return assemble_drift(validate(presets::bae_measurement(presets::Cooling::weak, c, n_cavity, n_amp)));
}

OutputMap bae_routing(const LinearModel& m) { return output_routing(m, CavityId::pump, bae_lo_phase(x_plus)); }

SpectrumTrace synthetic_trace(double floor, std::span<const kernels::Lorentzian> peaks, std::size_t n, double span) {
    SpectrumTrace t;
    t.omega = symmetric_grid(span, n);
    t.psd.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = floor;
        for (const auto& p : peaks) {
            s += oracle::lorentzian(t.omega[i], p.center, p.fwhm, p.area);
        }
        t.psd[i] = s;
    }
    return t;
}

} // namespace

TEST_CASE("pole-residue evaluation matches per-frequency LU") {
    for (const SystemConfig& c :
         {presets::bae_measurement(presets::Cooling::weak, 2.0), presets::bae_measurement(presets::Cooling::strong, 10.0),
          presets::with_probe_tomography(presets::entanglement(), x_plus, presets::probe_amplitude_ratio())}) {
        const LinearModel m = assemble_drift(validate(c));
        const std::vector<double> grid = default_grid(m, 513);
        for (CavityId cav : {CavityId::pump, CavityId::probe}) {
            if (cav == CavityId::probe && !m.layout.has_probe) {
                continue;
            }
            for (Detection det : {Detection::homodyne, Detection::phase_insensitive}) {
                const OutputMap r = output_routing(m, cav, 0.4, det);
                const SpectrumTrace fast = output_spectrum(m, r, grid, 3.0);
                const auto slow = output_spectrum_direct(m, r, grid, 3.0);
                for (std::size_t i = 0; i < grid.size(); ++i) {
                    CHECK(fast.psd[i] == doctest::Approx(slow[i]).epsilon(1e-8));
                }
            }
        }
    }
}

TEST_CASE("state spectrum integrates to the steady-state variance") {
    for (const SystemConfig& c : {presets::bae_measurement(presets::Cooling::weak, 3.0), presets::entanglement()}) {
        const LinearModel m = assemble_drift(validate(c));
        const CovarianceMatrix v = solve_lyapunov(m);
        const double w = m.detuning;
        // Entangled peaks are broadened by the cavity far beyond gamma, so the default span is too narrow.
        const std::vector<double> grid = symmetric_grid(3.0 * w, 24001);
        const std::vector<double> centers{-w, w};
        for (const QuadratureSelector& q : {QuadratureSelector{x_plus}, QuadratureSelector{p_plus},
                                            QuadratureSelector{p_minus}}) {
            CAPTURE(selector_label(q));
            const Eigen::VectorXd sel = selector_vector(q);
            const auto s = state_spectrum(m, sel, grid);
            const double area = integrate_excess(grid, s, 0.0, centers);
            CHECK(area == doctest::Approx(quadrature_variance(v, q)).epsilon(5e-3));
        }
    }
}

TEST_CASE("far from the peaks the output sits at the noise floor") {
    const double n_amp = 10.0;
    const double n_c = 0.23;
    const LinearModel m = weak_model(2.0, n_c, n_amp);
    const OutputMap r = bae_routing(m);
    const std::vector<double> far{-0.5 * m.kappa_pump, 0.5 * m.kappa_pump};
    const auto s = output_spectrum_direct(m, r, far, n_amp);
    // Not exactly flat this far out: the mechanical tails still contribute.
    for (double v : s) {
        CHECK(v == doctest::Approx(n_amp + 0.5 + n_c).epsilon(1e-3));
    }
}

TEST_CASE("with a cold cavity the far floor is amplifier noise plus vacuum") {
    const double n_amp = 10.0;
    const LinearModel m = weak_model(2.0, 0.0, n_amp);
    const std::vector<double> far{-50.0 * m.kappa_pump, 50.0 * m.kappa_pump};
    for (double v : output_spectrum_direct(m, bae_routing(m), far, n_amp)) {
        CHECK(std::abs(v - (n_amp + 0.5)) < 1e-6);
    }
}

TEST_CASE("BAE output peaks carry equal areas") {
    const LinearModel m = weak_model(5.0);
    const OutputMap r = bae_routing(m);
    const std::vector<double> grid = default_grid(m, 8001);
    const SpectrumTrace t = output_spectrum(m, r, grid, 10.0);
    const std::size_t mid = grid.size() / 2;
    const double floor = 10.0 + 0.5 + 0.23;
    const double left = integrate_excess(std::span(grid).first(mid + 1), std::span(t.psd).first(mid + 1), floor);
    const double right = integrate_excess(std::span(grid).subspan(mid), std::span(t.psd).subspan(mid), floor);
    CHECK(std::abs(left - right) / (left + right) < 1e-6);
}

TEST_CASE("fit areas agree with direct integration") {
    for (double c : {1.0, 5.0, 30.0}) {
        const LinearModel m = weak_model(c);
        const OutputMap r = bae_routing(m);
        const SpectrumTrace t = output_spectrum(m, r, default_grid(m), 10.0);
        const TwoPeakFit f = fit_two_lorentzians(t);
        const std::vector<double> centers{-m.detuning, m.detuning};
        const double direct = integrate_excess(t.omega, t.psd, f.floor(), centers);
        CHECK(f.left.area + f.right.area == doctest::Approx(direct).epsilon(0.01));
    }
}

TEST_CASE("BAE output peaks are mirror images") {
    const LinearModel m = weak_model(5.0);
    const OutputMap r = bae_routing(m);
    const double w = m.detuning;
    const auto s = output_spectrum_direct(m, r, std::vector<double>{-w, w}, 10.0);
    CHECK(std::abs(s[0] - s[1]) / s[0] < 1e-6);
}

TEST_CASE("two-Lorentzian fit recovers synthetic parameters") {
    const double fwhm = two_pi * 630.0;
    const double w = two_pi * 10e3;
    const std::vector<kernels::Lorentzian> peaks{{-w, fwhm, 1.6}, {w, fwhm, 1.6}};
    const SpectrumTrace t = synthetic_trace(10.73, peaks, 8001, w + 30 * fwhm);
    const TwoPeakFit f = fit_two_lorentzians(t);
    CHECK(f.resolved);
    for (const PeakFit& p : {f.left, f.right}) {
        CHECK(p.fwhm == doctest::Approx(fwhm).epsilon(1e-3));
        CHECK(p.area == doctest::Approx(1.6).epsilon(1e-3));
        CHECK(std::abs(p.center) == doctest::Approx(w).epsilon(1e-6));
    }
    CHECK(f.floor() == doctest::Approx(10.73).epsilon(1e-6));
    const double expected = 10.73 + oracle::lorentzian(w, w, fwhm, 1.6) + oracle::lorentzian(w, -w, fwhm, 1.6);
    CHECK(f.model(w) == doctest::Approx(expected).epsilon(1e-3));
}

TEST_CASE("a flat trace has no peaks to fit") {
    SpectrumTrace t;
    t.omega = symmetric_grid(1e5, 501);
    t.psd.assign(501, 4.0);
    CHECK_THROWS_AS(fit_two_lorentzians(t), NumericalError);
}

TEST_CASE("transduction gain scales with the coupling squared") {
    SystemConfig c = presets::bae_measurement(presets::Cooling::weak, 1.0);
    const LinearModel m1 = assemble_drift(validate(c));
    c.pump_tones = c.pump_tones.scaled(2.0);
    const LinearModel m2 = assemble_drift(validate(c));
    const TransductionGain g1 = calibrate_gain(m1, bae_routing(m1));
    const TransductionGain g2 = calibrate_gain(m2, bae_routing(m2));
    CHECK(g2.gain / g1.gain == doctest::Approx(4.0).epsilon(1e-3));
    CHECK(std::abs(g1.measured.dot(selector_vector(x_plus))) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("no coupling, no transduction") {
    SystemConfig c = presets::bae_measurement(presets::Cooling::weak, 1.0);
    c.pump_tones = c.pump_tones.scaled(0.0);
    const LinearModel m = assemble_drift(validate(c));
    CHECK_THROWS_WITH_AS(calibrate_gain(m, bae_routing(m)), doctest::Contains("no transduction"), std::invalid_argument);
}

TEST_CASE("effective occupation from a fitted spectrum") {
    const double n_amp = 10.0;
    const double c = 2.1;
    const LinearModel m = weak_model(c, 0.0, n_amp);
    const OutputMap r = bae_routing(m);
    const SpectrumTrace t = output_spectrum(m, r, default_grid(m), n_amp);
    const TwoPeakFit f = fit_two_lorentzians(t);
    const TransductionGain g = calibrate_gain(m, r);
    const EffectiveOccupation occ = effective_occupation(f, m.mean_gamma, g.gain);
    const CovarianceMatrix v = solve_lyapunov(m);
    // x2_eff = true variance + imprecision on resonance.
    CHECK(occ.x2_eff - occ.n_imp == doctest::Approx(quadrature_variance(v, x_plus)).epsilon(1e-2));
    const double kappa_ratio = m.kappa_pump / m.kappa_ext_pump;
    CHECK(occ.n_imp == doctest::Approx(budget::imprecision(c, n_amp) * kappa_ratio).epsilon(2e-2));
    CHECK(integrated_variance(f, g.gain) == doctest::Approx(quadrature_variance(v, x_plus)).epsilon(2e-2));
    CHECK(effective_occupation(t, m.mean_gamma, g.gain).x2_eff == doctest::Approx(occ.x2_eff));
}

TEST_CASE("quantum-limited imprecision at C = 2.1") {
    CHECK(budget::imprecision(2.1, 0.0) == doctest::Approx(0.0298).epsilon(1e-3));
}

TEST_CASE("homodyne LO phase selects the signal quadrature") {
    const LinearModel m = weak_model(3.0);
    const double w = m.detuning;
    const double best = bae_lo_phase(x_plus);
    const auto on = output_spectrum_direct(m, output_routing(m, CavityId::pump, best, Detection::homodyne),
                                           std::vector<double>{w}, 0.0);
    const auto off = output_spectrum_direct(
        m, output_routing(m, CavityId::pump, best + std::numbers::pi / 2, Detection::homodyne), std::vector<double>{w}, 0.0);
    CHECK(on[0] > 10.0 * off[0]);
    for (double d : {0.2, 0.7, 1.2}) {
        const auto s = output_spectrum_direct(
            m, output_routing(m, CavityId::pump, best + d, Detection::homodyne), std::vector<double>{w}, 0.0);
        CHECK(s[0] < on[0]);
    }
}

TEST_CASE("integrate_excess on an exact Lorentzian") {
    const double fwhm = 100.0;
    const std::vector<kernels::Lorentzian> peaks{{0.0, fwhm, 2.0}};
    const SpectrumTrace t = synthetic_trace(1.0, peaks, 20001, 30 * fwhm);
    const std::vector<double> centers{0.0};
    CHECK(integrate_excess(t.omega, t.psd, 1.0, centers) == doctest::Approx(2.0).epsilon(1e-4));
    CHECK(integrate_excess(t.omega, t.psd, 1.0) < 2.0);
}

TEST_CASE("spectrum CSV carries a header and one row per point") {
    SpectrumTrace t;
    t.omega = {-two_pi, 0.0, two_pi};
    t.psd = {1.0, 2.0, 3.0};
    const std::string csv = spectrum_csv(t);
    CHECK(csv.rfind("# omega_rel_hz, psd_quanta\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.find("\n1,") != std::string::npos);
}
