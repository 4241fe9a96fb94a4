#include "qmfs/scenarios.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <fmt/format.h>

#include "qmfs/budget.hpp"
#include "qmfs/dynamics.hpp"
#include "qmfs/error.hpp"
#include "qmfs/parallel.hpp"
#include "qmfs/spectra.hpp"
#include "qmfs/steadystate.hpp"

namespace qmfs {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string format_value(double v) {
    return fmt::format("{:.17g}", v);
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        out[i] = lo * std::pow(hi / lo, t);
    }
    return out;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        out[i] = lo + (hi - lo) * t;
    }
    return out;
}

// Row outcome: values in column order, or an error message.
struct RowResult {
    std::vector<double> values;
    std::string error;
};

template <typename Fn>
std::vector<RowResult> run_rows(std::size_t count, unsigned threads, Fn&& fn) {
    std::vector<RowResult> rows(count);
    parallel_for(count, threads, [&](std::size_t i) {
        try {
            rows[i].values = fn(i);
        } catch (const std::exception& e) {
            rows[i].error = e.what();
        }
    });
    return rows;
}

// Appends rows in order; failed rows become NaN rows plus a note.
void collect(Table& table, std::vector<std::string>& notes, const std::vector<RowResult>& rows,
             const std::vector<double>& keys) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].error.empty()) {
            table.rows.push_back(rows[i].values);
            continue;
        }
        std::vector<double> row(table.columns.size(), nan);
        row[0] = keys[i];
        table.rows.push_back(std::move(row));
        notes.push_back(fmt::format("{}: row {} = {}: {}", table.name, table.columns[0], format_value(keys[i]),
                                    rows[i].error));
    }
}

void add_warnings(std::vector<std::string>& notes, const CheckedConfig& checked) {
    for (const auto& w : checked.warnings()) {
        if (std::find(notes.begin(), notes.end(), w) == notes.end()) {
            notes.push_back(w);
        }
    }
}

// What a spectrum analyzer on one cavity output yields after calibration.
struct Readout {
    double x2_eff = nan;
    double n_imp = nan;
    double inferred = nan;
    double integrated = nan;
    double fwhm_left = nan;
    double fwhm_right = nan;
};

Readout read_out(const LinearModel& model, CavityId cavity, double lo_phase, double n_amp,
                 std::span<const double> grid) {
    const OutputMap routing = output_routing(model, cavity, lo_phase);
    const TransductionGain gain = calibrate_gain(model, routing);
    const SpectrumTrace trace = output_spectrum(model, routing, grid, n_amp);
    const TwoPeakFit fit = fit_two_lorentzians(trace);
    const EffectiveOccupation occ = effective_occupation(fit, model.mean_gamma, gain.gain);
    Readout r;
    r.x2_eff = occ.x2_eff;
    r.n_imp = occ.n_imp;
    r.inferred = occ.x2_eff - occ.n_imp;
    r.integrated = integrated_variance(fit, gain.gain);
    r.fwhm_left = fit.left.fwhm;
    r.fwhm_right = fit.right.fwhm;
    return r;
}

// Share of a unit mechanical vector lying in the quadratures heated by a BAE
// measurement of X+ (namely P+ and X-).
double heated_weight(const Eigen::Vector4d& q) {
    const Eigen::Vector4d c = collective_basis() * q;
    return c[1] * c[1] + c[2] * c[2];
}

double strongest_amplitude(const ToneSet& tones) {
    double g = 0.0;
    for (const auto& t : tones.tones) {
        g = std::max(g, t.amplitude.in_hz());
    }
    return g;
}

std::string cooling_name(presets::Cooling c) {
    return c == presets::Cooling::weak ? "weak" : "strong";
}

} // namespace

// ---------------------------------------------------------------------------

std::size_t Table::column_index(const std::string& column) const {
    const auto it = std::find(columns.begin(), columns.end(), column);
    if (it == columns.end()) {
        throw std::out_of_range(fmt::format("table {}: no column '{}'", name, column));
    }
    return static_cast<std::size_t>(it - columns.begin());
}

std::vector<double> Table::column(const std::string& column) const {
    const std::size_t j = column_index(column);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(r[j]);
    }
    return out;
}

std::string Table::to_csv() const {
    std::string out;
    for (const auto& c : comments) {
        out += "# " + c + "\n";
    }
    for (std::size_t j = 0; j < columns.size(); ++j) {
        out += (j ? "," : "") + columns[j];
    }
    out += "\n";
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            out += (j ? "," : "") + format_value(r[j]);
        }
        out += "\n";
    }
    return out;
}

const Table& Report::panel(const std::string& name) const {
    for (const auto& p : panels) {
        if (p.name == name) {
            return p;
        }
    }
    throw std::out_of_range(fmt::format("report {}: no panel '{}'", scenario, name));
}

// ---------------------------------------------------------------------------

namespace presets {

double coupling_for_cooperativity(double c, double kappa, double gamma) {
    if (c < 0.0 || !(kappa > 0.0) || !(gamma > 0.0)) {
        throw std::invalid_argument("coupling_for_cooperativity: need C >= 0, kappa > 0, gamma > 0");
    }
    return std::sqrt(c * kappa * gamma / 4.0);
}

double probe_amplitude_ratio() {
    return std::pow(10.0, probe_amplitude_ratio_db / 20.0);
}

SystemConfig bae_measurement(Cooling cooling, double cooperativity, double n_cavity, double n_amp) {
    const bool weak = cooling == Cooling::weak;
    const double thermal = weak ? 3.2 : 1.0;
    const Rate gamma = Rate::hz(weak ? 630.0 : 4.6e3);
    const Rate detuning = Rate::hz(weak ? 10e3 : 200e3);

    SystemConfig c = device_default_config();
    for (auto& m : c.mech) {
        m.gamma_effective = gamma;
        m.n_thermal = thermal - 0.5;
    }
    c.pump_cavity.n_thermal = n_cavity;
    c.probe_tones.reset();
    c.amplifier_noise = n_amp;
    const double g = coupling_for_cooperativity(cooperativity, c.pump_cavity.kappa().rad_s(), gamma.rad_s());
    c.pump_tones = ToneSet::uniform(Rate::rad_s(g), detuning);
    return c;
}

SystemConfig entanglement(double ratio, double detuning_hz, double thermal_variance, double red_coupling_hz) {
    if (ratio < 0.0) {
        throw ConfigError("entanglement: blue/red ratio must be non-negative");
    }
    SystemConfig c = device_default_config();
    for (auto& m : c.mech) {
        m.gamma_effective = m.gamma_intrinsic;
        m.n_thermal = thermal_variance - 0.5;
    }
    // Ideal readout cavity: no thermal occupation.
    c.pump_cavity.n_thermal = 0.0;
    c.probe_tones.reset();
    c.pump_tones = ToneSet::make(Rate::hz(red_coupling_hz), Rate::hz(ratio * red_coupling_hz), Rate::hz(detuning_hz));
    return c;
}

SystemConfig with_probe_tomography(SystemConfig config, const QuadratureSelector& measured, double amplitude_ratio) {
    if (!config.probe_cavity) {
        throw ConfigError("probe_cavity: tomography needs a probe cavity");
    }
    const Rate g = Rate::hz(amplitude_ratio * strongest_amplitude(config.pump_tones));
    config.probe_tones = ToneSet::uniform(g, config.pump_tones.detuning, bae_phases(measured));
    return config;
}

std::vector<NamedPreset> catalog() {
    SystemConfig tomography = bae_measurement(Cooling::weak, 2.1);
    tomography.pump_tones.detuning = Rate::hz(200e3);
    tomography = with_probe_tomography(tomography, x_plus, probe_amplitude_ratio());
    const SystemConfig entangled = with_probe_tomography(entanglement(), x_plus, probe_amplitude_ratio());
    return {
        {"device", "device values, intrinsic damping, BAE pump on X+ at 121 kHz", device_default_config()},
        {"bae_weak", "weak sideband cooling, BAE measurement of X+ at C = 2.1", bae_measurement(Cooling::weak, 2.1)},
        {"bae_strong", "strong sideband cooling, BAE measurement of X+ at C = 10", bae_measurement(Cooling::strong, 10.0)},
        {"tomography", "BAE on X+ at C = 2.1 with -15 dB probe tomography of X+", tomography},
        {"entanglement", "reduced blue tones (ratio 0.37) with -15 dB probe tomography of X+", entangled},
    };
}

} // namespace presets

// ---------------------------------------------------------------------------
// fig2: noise of a BAE measurement of X+ versus cooperativity.

Report scenario_fig2(const Fig2Options& options) {
    std::vector<double> cs = options.cooperativities.empty() ? log_grid(0.1, 50.0, 25) : options.cooperativities;
    for (double c : cs) {
        if (!(c >= 0.0) || !std::isfinite(c)) {
            throw ConfigError(fmt::format("cooperativities: invalid value {}", c));
        }
    }
    const bool weak = options.cooling == presets::Cooling::weak;

    Report report;
    report.scenario = "fig2";
    report.base_config = presets::bae_measurement(options.cooling, 1.0, options.n_cavity, options.n_amp);
    const double thermal = budget::thermal_variance(report.base_config.mech[0].n_thermal,
                                                    report.base_config.mech[1].n_thermal);
    const double gamma_hz = report.base_config.mech[0].gamma_effective.in_hz();

    const std::vector<std::string> setup{
        fmt::format("cooling preset: {} (<X^2>^T = {}, gamma/2pi = {} Hz, Omega/2pi = {} Hz)", cooling_name(options.cooling),
                    format_value(thermal), format_value(gamma_hz),
                    format_value(report.base_config.pump_tones.detuning.in_hz())),
        fmt::format("n_c^T = {}, n_amp = {}", format_value(options.n_cavity), format_value(options.n_amp)),
    };

    Table noise;
    noise.name = weak ? "fig2B" : "fig2C";
    noise.comments = setup;
    noise.comments.push_back("noise of the measured quadrature X+ versus pump cooperativity, in quanta");
    noise.comments.push_back("model columns: x2 (steady state), x2_eff and n_imp (fitted output spectrum), x2_conjugate (P+)");
    noise.comments.push_back("budget columns: thermal, n_qba, n_cba, n_imp_budget, n_imp_ql (n_amp = 0), x2_eff_budget, conjugate_budget, fql");
    noise.columns = {"C",       "x2",           "x2_eff",       "n_imp",           "x2_conjugate",
                     "thermal", "n_qba",        "n_cba",        "n_imp_budget",    "n_imp_ql",
                     "x2_eff_budget", "conjugate_budget", "fql"};

    Table widths;
    widths.name = weak ? "fig2D" : "fig2E";
    widths.comments = setup;
    widths.comments.push_back("fitted linewidths (FWHM) of the left and right output peaks, Hz");
    widths.columns = {"C", "fwhm_left_hz", "fwhm_right_hz", "gamma_hz"};

    const auto rows = run_rows(cs.size(), options.threads, [&](std::size_t i) {
        const double c = cs[i];
        const SystemConfig cfg = presets::bae_measurement(options.cooling, c, options.n_cavity, options.n_amp);
        const CheckedConfig checked = validate(cfg);
        const LinearModel model = assemble_drift(checked);
        const CovarianceMatrix v = solve_lyapunov(model);
        const budget::NoiseBudget nb = budget::make_budget(thermal, c, options.n_cavity, options.n_amp);

        Readout r;
        if (c > 0.0) {
            r = read_out(model, CavityId::pump, bae_lo_phase(x_plus), options.n_amp,
                         default_grid(model, options.spectrum_points));
        }
        return std::vector<double>{c,
                                   quadrature_variance(v, x_plus),
                                   r.x2_eff,
                                   r.n_imp,
                                   quadrature_variance(v, p_plus),
                                   nb.thermal,
                                   nb.qba,
                                   nb.cba,
                                   nb.imprecision,
                                   budget::imprecision(c, 0.0),
                                   nb.measured_total(),
                                   nb.conjugate_total(),
                                   budget::full_quantum_limit,
                                   r.fwhm_left / two_pi,
                                   r.fwhm_right / two_pi};
    });

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (!row.error.empty()) {
            noise.rows.emplace_back(noise.columns.size(), nan);
            noise.rows.back()[0] = cs[i];
            widths.rows.push_back({cs[i], nan, nan, gamma_hz});
            report.notes.push_back(fmt::format("C = {}: {}", format_value(cs[i]), row.error));
            continue;
        }
        noise.rows.emplace_back(row.values.begin(), row.values.begin() + 13);
        widths.rows.push_back({cs[i], row.values[13], row.values[14], gamma_hz});
        if (cs[i] > 0.0 && std::isnan(row.values[2])) {
            report.notes.push_back(fmt::format("C = {}: no transduction", format_value(cs[i])));
        }
    }
    add_warnings(report.notes, validate(report.base_config));

    if (weak) {
        Table spectra;
        spectra.name = "fig2A";
        spectra.comments = setup;
        spectra.comments.push_back("pump-cavity output PSD (quanta) versus offset from the cavity resonance");
        const std::vector<double> shown{1.0, 5.0, 20.0};
        spectra.columns = {"omega_rel_hz"};
        for (double c : shown) {
            spectra.columns.push_back("psd_C" + format_value(c));
        }
        const LinearModel first = assemble_drift(validate(presets::bae_measurement(options.cooling, shown[0])));
        const std::vector<double> grid = default_grid(first, options.spectrum_points);
        std::vector<std::vector<double>> traces(shown.size());
        parallel_for(shown.size(), options.threads, [&](std::size_t k) {
            const LinearModel m = assemble_drift(
                validate(presets::bae_measurement(options.cooling, shown[k], options.n_cavity, options.n_amp)));
            traces[k] = output_spectrum(m, output_routing(m, CavityId::pump, bae_lo_phase(x_plus)), grid,
                                        options.n_amp)
                            .psd;
        });
        for (std::size_t i = 0; i < grid.size(); ++i) {
            std::vector<double> row{grid[i] / two_pi};
            for (const auto& t : traces) {
                row.push_back(t[i]);
            }
            spectra.rows.push_back(std::move(row));
        }
        report.panels.push_back(std::move(spectra));
    }
    report.panels.push_back(std::move(noise));
    report.panels.push_back(std::move(widths));
    return report;
}

// ---------------------------------------------------------------------------
// fig3: moving the measured quadrature inside and across the QMFS.

namespace {

Report fig3_pump_sweep(const Fig3Options& options, bool towards_p_plus) {
    const std::string name = towards_p_plus ? "fig3B" : "fig3C";
    const CollectiveQuadrature second = towards_p_plus ? p_plus : p_minus;

    Report report;
    report.scenario = "fig3";
    report.base_config =
        presets::bae_measurement(presets::Cooling::weak, options.cooperativity, options.n_cavity, options.n_amp);
    const double thermal =
        budget::thermal_variance(report.base_config.mech[0].n_thermal, report.base_config.mech[1].n_thermal);
    const budget::NoiseBudget nb = budget::make_budget(thermal, options.cooperativity, options.n_cavity, options.n_amp);

    Table t;
    t.name = name;
    t.comments = {
        fmt::format("pump-detected BAE while rotating the measured quadrature from X+ towards {}",
                    selector_label(second)),
        fmt::format("C = {}, <X^2>^T = {}, n_c^T = {}, n_amp = {}", format_value(options.cooperativity),
                    format_value(thermal), format_value(options.n_cavity), format_value(options.n_amp)),
        "angle: generalized-quadrature angle a, measured q = cos(a/2) X+ + sin(a/2) second",
        "x2: steady-state variance of q; x2_inferred: x2_eff - n_imp from the fitted spectrum",
        "budget columns: thermal (backaction-free level), qba_level = thermal + n_qba",
    };
    t.columns = {"angle", "x2", "x2_inferred", "x2_eff", "n_imp", "thermal", "qba_level"};

    const std::vector<double> angles = linear_grid(0.0, std::numbers::pi, options.phase_points);
    const auto rows = run_rows(angles.size(), options.threads, [&](std::size_t i) {
        const GeneralizedQuadrature q = make_generalized(x_plus, second, angles[i]);
        SystemConfig cfg = report.base_config;
        cfg.pump_tones.set_phases(bae_phases(q));
        const LinearModel model = assemble_drift(validate(cfg));
        const CovarianceMatrix v = solve_lyapunov(model);
        const Readout r = read_out(model, CavityId::pump, bae_lo_phase(q), options.n_amp,
                                   default_grid(model, options.spectrum_points));
        return std::vector<double>{angles[i], quadrature_variance(v, q), r.inferred, r.x2_eff, r.n_imp,
                                   nb.thermal, nb.thermal + nb.qba};
    });
    collect(t, report.notes, rows, angles);
    add_warnings(report.notes, validate(report.base_config));
    report.panels.push_back(std::move(t));
    return report;
}

struct Route {
    double code;
    CollectiveQuadrature first;
    CollectiveQuadrature second;
};

Report fig3_tomography(const Fig3Options& options) {
    Report report;
    report.scenario = "fig3";
    SystemConfig base =
        presets::bae_measurement(presets::Cooling::weak, options.cooperativity, options.n_cavity, options.n_amp);
    // Tomography is taken at the larger detuning; the pump cooperativity is kept.
    base.pump_tones.detuning = Rate::hz(200e3);
    report.base_config = base;
    const double thermal = budget::thermal_variance(base.mech[0].n_thermal, base.mech[1].n_thermal);
    const budget::Backaction ba = budget::backaction(options.cooperativity, options.n_cavity);
    const double ratio = options.probe_backaction ? presets::probe_amplitude_ratio() : 0.0;

    Table t;
    t.name = "fig3D";
    t.comments = {
        "probe-cavity tomography while the pump performs a BAE measurement of X+",
        fmt::format("C = {}, <X^2>^T = {}, n_c^T = {}, Omega/2pi = {} Hz, probe amplitude ratio = {}",
                    format_value(options.cooperativity), format_value(thermal), format_value(options.n_cavity),
                    format_value(base.pump_tones.detuning.in_hz()), format_value(ratio)),
        "route 0: phi, X+ -> P-; route 1: theta, X+ -> P+; route 2: P+ -> X-",
        "x2: steady-state variance with probe tones; x2_probe_free: same with probe tones off",
        "x2_inferred: x2_eff - n_imp from the probe output spectrum (nan without probe tones)",
        "budget columns: theory_qba = thermal + n_qba w, theory_qba_cba = thermal + (n_qba + n_cba) w, "
        "w = weight of the probed quadrature on {P+, X-}",
    };
    t.columns = {"route", "angle", "x2", "x2_probe_free", "x2_inferred", "theory_qba", "theory_qba_cba"};

    const std::array<Route, 3> routes{Route{0.0, x_plus, p_minus}, Route{1.0, x_plus, p_plus},
                                      Route{2.0, p_plus, x_minus}};
    const std::vector<double> angles = linear_grid(0.0, std::numbers::pi, options.phase_points);
    const std::size_t n = routes.size() * angles.size();
    const auto rows = run_rows(n, options.threads, [&](std::size_t i) {
        const Route& route = routes[i / angles.size()];
        const double angle = angles[i % angles.size()];
        const GeneralizedQuadrature q = make_generalized(route.first, route.second, angle);
        const Eigen::Vector4d qv = selector_vector(q);

        const SystemConfig probed = presets::with_probe_tomography(base, q, ratio);
        const LinearModel model = assemble_drift(validate(probed));
        const double x2 = quadrature_variance(solve_lyapunov(model), q);
        const LinearModel free_model = assemble_drift(validate(presets::with_probe_tomography(base, q, 0.0)));
        const double x2_free = quadrature_variance(solve_lyapunov(free_model), q);
        double inferred = nan;
        if (ratio > 0.0) {
            inferred = read_out(model, CavityId::probe, bae_lo_phase(q), options.n_amp,
                                default_grid(model, options.spectrum_points))
                           .inferred;
        }
        const double w = heated_weight(qv);
        return std::vector<double>{route.code, angle, x2, x2_free, inferred, thermal + ba.qba * w,
                                   thermal + (ba.qba + ba.cba) * w};
    });
    std::vector<double> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        keys[i] = routes[i / angles.size()].code;
    }
    collect(t, report.notes, rows, keys);
    add_warnings(report.notes, validate(presets::with_probe_tomography(base, x_plus, ratio)));
    report.panels.push_back(std::move(t));
    return report;
}

} // namespace

Report scenario_fig3(const Fig3Options& options) {
    if (options.phase_points < 2) {
        throw ConfigError("phase_points: need at least 2");
    }
    switch (options.sweep) {
    case Fig3Sweep::xp_to_pp:
        return fig3_pump_sweep(options, true);
    case Fig3Sweep::xp_to_pm:
        return fig3_pump_sweep(options, false);
    case Fig3Sweep::tomography:
        return fig3_tomography(options);
    }
    throw std::logic_error("scenario_fig3: unknown sweep");
}

// ---------------------------------------------------------------------------
// fig4: entanglement by reduced blue tones, verified by probe tomography.

namespace {

struct TomographyPoint {
    double x2 = nan;
    double x2_free = nan;
    double integrated = nan;
};

TomographyPoint tomography_point(const SystemConfig& base, const GeneralizedQuadrature& q, double ratio,
                                 double n_amp, std::size_t points, bool with_spectrum) {
    TomographyPoint p;
    const LinearModel model = assemble_drift(validate(presets::with_probe_tomography(base, q, ratio)));
    p.x2 = quadrature_variance(solve_lyapunov(model), q);
    const LinearModel free_model = assemble_drift(validate(presets::with_probe_tomography(base, q, 0.0)));
    p.x2_free = quadrature_variance(solve_lyapunov(free_model), q);
    if (with_spectrum && ratio > 0.0) {
        const double span = 2.0 * model.detuning;
        p.integrated = read_out(model, CavityId::probe, bae_lo_phase(q), n_amp, symmetric_grid(span, points))
                           .integrated;
    }
    return p;
}

} // namespace

Report scenario_fig4(const Fig4Options& options) {
    if (options.phase_points < 2) {
        throw ConfigError("phase_points: need at least 2");
    }
    const double ratio = options.probe_backaction ? presets::probe_amplitude_ratio() : 0.0;
    const SystemConfig base =
        presets::entanglement(options.ratio, options.detuning_hz, options.thermal_variance, options.red_coupling_hz);
    SystemConfig contrast = base;
    contrast.pump_tones.detuning = Rate::hz(options.contrast_detuning_hz);
    if (contrast.probe_tones) {
        contrast.probe_tones->detuning = contrast.pump_tones.detuning;
    }

    Report report;
    report.scenario = "fig4";
    report.base_config = base;
    // Instability of the preset itself is a scenario error, not a row error.
    assemble_drift(validate(base));

    const std::vector<std::string> setup{
        fmt::format("|G_-|/2pi = {} Hz, |G_+|/|G_-| = {}, <X^2>^T = {}, n_amp = {}",
                    format_value(options.red_coupling_hz), format_value(options.ratio),
                    format_value(options.thermal_variance), format_value(options.n_amp)),
        fmt::format("probe tomography amplitude ratio = {}", format_value(ratio)),
    };

    // Panel A: probe output spectra at four tomography angles inside {X+, P-}.
    Table spectra;
    spectra.name = "fig4A";
    spectra.comments = setup;
    spectra.comments.push_back(fmt::format("probe-cavity output PSD (quanta), Omega/2pi = {} Hz", format_value(options.detuning_hz)));
    spectra.comments.push_back("columns psd_k: tomography of cos(phi/2) X+ + sin(phi/2) P- with phi = k pi/3");
    spectra.columns = {"omega_rel_hz", "psd_0", "psd_1", "psd_2", "psd_3"};
    if (ratio > 0.0) {
        const std::vector<double> grid = symmetric_grid(2.0 * two_pi * options.detuning_hz, options.spectrum_points);
        std::vector<std::vector<double>> traces(4);
        parallel_for(4, options.threads, [&](std::size_t k) {
            const GeneralizedQuadrature q = make_generalized(x_plus, p_minus, static_cast<double>(k) * std::numbers::pi / 3.0);
            const LinearModel m = assemble_drift(validate(presets::with_probe_tomography(base, q, ratio)));
            traces[k] =
                output_spectrum(m, output_routing(m, CavityId::probe, bae_lo_phase(q)), grid, options.n_amp).psd;
        });
        for (std::size_t i = 0; i < grid.size(); ++i) {
            spectra.rows.push_back({grid[i] / two_pi, traces[0][i], traces[1][i], traces[2][i], traces[3][i]});
        }
    } else {
        report.notes.push_back("fig4A: probe tones off, no tomography spectra");
    }
    report.panels.push_back(std::move(spectra));

    const std::vector<double> angles = linear_grid(0.0, std::numbers::pi, options.phase_points);
    const std::vector<std::string> plane_columns{"angle", "x2", "x2_probe_free", "x2_integrated", "vacuum"};

    // Panels B and C: variance versus tomography angle.
    auto plane = [&](const std::string& name, const SystemConfig& cfg, CollectiveQuadrature second) {
        Table t;
        t.name = name;
        t.comments = setup;
        t.comments.push_back(fmt::format("Omega/2pi = {} Hz; probed q = cos(a/2) X+ + sin(a/2) {}",
                                         format_value(cfg.pump_tones.detuning.in_hz()), selector_label(second)));
        t.comments.push_back("x2: steady state with probe tones; x2_probe_free: probe tones off; "
                             "x2_integrated: integrated probe spectrum peaks over the calibrated gain");
        t.columns = plane_columns;
        const auto rows = run_rows(angles.size(), options.threads, [&](std::size_t i) {
            const TomographyPoint p = tomography_point(cfg, make_generalized(x_plus, second, angles[i]), ratio,
                                                       options.n_amp, options.spectrum_points, true);
            return std::vector<double>{angles[i], p.x2, p.x2_free, p.integrated, 0.5};
        });
        collect(t, report.notes, rows, angles);
        add_warnings(report.notes, validate(cfg));
        return t;
    };
    report.panels.push_back(plane("fig4B", contrast, p_plus));
    report.panels.push_back(plane("fig4C", base, p_minus));

    // Panel D: Duan sum of two orthogonal quadratures inside {X+, P-}.
    Table duan;
    duan.name = "fig4D";
    duan.comments = setup;
    duan.comments.push_back(fmt::format("Omega/2pi = {} Hz; duan = <(X+^phi)^2> + <(X+^(phi+pi))^2>, separable if >= 1",
                                        format_value(options.detuning_hz)));
    duan.comments.push_back("duan: each quadrature probed in its own tomography setting; duan_probe_free: probe tones off");
    duan.columns = {"phi", "duan", "duan_probe_free", "margin_db", "margin_db_probe_free", "bound"};
    const auto rows = run_rows(angles.size(), options.threads, [&](std::size_t i) {
        const TomographyPoint a = tomography_point(base, make_generalized(x_plus, p_minus, angles[i]), ratio,
                                                   options.n_amp, options.spectrum_points, false);
        const TomographyPoint b = tomography_point(base, make_generalized(x_plus, p_minus, angles[i] + std::numbers::pi),
                                                   ratio, options.n_amp, options.spectrum_points, false);
        const double d = a.x2 + b.x2;
        const double d_free = a.x2_free + b.x2_free;
        return std::vector<double>{angles[i], d, d_free, budget::duan_margin_db(d), budget::duan_margin_db(d_free), 1.0};
    });
    collect(duan, report.notes, rows, angles);
    report.panels.push_back(std::move(duan));
    return report;
}

// ---------------------------------------------------------------------------
// Force sensing inside the QMFS.

Report scenario_force(const ForceOptions& options) {
    const std::vector<double> cs =
        options.cooperativities.empty() ? std::vector<double>{0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0} : options.cooperativities;
    for (double c : cs) {
        if (!(c > 0.0) || !std::isfinite(c)) {
            throw ConfigError(fmt::format("cooperativities: invalid value {}", c));
        }
    }
    Report report;
    report.scenario = "force";
    report.base_config = presets::bae_measurement(presets::Cooling::weak, 1.0, 0.23, options.n_amp);

    Table t;
    t.name = "force";
    t.comments = {
        "coherent force on P- at the peak frequency Omega, read out by BAE measurements of X+ and of P-",
        fmt::format("weak-cooling preset, n_c^T = 0.23, n_amp = {}, force = {} rad/s",
                    format_value(options.n_amp), format_value(options.force)),
        "signal: output amplitude at the tone (sqrt of quanta per unit bandwidth); noise: output PSD there",
        "snr = signal^2 / noise; x2_*: steady-state variance of the measured quadrature (force-free)",
    };
    t.columns = {"C",           "signal_xp", "noise_xp", "snr_xp", "x2_xp",
                 "signal_pm",   "noise_pm",  "snr_pm",   "x2_pm"};

    const auto rows = run_rows(cs.size(), options.threads, [&](std::size_t i) {
        std::vector<double> row{cs[i]};
        for (const CollectiveQuadrature measured : {x_plus, p_minus}) {
            SystemConfig cfg = presets::bae_measurement(presets::Cooling::weak, cs[i], 0.23, options.n_amp);
            cfg.pump_tones.set_phases(bae_phases(measured));
            const LinearModel model = assemble_drift(validate(cfg));
            const OutputMap routing = output_routing(model, CavityId::pump, bae_lo_phase(measured));
            const double w = model.detuning;

            Eigen::VectorXd f = Eigen::VectorXd::Zero(model.layout.dim());
            f.segment(model.layout.mech_begin(), 4) = collective_basis().transpose().col(3) * options.force;
            const Eigen::VectorXcd h = routing.rows.cast<std::complex<double>>() * susceptibility(model, w) *
                                       f.cast<std::complex<double>>();
            double power = 0.0;
            for (Eigen::Index r = 0; r < h.size(); ++r) {
                power += routing.weights[r] * std::norm(h[r]);
            }
            const std::array<double, 1> at{w};
            const double noise = output_spectrum(model, routing, at, options.n_amp).psd[0];
            const double x2 = quadrature_variance(solve_lyapunov(model), measured);
            row.insert(row.end(), {std::sqrt(power), noise, power / noise, x2});
        }
        return row;
    });
    collect(t, report.notes, rows, cs);
    report.panels.push_back(std::move(t));
    return report;
}

} // namespace qmfs
