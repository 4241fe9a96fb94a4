// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <fmt/core.h>

#include "oracles.hpp"
#include "qmfs/budget.hpp"
#include "qmfs/cli.hpp"
#include "qmfs/dynamics.hpp"
#include "qmfs/scenarios.hpp"
#include "qmfs/spectra.hpp"
#include "qmfs/steadystate.hpp"

using namespace qmfs;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string title;
    std::function<Outcome()> run;
    double time_limit_s = 0.0;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    }
    return g;
}

// Every model solved by the suite is recorded for the physicality checks of criterion 9.
std::vector<SystemConfig>& solved_configs() {
    static std::vector<SystemConfig> all;
    return all;
}

CovarianceMatrix solve(const SystemConfig& c) {
    solved_configs().push_back(c);
    return solve_lyapunov(assemble_drift(validate(c)));
}

Outcome lyapunov_vs_integration() {
    std::mt19937_64 rng(20240611);
    double worst = 0.0;
    int n = 0;
    while (n < 24) {
        const SystemConfig c = oracle::random_config(rng);
        const LinearModel m = assemble_drift(validate(c), {.check_stability = false});
        if (max_real_eigenvalue(m.drift) > -1e-3 * m.mean_gamma) {
            continue;
        }
        const Eigen::MatrixXd v = solve(c).values;
        const Eigen::MatrixXd ref = oracle::lyapunov_by_integration(m.drift, m.diffusion);
        worst = std::max(worst, (v - ref).norm() / ref.norm());
        ++n;
    }
    return {worst < 1e-6, fmt::format("{} stable configs, max relative Frobenius error {:.3g}", n, worst)};
}

Outcome bae_invariance() {
    double lo = 1e300;
    double hi = 0.0;
    for (double c : log_grid(0.1, 50.0, 25)) {
        SystemConfig cfg = presets::bae_measurement(presets::Cooling::strong, c, 0.0);
        cfg.pump_tones.set_phases({});
        const double x2 = quadrature_variance(solve(cfg), x_plus);
        lo = std::min(lo, x2);
        hi = std::max(hi, x2);
    }
    const double spread = (hi - lo) / lo;
    return {spread < 0.01, fmt::format("<X+^2> in [{:.6f}, {:.6f}], spread {:.3g}", lo, hi, spread)};
}

Outcome conjugate_heating() {
    double worst = 0.0;
    double min_ratio = 1e300;
    for (double n_c : {0.0, 0.23}) {
        for (double c : {0.5, 2.1, 10.0}) {
            const SystemConfig cfg = presets::bae_measurement(presets::Cooling::weak, c, n_c);
            const CheckedConfig chk = validate(cfg);
            min_ratio = std::min(min_ratio, chk.kappa_pump() / cfg.pump_tones.tones[0].amplitude.rad_s());
            const double thermal = budget::thermal_variance(cfg.mech[0].n_thermal, cfg.mech[1].n_thermal);
            const auto ba = budget::backaction(c, n_c);
            const double heating = quadrature_variance(solve(cfg), p_plus) - thermal;
            worst = std::max(worst, rel(heating, ba.qba + ba.cba));
        }
    }
    return {worst < 0.05 && min_ratio >= 20.0,
            fmt::format("kappa/G >= {:.1f}, max relative deviation from 2C + 4C n_c {:.3g}", min_ratio, worst)};
}

Outcome imprecision_law() {
    double worst = 0.0;
    std::string where;
    for (double n_amp : {0.0, 10.0, 30.0}) {
        for (double c : {1.0, 3.0, 10.0, 30.0}) {
            const SystemConfig cfg = presets::bae_measurement(presets::Cooling::weak, c, 0.0, n_amp);
            solved_configs().push_back(cfg);
            const LinearModel m = assemble_drift(validate(cfg));
            const OutputMap r = output_routing(m, CavityId::pump, bae_lo_phase(x_plus));
            const TwoPeakFit fit = fit_two_lorentzians(output_spectrum(m, r, default_grid(m), n_amp));
            const double n_imp = effective_occupation(fit, m.mean_gamma, calibrate_gain(m, r).gain).n_imp;
            const double d = rel(n_imp, budget::imprecision(c, n_amp));
            if (d > worst) {
                worst = d;
                where = fmt::format("C = {}, n_amp = {}", c, n_amp);
            }
        }
    }
    return {worst < 0.10, fmt::format("max relative deviation {:.3g} at {}", worst, where)};
}

Outcome strong_cooling_margins() {
    Fig2Options o;
    o.cooling = presets::Cooling::strong;
    const Report r = scenario_fig2(o);
    const Table& t = r.panel("fig2C");
    const auto cs = t.column("C");
    const auto x2 = t.column("x2");
    const auto qba = t.column("n_qba");
    const auto x2_eff = t.column("x2_eff");
    double best_db = 1e300;
    double best_c = 0.0;
    for (std::size_t i = 0; i < x2.size(); ++i) {
        if (qba[i] > 0.0) {
            const double db = 10.0 * std::log10(x2[i] / qba[i]);
            if (db < best_db) {
                best_db = db;
                best_c = cs[i];
            }
        }
    }
    const auto it = std::min_element(x2_eff.begin(), x2_eff.end(),
                                     [](double a, double b) { return std::isnan(b) || (!std::isnan(a) && a < b); });
    const double min_eff = *it;
    return {best_db <= -8.0 && min_eff < 2.0,
            fmt::format("<X+^2>/n_qba reaches {:.2f} dB at C = {:.3g}; min x2_eff = {:.4f} at C = {:.3g}", best_db,
                        best_c, min_eff, cs[static_cast<std::size_t>(it - x2_eff.begin())])};
}

Outcome linewidth_invariance() {
    Fig2Options o;
    o.cooling = presets::Cooling::weak;
    o.cooperativities = log_grid(1.0, 30.0, 12);
    const Report r = scenario_fig2(o);
    const Table& t = r.panel("fig2D");
    std::vector<double> w = t.column("fwhm_left_hz");
    const auto right = t.column("fwhm_right_hz");
    w.insert(w.end(), right.begin(), right.end());
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    const double spread = (*hi - *lo) / *lo;
    return {spread < 0.05 && std::none_of(w.begin(), w.end(), [](double x) { return std::isnan(x); }),
            fmt::format("FWHM in [{:.2f}, {:.2f}] Hz, spread {:.3g}", *lo, *hi, spread)};
}

Outcome tomography_composition() {
    const CovarianceMatrix v = solve(presets::entanglement());
    double worst = 0.0;
    for (int k = 0; k < 32; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / 32.0;
        for (const auto& [a, b] : {std::pair{x_plus, p_minus}, std::pair{x_plus, p_plus}}) {
            const GeneralizedQuadrature g = make_generalized(a, b, phi);
            const Eigen::Vector4d q = selector_vector(g);
            worst = std::max(worst, rel(generalized_variance(v, g), q.dot(v.mechanical() * q)));
        }
    }

    Fig3Options o;
    o.sweep = Fig3Sweep::tomography;
    o.phase_points = 9;
    const Report r = scenario_fig3(o);
    const Table& t = r.panel("fig3D");
    const auto inferred = t.column("x2_inferred");
    const auto free = t.column("x2_probe_free");
    double probe = 0.0;
    for (std::size_t i = 0; i < inferred.size(); ++i) {
        probe = std::max(probe, std::isnan(inferred[i]) ? 1.0 : rel(inferred[i], free[i]));
    }
    return {worst < 1e-12 && probe < 0.05,
            fmt::format("closed form vs q^T V q: max rel {:.2g} over 32 angles; probe-inferred vs "
                        "probe-backaction-free: max rel {:.3g} over {} tomography rows",
                        worst, probe, inferred.size())};
}

Outcome entanglement() {
    Fig4Options o;
    o.phase_points = 17;
    const Report r = scenario_fig4(o);
    const Table& d = r.panel("fig4D");
    const auto duan = d.column("duan");
    const auto margin = d.column("margin_db");
    const double worst = *std::max_element(duan.begin(), duan.end());
    const auto [mlo, mhi] = std::minmax_element(margin.begin(), margin.end());
    const auto x2 = r.panel("fig4C").column("x2");
    const double x2_min = *std::min_element(x2.begin(), x2.end());
    const bool margin_ok = *mlo >= -2.4 && *mhi <= -0.4;
    return {worst < 1.0 && margin_ok && x2_min < 0.5,
            fmt::format("max Duan {:.4f} over {} phases; margin {:.3f}..{:.3f} dB (reference -1.4 dB +- 1); "
                        "min <X+^2> in the X+/P- plane {:.4f}",
                        worst, duan.size(), *mlo, *mhi, x2_min)};
}

Outcome parseval_and_physicality() {
    double worst_out = 0.0;
    double worst_state = 0.0;
    const std::vector<SystemConfig> bae{presets::bae_measurement(presets::Cooling::weak, 2.1),
                                        presets::bae_measurement(presets::Cooling::weak, 20.0),
                                        presets::bae_measurement(presets::Cooling::strong, 10.0)};
    for (const SystemConfig& c : bae) {
        const LinearModel m = assemble_drift(validate(c));
        const CovarianceMatrix v = solve(c);
        const double x2 = quadrature_variance(v, x_plus);
        const std::vector<double> grid = default_grid(m);
        const std::vector<double> centers{-m.detuning, m.detuning};
        const OutputMap r = output_routing(m, CavityId::pump, bae_lo_phase(x_plus));
        const SpectrumTrace s = output_spectrum(m, r, grid, c.amplifier_noise);
        const double floor = c.amplifier_noise + 0.5 + c.pump_cavity.n_thermal;
        const double from_output = integrate_excess(grid, s.psd, floor, centers) / calibrate_gain(m, r).gain;
        worst_out = std::max(worst_out, rel(from_output, x2));
        const auto state = state_spectrum(m, selector_vector(x_plus), grid);
        worst_state = std::max(worst_state, rel(integrate_excess(grid, state, 0.0, centers), x2));
    }

    double min_unc = 1e300;
    double min_d = 1e300;
    std::size_t count = 0;
    for (const SystemConfig& c : solved_configs()) {
        const LinearModel m = assemble_drift(validate(c), {.check_stability = false});
        if (max_real_eigenvalue(m.drift) >= 0.0) {
            continue;
        }
        const Eigen::MatrixXd v = solve_lyapunov(m).values;
        const double scale = std::max(1.0, v.norm());
        min_unc = std::min(min_unc, uncertainty_min_eigenvalue(v) / scale);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.diffusion);
        min_d = std::min(min_d, es.eigenvalues().minCoeff() / std::max(1.0, m.diffusion.norm()));
        ++count;
    }
    const bool pass = worst_out < 5e-3 && worst_state < 5e-3 && min_unc >= -1e-9 && min_d >= -1e-12;
    return {pass, fmt::format("output-spectrum vs Lyapunov max rel {:.3g}, state-spectrum max rel {:.3g}; "
                              "over {} solved configs min eig(V + i sigma/2)/||V|| = {:.3g}, min eig(D)/||D|| = {:.3g}",
                              worst_out, worst_state, count, min_unc, min_d)};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const fs::path base = fs::temp_directory_path() / "qmfs_acceptance_determinism";
    fs::remove_all(base);
    std::vector<fs::path> dirs{base / "a", base / "b"};
    std::ostringstream sink;
    for (const auto& d : dirs) {
        const int code = cli::run({"scenario", "fig4", "--out", d.string()}, sink, sink);
        if (code != cli::ok) {
            return {false, fmt::format("scenario fig4 exited with {}: {}", code, sink.str())};
        }
    }
    int files = 0;
    bool same = true;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
        if (entry.path().extension() != ".csv") {
            continue;
        }
        ++files;
        same = same && slurp(entry.path()) == slurp(dirs[1] / entry.path().filename());
    }
    fs::remove_all(base);
    return {same && files == 4, fmt::format("{} CSV files compared, {}", files, same ? "byte-identical" : "differ")};
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "Lyapunov solve matches time integration", lyapunov_vs_integration, 10.0},
        {2, "BAE invariance of <X+^2> over C in [0.1, 50]", bae_invariance, 5.0},
        {3, "conjugate heating 2C + 4C n_c", conjugate_heating},
        {4, "imprecision law (n_amp + 1/2)/(8C)", imprecision_law},
        {5, "strong-cooling margins: 8 dB below backaction, x2_eff < 2", strong_cooling_margins},
        {6, "linewidth invariance across C in [1, 30]", linewidth_invariance},
        {7, "tomography composition and probe backaction", tomography_composition},
        {8, "entanglement: Duan < 1 for every phase, <X+^2> < 0.5", entanglement},
        {9, "Parseval and physicality", parseval_and_physicality},
        {10, "byte-identical fig4 reruns", determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.time_limit_s > 0.0 && seconds >= c.time_limit_s) {
            o.pass = false;
            o.detail += fmt::format("; over the {:.0f} s budget", c.time_limit_s);
        }
        failed += o.pass ? 0 : 1;
        std::cout << fmt::format("{} criterion {:>2}: {} ({:.2f} s) -- {}\n", o.pass ? "PASS" : "FAIL", c.id, c.title,
                                 seconds, o.detail)
                  << std::flush;
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed),
                             criteria.size());
    return failed == 0 ? 0 : 1;
}
