#pragma once

// Figure-level pipelines. Each scenario builds its configs from presets,
// runs the full model row by row (rows may run in parallel, output order is
// fixed), and places the closed-form budget next to every simulated column.

#include <cstddef>
#include <string>
#include <vector>

#include "qmfs/model.hpp"

namespace qmfs {

/// One CSV panel.
struct Table {
    std::string name;
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(const std::string& column) const;
    std::vector<double> column(const std::string& column) const;
    /// "# comment" lines, a header line, then rows at round-trip precision.
    std::string to_csv() const;
};

struct Report {
    std::string scenario;
    std::vector<Table> panels;
    /// Per-row failures and regime remarks.
    std::vector<std::string> notes;
    /// Base configuration the scenario was derived from.
    SystemConfig base_config;

    const Table& panel(const std::string& name) const;
};

namespace presets {

enum class Cooling { weak, strong };

/// Sideband-cooled oscillators read out by a four-tone BAE pump on X+:
/// weak: <X^2>^T = 3.2, gamma/2pi = 630 Hz, Omega/2pi = 10 kHz;
/// strong: <X^2>^T = 1.0, gamma/2pi = 4.6 kHz, Omega/2pi = 200 kHz.
SystemConfig bae_measurement(Cooling cooling, double cooperativity, double n_cavity = 0.23,
                             double n_amp = 10.0);

/// Reduced blue tones: |G_-|/2pi = red_coupling_hz, |G_+| = ratio |G_-|, all
/// phases zero, intrinsic damping, both baths at <X^2>^T = thermal_variance.
SystemConfig entanglement(double ratio = 0.37, double detuning_hz = 400e3, double thermal_variance = 54.0,
                          double red_coupling_hz = 121e3);

/// Adds four BAE tomography tones on the probe cavity measuring `measured`,
/// with amplitude `amplitude_ratio` times the strongest pump tone.
SystemConfig with_probe_tomography(SystemConfig config, const QuadratureSelector& measured,
                                   double amplitude_ratio);

/// Pump amplitude (rad/s) giving cooperativity c with the given cavity and mean damping.
double coupling_for_cooperativity(double c, double kappa, double gamma);

struct NamedPreset {
    std::string name;
    std::string description;
    SystemConfig config;
};

/// Every preset shipped under data/presets, by file stem.
std::vector<NamedPreset> catalog();

/// -15 dB tomography tones read as an amplitude ratio.
inline constexpr double probe_amplitude_ratio_db = -15.0;
double probe_amplitude_ratio();

} // namespace presets

struct Fig2Options {
    presets::Cooling cooling = presets::Cooling::weak;
    /// Empty: 25 log-spaced points on [0.1, 50].
    std::vector<double> cooperativities;
    double n_cavity = 0.23;
    double n_amp = 10.0;
    std::size_t spectrum_points = 8001;
    unsigned threads = 0;
};
Report scenario_fig2(const Fig2Options& options);

enum class Fig3Sweep { xp_to_pp, xp_to_pm, tomography };

struct Fig3Options {
    Fig3Sweep sweep = Fig3Sweep::xp_to_pp;
    double cooperativity = 2.1;
    double n_cavity = 0.23;
    double n_amp = 10.0;
    std::size_t phase_points = 33;
    bool probe_backaction = true;
    std::size_t spectrum_points = 8001;
    unsigned threads = 0;
};
Report scenario_fig3(const Fig3Options& options);

struct Fig4Options {
    double ratio = 0.37;
    double red_coupling_hz = 121e3;
    /// Tomography inside the QMFS (panels A, C, D).
    double detuning_hz = 400e3;
    /// X+ / P+ contrast (panel B).
    double contrast_detuning_hz = 100e3;
    double thermal_variance = 54.0;
    double n_amp = 10.0;
    bool probe_backaction = true;
    std::size_t phase_points = 33;
    std::size_t spectrum_points = 8001;
    unsigned threads = 0;
};
Report scenario_fig4(const Fig4Options& options);

struct ForceOptions {
    /// Classical force on P- (rate of change of the quadrature, rad/s).
    double force = 1.0;
    /// Empty: {0.5, 1, 2, 5, 10, 20, 50}.
    std::vector<double> cooperativities;
    double n_amp = 10.0;
    unsigned threads = 0;
};
Report scenario_force(const ForceOptions& options);

} // namespace qmfs
