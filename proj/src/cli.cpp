#include "qmfs/cli.hpp"

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <fmt/format.h>

#include "qmfs/config_io.hpp"
#include "qmfs/dynamics.hpp"
#include "qmfs/error.hpp"
#include "qmfs/kernels.hpp"
#include "qmfs/scenarios.hpp"
#include "qmfs/spectra.hpp"
#include "qmfs/steadystate.hpp"

namespace qmfs::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex += fmt::format("{:02x}", digest[i]);
    }
    return hex;
}

namespace {

std::string num(double v) {
    return fmt::format("{:.17g}", v);
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw ConfigError(fmt::format("cannot write '{}'", path.string()));
    }
    f << text;
    if (!f) {
        throw ConfigError(fmt::format("write to '{}' failed", path.string()));
    }
}

// Records what a run produced so that it can be reproduced and checked.
class Manifest {
  public:
    Manifest(const std::vector<std::string>& args, const SystemConfig& config) {
        doc_["tool"] = "qmfs";
        doc_["version"] = tool_version;
        doc_["command"] = args;
        doc_["config_sha256"] = sha256_hex(serialize_config(config));
        doc_["kernel"] = std::string(kernels::isa_name(kernels::active_isa()));
        doc_["files"] = json::object();
    }
    void add_file(const std::string& name, const std::string& contents) {
        doc_["files"][name] = sha256_hex(contents);
    }
    void set_notes(const std::vector<std::string>& notes) { doc_["notes"] = notes; }
    std::string dump() const { return doc_.dump(2) + "\n"; }

  private:
    json doc_ = json::object();
};

std::vector<QuadratureSelector> parse_selectors(const std::vector<std::string>& labels) {
    std::vector<QuadratureSelector> out;
    for (const auto& l : labels) {
        out.push_back(parse_selector(l));
    }
    return out;
}

// Emits `text` to `out_path` (with a sibling manifest) or to the stream.
void emit(const std::string& text, const std::string& out_path, std::ostream& out, Manifest manifest) {
    if (out_path.empty()) {
        out << text;
        return;
    }
    const fs::path path(out_path);
    write_file(path, text);
    manifest.add_file(path.filename().string(), text);
    write_file(fs::path(out_path + ".manifest.json"), manifest.dump());
}

CavityId parse_cavity(const std::string& s) {
    if (s == "pump") {
        return CavityId::pump;
    }
    if (s == "probe") {
        return CavityId::probe;
    }
    throw ConfigError(fmt::format("--cavity: expected pump or probe, got '{}'", s));
}

Detection parse_detection(const std::string& s) {
    if (s == "homodyne") {
        return Detection::homodyne;
    }
    if (s == "phase_insensitive") {
        return Detection::phase_insensitive;
    }
    throw ConfigError(fmt::format("--detection: expected homodyne or phase_insensitive, got '{}'", s));
}

struct ScenarioArgs {
    std::string name;
    std::string preset;
    std::string out_dir;
    std::vector<double> cooperativities;
    std::size_t phase_points = 0;
    std::size_t spectrum_points = 8001;
    bool no_probe_backaction = false;
    unsigned threads = 0;
};

std::vector<Report> run_scenario(const ScenarioArgs& a) {
    std::vector<Report> reports;
    if (a.name == "fig2") {
        Fig2Options o;
        if (a.preset == "weak" || a.preset.empty()) {
            o.cooling = presets::Cooling::weak;
        } else if (a.preset == "strong") {
            o.cooling = presets::Cooling::strong;
        } else {
            throw ConfigError(fmt::format("--preset: fig2 accepts weak or strong, got '{}'", a.preset));
        }
        o.cooperativities = a.cooperativities;
        o.spectrum_points = a.spectrum_points;
        o.threads = a.threads;
        reports.push_back(scenario_fig2(o));
    } else if (a.name == "fig3") {
        std::vector<Fig3Sweep> sweeps;
        if (a.preset.empty() || a.preset == "all") {
            sweeps = {Fig3Sweep::xp_to_pp, Fig3Sweep::xp_to_pm, Fig3Sweep::tomography};
        } else if (a.preset == "Xp_to_Pp") {
            sweeps = {Fig3Sweep::xp_to_pp};
        } else if (a.preset == "Xp_to_Pm") {
            sweeps = {Fig3Sweep::xp_to_pm};
        } else if (a.preset == "tomography") {
            sweeps = {Fig3Sweep::tomography};
        } else {
            throw ConfigError(
                fmt::format("--preset: fig3 accepts all, Xp_to_Pp, Xp_to_Pm or tomography, got '{}'", a.preset));
        }
        for (auto s : sweeps) {
            Fig3Options o;
            o.sweep = s;
            o.probe_backaction = !a.no_probe_backaction;
            if (a.phase_points) {
                o.phase_points = a.phase_points;
            }
            o.spectrum_points = a.spectrum_points;
            o.threads = a.threads;
            reports.push_back(scenario_fig3(o));
        }
    } else if (a.name == "fig4") {
        if (!a.preset.empty() && a.preset != "default") {
            throw ConfigError(fmt::format("--preset: fig4 accepts only default, got '{}'", a.preset));
        }
        Fig4Options o;
        o.probe_backaction = !a.no_probe_backaction;
        if (a.phase_points) {
            o.phase_points = a.phase_points;
        }
        o.spectrum_points = a.spectrum_points;
        o.threads = a.threads;
        reports.push_back(scenario_fig4(o));
    } else if (a.name == "force") {
        if (!a.preset.empty() && a.preset != "default") {
            throw ConfigError(fmt::format("--preset: force accepts only default, got '{}'", a.preset));
        }
        ForceOptions o;
        o.cooperativities = a.cooperativities;
        o.threads = a.threads;
        reports.push_back(scenario_force(o));
    } else {
        throw ConfigError(fmt::format("unknown scenario '{}': expected fig2, fig3, fig4 or force", a.name));
    }
    return reports;
}

std::vector<double> parse_values(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size()) {
            throw ConfigError(fmt::format("--values: '{}' is not a number", item));
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw ConfigError("--values: empty list");
    }
    return out;
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw ConfigError(fmt::format("cannot read '{}'", path));
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Four-tone backaction-evading measurement simulator", "qmfs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    std::string config_path;
    std::vector<std::string> quadratures{"X+", "P+", "X-", "P-"};
    std::string out_path;
    unsigned threads = 0;

    auto* validate_cmd = app.add_subcommand("validate", "Check a configuration file");
    validate_cmd->add_option("config", config_path, "Configuration JSON")->required();

    auto* solve_cmd = app.add_subcommand("solve", "Steady-state variances of selected quadratures");
    solve_cmd->add_option("config", config_path, "Configuration JSON")->required();
    solve_cmd->add_option("--quadratures", quadratures, "Selectors, e.g. X+,P-,X1,X+^1.57/P-")->delimiter(',');
    solve_cmd->add_option("--out", out_path, "Output CSV (default: stdout)");

    std::string cavity = "pump";
    double lo_phase = std::numeric_limits<double>::quiet_NaN();
    std::string detection = "phase_insensitive";
    std::size_t points = 8001;
    auto* spectrum_cmd = app.add_subcommand("spectrum", "Output power spectral density of one cavity");
    spectrum_cmd->add_option("config", config_path, "Configuration JSON")->required();
    spectrum_cmd->add_option("--cavity", cavity, "pump or probe");
    spectrum_cmd->add_option("--lo-phase", lo_phase, "Local-oscillator phase, rad (default: the tone set's BAE phase)");
    spectrum_cmd->add_option("--detection", detection, "homodyne or phase_insensitive");
    spectrum_cmd->add_option("--points", points, "Grid points")->check(CLI::Range(3, 10000000));
    spectrum_cmd->add_option("--out", out_path, "Output CSV (default: stdout)");

    ScenarioArgs sc;
    auto* scenario_cmd = app.add_subcommand("scenario", "Reproduce a figure as CSV panels");
    scenario_cmd->add_option("name", sc.name, "fig2, fig3, fig4 or force")->required();
    scenario_cmd->add_option("--preset", sc.preset, "fig2: weak|strong; fig3: all|Xp_to_Pp|Xp_to_Pm|tomography");
    scenario_cmd->add_option("--out", sc.out_dir, "Output directory")->required();
    scenario_cmd->add_option("--cooperativities", sc.cooperativities, "C grid (fig2, force)")->delimiter(',');
    scenario_cmd->add_option("--phase-points", sc.phase_points, "Angles per sweep (fig3, fig4)")
        ->check(CLI::Range(2, 100000));
    scenario_cmd->add_option("--points", sc.spectrum_points, "Spectrum grid points")->check(CLI::Range(3, 10000000));
    scenario_cmd->add_flag("--no-probe-backaction", sc.no_probe_backaction, "Zero the tomography tones");
    scenario_cmd->add_option("--threads", threads, "Worker threads (0: QMFS_THREADS or all cores)");

    std::string param;
    std::string values_text;
    auto* sweep_cmd = app.add_subcommand("sweep", "Variances while one configuration field takes a list of values");
    sweep_cmd->add_option("config", config_path, "Configuration JSON")->required();
    sweep_cmd->add_option("--param", param, "JSON pointer, e.g. /pump_tones/detuning_hz")->required();
    sweep_cmd->add_option("--values", values_text, "Comma-separated values")->required();
    sweep_cmd->add_option("--quadratures", quadratures, "Selectors")->delimiter(',');
    sweep_cmd->add_option("--out", out_path, "Output CSV (default: stdout)");
    sweep_cmd->add_option("--threads", threads, "Worker threads (0: QMFS_THREADS or all cores)");

    std::string presets_dir;
    auto* presets_cmd = app.add_subcommand("presets", "Write the preset configurations as JSON files");
    presets_cmd->add_option("--out", presets_dir, "Output directory")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? ok : config_error;
    }

    try {
        if (validate_cmd->parsed()) {
            const CheckedConfig checked = validate(load_config(config_path));
            for (const auto& w : checked.warnings()) {
                err << "warning: " << w << "\n";
            }
            out << "ok\n";
            return ok;
        }

        if (presets_cmd->parsed()) {
            for (const auto& p : presets::catalog()) {
                const fs::path path = fs::path(presets_dir) / (p.name + ".json");
                write_file(path, serialize_config(p.config));
                out << path.string() << "\n";
            }
            return ok;
        }

        if (solve_cmd->parsed()) {
            const SystemConfig config = load_config(config_path);
            const auto selectors = parse_selectors(quadratures);
            const LinearModel model = assemble_drift(validate(config));
            const CovarianceMatrix v = solve_lyapunov(model);
            const DuanResult duan = duan_quantity(v);
            std::string text = fmt::format("# duan_quantity = {}, margin_db = {}\n", num(duan.value), num(duan.margin_db));
            text += "quadrature,variance\n";
            for (std::size_t i = 0; i < selectors.size(); ++i) {
                text += fmt::format("{},{}\n", selector_label(selectors[i]), num(quadrature_variance(v, selectors[i])));
            }
            emit(text, out_path, out, Manifest(args, config));
            return ok;
        }

        if (spectrum_cmd->parsed()) {
            const SystemConfig config = load_config(config_path);
            const CavityId id = parse_cavity(cavity);
            const LinearModel model = assemble_drift(validate(config));
            double phase = lo_phase;
            if (std::isnan(phase)) {
                // Mean phase of the oscillator-1 tones: the BAE phase of the detected tone set.
                const auto& tones = id == CavityId::pump ? config.pump_tones : config.probe_tones.value_or(config.pump_tones);
                phase = 0.5 * (tones.phases().red1 + tones.phases().blue1);
            }
            const OutputMap routing = output_routing(model, id, phase, parse_detection(detection));
            const SpectrumTrace trace = output_spectrum(model, routing, default_grid(model, points), config.amplifier_noise);
            emit(spectrum_csv(trace), out_path, out, Manifest(args, config));
            return ok;
        }

        if (scenario_cmd->parsed()) {
            sc.threads = threads;
            const std::vector<Report> reports = run_scenario(sc);
            Manifest manifest(args, reports.front().base_config);
            std::vector<std::string> notes;
            const fs::path dir(sc.out_dir);
            for (const auto& r : reports) {
                for (const auto& p : r.panels) {
                    const std::string csv = p.to_csv();
                    write_file(dir / (p.name + ".csv"), csv);
                    manifest.add_file(p.name + ".csv", csv);
                    out << (dir / (p.name + ".csv")).string() << "\n";
                }
                notes.insert(notes.end(), r.notes.begin(), r.notes.end());
            }
            manifest.set_notes(notes);
            write_file(dir / "manifest.json", manifest.dump());
            for (const auto& n : notes) {
                err << "note: " << n << "\n";
            }
            return ok;
        }

        if (sweep_cmd->parsed()) {
            const std::vector<double> values = parse_values(values_text);
            const auto selectors = parse_selectors(quadratures);
            json doc;
            try {
                doc = json::parse(read_text(config_path));
            } catch (const json::parse_error& e) {
                throw ConfigError(fmt::format("{}: malformed JSON: {}", config_path, e.what()));
            }
            json::json_pointer ptr;
            try {
                ptr = json::json_pointer(param);
            } catch (const json::exception& e) {
                throw ConfigError(fmt::format("--param: '{}' is not a JSON pointer", param));
            }
            if (!doc.contains(ptr) || !doc.at(ptr).is_number()) {
                throw ConfigError(fmt::format("--param: '{}' does not name a numeric field", param));
            }
            std::vector<SystemConfig> configs;
            for (double v : values) {
                json d = doc;
                d[ptr] = v;
                configs.push_back(config_from_json(d));
            }
            const std::vector<SweepRow> rows = sweep(configs, selectors, threads);
            std::string text = fmt::format("# sweep of {} over {} values\nvalue", param, values.size());
            for (const auto& q : selectors) {
                text += "," + selector_label(q);
            }
            text += "\n";
            for (std::size_t i = 0; i < rows.size(); ++i) {
                text += num(values[i]);
                if (rows[i].ok()) {
                    for (double x : rows[i].values) {
                        text += "," + num(x);
                    }
                } else {
                    for (std::size_t k = 0; k < selectors.size(); ++k) {
                        text += ",nan";
                    }
                    err << "note: " << param << " = " << num(values[i]) << ": " << rows[i].error << "\n";
                }
                text += "\n";
            }
            emit(text, out_path, out, Manifest(args, load_config(config_path)));
            return ok;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    } catch (const InstabilityError& e) {
        err << "error: " << e.what() << "\n";
        return instability;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return numerical_failure;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return config_error;
    }
    return ok;
}

} // namespace qmfs::cli
