#include "qmfs/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "qmfs/error.hpp"

namespace qmfs {

using json = nlohmann::ordered_json;

namespace {

json cavity_json(const CavityMode& c) {
    return json{{"frequency_hz", c.omega.in_hz()},
                {"kappa_ext_hz", c.kappa_ext.in_hz()},
                {"kappa_int_hz", c.kappa_int.in_hz()},
                {"n_thermal", c.n_thermal}};
}

json tones_json(const ToneSet& set) {
    json tones = json::array();
    for (const auto& t : set.tones) {
        tones.push_back(json{{"oscillator", t.oscillator},
                             {"sideband", t.sideband == Sideband::red ? "red" : "blue"},
                             {"amplitude_hz", t.amplitude.in_hz()},
                             {"phase_rad", t.phase}});
    }
    return json{{"detuning_hz", set.detuning.in_hz()}, {"tones", tones}};
}

/// Field accessors that carry the JSON path for error messages.
class Reader {
  public:
    Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) {
            throw ConfigError(fmt::format("{}: expected an object", shown()));
        }
    }

    void allow_only(std::initializer_list<const char*> keys) const {
        std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, v] : node_.items()) {
            if (!allowed.contains(k)) {
                throw ConfigError(fmt::format("{}: unknown field", child_path(k)));
            }
        }
    }

    const json& at(const std::string& key) const {
        if (!node_.contains(key)) {
            throw ConfigError(fmt::format("{}: missing required field", child_path(key)));
        }
        return node_.at(key);
    }

    bool has(const std::string& key) const { return node_.contains(key) && !node_.at(key).is_null(); }

    double number(const std::string& key) const {
        const auto& v = at(key);
        if (!v.is_number()) {
            throw ConfigError(fmt::format("{}: expected a number", child_path(key)));
        }
        return v.get<double>();
    }

    int integer(const std::string& key) const {
        const auto& v = at(key);
        if (!v.is_number_integer()) {
            throw ConfigError(fmt::format("{}: expected an integer", child_path(key)));
        }
        return v.get<int>();
    }

    std::string string(const std::string& key) const {
        const auto& v = at(key);
        if (!v.is_string()) {
            throw ConfigError(fmt::format("{}: expected a string", child_path(key)));
        }
        return v.get<std::string>();
    }

    Reader object(const std::string& key) const { return Reader(at(key), child_path(key)); }

    std::string child_path(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }
    const std::string& path() const { return path_; }

  private:
    std::string shown() const { return path_.empty() ? "<root>" : path_; }
    const json& node_;
    std::string path_;
};

CavityMode read_cavity(const Reader& r) {
    r.allow_only({"frequency_hz", "kappa_ext_hz", "kappa_int_hz", "n_thermal"});
    return {Rate::hz(r.number("frequency_hz")), Rate::hz(r.number("kappa_ext_hz")),
            Rate::hz(r.number("kappa_int_hz")), r.number("n_thermal")};
}

ToneSet read_tones(const Reader& r) {
    r.allow_only({"detuning_hz", "tones"});
    ToneSet set;
    set.detuning = Rate::hz(r.number("detuning_hz"));
    const auto& arr = r.at("tones");
    const auto path = r.child_path("tones");
    if (!arr.is_array() || arr.size() != 4) {
        throw ConfigError(fmt::format("{}: expected an array of exactly four tones", path));
    }
    for (std::size_t i = 0; i < 4; ++i) {
        Reader t(arr[i], fmt::format("{}[{}]", path, i));
        t.allow_only({"oscillator", "sideband", "amplitude_hz", "phase_rad"});
        auto& tone = set.tones[i];
        tone.oscillator = t.integer("oscillator");
        const auto sb = t.string("sideband");
        if (sb == "red") {
            tone.sideband = Sideband::red;
        } else if (sb == "blue") {
            tone.sideband = Sideband::blue;
        } else {
            throw ConfigError(fmt::format("{}: expected \"red\" or \"blue\"", t.child_path("sideband")));
        }
        tone.amplitude = Rate::hz(t.number("amplitude_hz"));
        tone.phase = t.number("phase_rad");
    }
    return set;
}

} // namespace

json config_to_json(const SystemConfig& c) {
    json doc;
    doc["schema_version"] = config_schema_version;
    json mech = json::array();
    for (const auto& m : c.mech) {
        mech.push_back(json{{"frequency_hz", m.omega.in_hz()},
                            {"gamma_intrinsic_hz", m.gamma_intrinsic.in_hz()},
                            {"gamma_effective_hz", m.gamma_effective.in_hz()},
                            {"n_thermal", m.n_thermal}});
    }
    doc["mechanical"] = mech;
    doc["pump_cavity"] = cavity_json(c.pump_cavity);
    doc["pump_tones"] = tones_json(c.pump_tones);
    if (c.probe_cavity) {
        doc["probe_cavity"] = cavity_json(*c.probe_cavity);
    }
    if (c.probe_tones) {
        doc["probe_tones"] = tones_json(*c.probe_tones);
    }
    doc["amplifier_noise"] = c.amplifier_noise;
    return doc;
}

SystemConfig config_from_json(const json& doc) {
    Reader root(doc, "");
    root.allow_only({"schema_version", "mechanical", "pump_cavity", "pump_tones", "probe_cavity",
                     "probe_tones", "amplifier_noise"});
    const int version = root.integer("schema_version");
    if (version != config_schema_version) {
        throw ConfigError(fmt::format("schema_version: file has {}, this build reads {}", version,
                                      config_schema_version));
    }
    SystemConfig c;
    const auto& mech = root.at("mechanical");
    if (!mech.is_array() || mech.size() != 2) {
        throw ConfigError("mechanical: expected an array of exactly two modes");
    }
    for (std::size_t j = 0; j < 2; ++j) {
        Reader m(mech[j], fmt::format("mechanical[{}]", j));
        m.allow_only({"frequency_hz", "gamma_intrinsic_hz", "gamma_effective_hz", "n_thermal"});
        c.mech[j] = {Rate::hz(m.number("frequency_hz")), Rate::hz(m.number("gamma_intrinsic_hz")),
                     Rate::hz(m.number("gamma_effective_hz")), m.number("n_thermal")};
    }
    c.pump_cavity = read_cavity(root.object("pump_cavity"));
    c.pump_tones = read_tones(root.object("pump_tones"));
    if (root.has("probe_cavity")) {
        c.probe_cavity = read_cavity(root.object("probe_cavity"));
    }
    if (root.has("probe_tones")) {
        c.probe_tones = read_tones(root.object("probe_tones"));
    }
    c.amplifier_noise = root.number("amplifier_noise");
    return c;
}

std::string serialize_config(const SystemConfig& config) {
    return config_to_json(config).dump(2) + "\n";
}

SystemConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(fmt::format("malformed JSON: {}", e.what()));
    }
    return config_from_json(doc);
}

SystemConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot read config file '{}'", path.string()));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace qmfs
