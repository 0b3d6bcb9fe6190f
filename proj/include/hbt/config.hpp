#pragma once

// Strict JSON run configuration. Every key is optional and defaults to the
// reference two-detector setup; unknown keys are rejected with their path.

#include <hbt/error.hpp>
#include <hbt/montecarlo.hpp>
#include <hbt/physics.hpp>
#include <hbt/sources.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

namespace hbt {

using Json = nlohmann::ordered_json;

struct SourceConfig {
    std::string model = "gaussian";  // gaussian | deformed_shell
    double R_nm = 500.0;
    double tau_fs = 1000.0;
    double R0_nm = 500.0;
    double width_nm = 50.0;
    std::vector<HarmonicTerm> harmonics;

    bool operator==(const SourceConfig&) const = default;

    AnySource build() const {
        if (model == "gaussian") return GaussianFireball(R_nm, tau_fs);
        return DeformedShell(R0_nm, width_nm, tau_fs, harmonics);
    }
};

struct NpointPhoton {
    double wavelength_nm = 200.0;
    Vec3 direction = Vec3::UnitZ();

    bool operator==(const NpointPhoton&) const = default;
};

struct ExperimentConfig {
    std::string mode = "angle-scan";
    std::vector<double> separations_mm{0, 5, 10, 15, 20, 30, 45};
    std::vector<double> wavelength_offsets_nm{0, 0.01, 0.02, 0.03, 0.05, 0.08};
    double energy_scan_separation_mm = 0.0;
    std::vector<NpointPhoton> photons{NpointPhoton{}, NpointPhoton{}, NpointPhoton{}};
    std::string npoint_mode = "unpolarized";  // unpolarized | scalar
    std::optional<std::vector<double>> singles_override;
    double assumed_correlation = 1.0;
    bool include_sum_term = true;
    bool band_average = true;
    bool fit_tau = false;
    std::string angle_scan_csv;   // fit inputs; simulated when empty
    std::string energy_scan_csv;

    bool operator==(const ExperimentConfig&) const = default;
};

struct OutputConfig {
    std::string dir = "out";
    bool emit_events = false;

    bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
    SourceConfig source;
    std::vector<DetectorChannel> detectors{DetectorChannel{}, DetectorChannel{}};
    FlashConfig flash;
    ExperimentConfig experiment;
    OutputConfig output;

    bool operator==(const RunConfig&) const = default;
};

inline const std::vector<std::string>& experiment_modes() {
    static const std::vector<std::string> modes{"angle-scan", "energy-scan", "rates", "npoint", "simulate", "fit"};
    return modes;
}

namespace detail {

// Reads one JSON object, remembering which keys were consumed.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) throw ConfigError("schema", where() + " must be an object");
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json* find(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void number(const std::string& key, double& out) {
        if (const Json* v = find(key)) {
            if (!v->is_number()) throw ConfigError("schema", key_path(key) + " must be a number");
            out = v->get<double>();
        }
    }
    void positive(const std::string& key, double& out) {
        number(key, out);
        if (!(out > 0.0)) throw ConfigError("schema", key_path(key) + " must be positive");
    }
    void non_negative(const std::string& key, double& out) {
        number(key, out);
        if (!(out >= 0.0)) throw ConfigError("schema", key_path(key) + " must be non-negative");
    }
    template <class Int>
    void integer(const std::string& key, Int& out) {
        if (const Json* v = find(key)) {
            if (!v->is_number_integer()) throw ConfigError("schema", key_path(key) + " must be an integer");
            if constexpr (std::is_unsigned_v<Int>) {
                if (v->is_number_unsigned() || v->get<std::int64_t>() >= 0) out = v->get<Int>();
                else throw ConfigError("schema", key_path(key) + " must be non-negative");
            } else {
                out = v->get<Int>();
            }
        }
    }
    void boolean(const std::string& key, bool& out) {
        if (const Json* v = find(key)) {
            if (!v->is_boolean()) throw ConfigError("schema", key_path(key) + " must be a boolean");
            out = v->get<bool>();
        }
    }
    void string(const std::string& key, std::string& out) {
        if (const Json* v = find(key)) {
            if (!v->is_string()) throw ConfigError("schema", key_path(key) + " must be a string");
            out = v->get<std::string>();
        }
    }
    void numbers(const std::string& key, std::vector<double>& out) {
        if (const Json* v = find(key)) out = number_array(*v, key_path(key));
    }
    void vec3(const std::string& key, Vec3& out) {
        if (const Json* v = find(key)) {
            auto xs = number_array(*v, key_path(key));
            if (xs.size() != 3) throw ConfigError("schema", key_path(key) + " must have 3 components");
            Vec3 d(xs[0], xs[1], xs[2]);
            const double n = d.norm();
            if (!(n > 0.0)) throw ConfigError("schema", key_path(key) + " must be non-zero");
            // Already-unit vectors pass through untouched so a resolved config re-reads identically.
            out = std::abs(n - 1.0) <= 1e-12 ? d : Vec3(d / n);
        }
    }
    static std::vector<double> number_array(const Json& v, const std::string& path) {
        if (!v.is_array()) throw ConfigError("schema", path + " must be an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number()) throw ConfigError("schema", path + "[" + std::to_string(i) + "] must be a number");
            out.push_back(v[i].get<double>());
        }
        return out;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown_key", "unknown key " + key_path(it.key()));
    }

private:
    std::string where() const { return path_.empty() ? "configuration" : path_; }

    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline SourceConfig read_source(const Json& j) {
    SourceConfig s;
    ObjectReader r(j, "source");
    r.string("model", s.model);
    if (s.model == "gaussian") {
        r.positive("R_nm", s.R_nm);
        r.positive("tau_fs", s.tau_fs);
    } else if (s.model == "deformed_shell") {
        r.positive("R0_nm", s.R0_nm);
        r.positive("width_nm", s.width_nm);
        r.positive("tau_fs", s.tau_fs);
        if (const Json* h = r.find("harmonics")) {
            if (!h->is_array()) throw ConfigError("schema", "source.harmonics must be an array");
            for (std::size_t i = 0; i < h->size(); ++i) {
                HarmonicTerm t;
                ObjectReader hr((*h)[i], "source.harmonics[" + std::to_string(i) + "]");
                hr.integer("l", t.l);
                hr.integer("m", t.m);
                hr.number("amplitude", t.amplitude);
                hr.finish();
                s.harmonics.push_back(t);
            }
        }
    } else {
        throw ConfigError("schema", "source.model must be \"gaussian\" or \"deformed_shell\", got \"" + s.model + "\"");
    }
    r.finish();
    return s;
}

inline DetectorChannel read_detector(const Json& j, const std::string& path) {
    DetectorChannel ch;
    ObjectReader r(j, path);
    r.positive("distance_mm", ch.distance);
    r.vec3("direction", ch.direction);
    r.non_negative("aperture_radius_mm", ch.aperture_radius);
    r.positive("filter_center_nm", ch.filter_center);
    r.non_negative("filter_fwhm_nm", ch.filter_fwhm);
    r.non_negative("quantum_efficiency", ch.quantum_efficiency);
    r.non_negative("dark_rate_hz", ch.dark_rate);
    r.finish();
    return ch;
}

inline FlashConfig read_flash(const Json& j) {
    FlashConfig f;
    ObjectReader r(j, "flash");
    r.positive("photons_per_flash", f.photons_per_flash);
    r.positive("spectrum_temperature_K", f.spectrum_temperature);
    r.positive("rep_rate_hz", f.rep_rate);
    r.integer("modes_per_band", f.modes_per_band);
    r.integer("seed", f.seed);
    r.integer("flash_count", f.flash_count);
    r.positive("trigger_efficiency", f.trigger_efficiency);
    r.boolean("uncorrelated_field", f.uncorrelated_field);
    r.finish();
    return f;
}

inline ExperimentConfig read_experiment(const Json& j) {
    ExperimentConfig e;
    ObjectReader r(j, "experiment");
    r.string("mode", e.mode);
    r.numbers("separations_mm", e.separations_mm);
    r.numbers("wavelength_offsets_nm", e.wavelength_offsets_nm);
    r.non_negative("energy_scan_separation_mm", e.energy_scan_separation_mm);
    if (const Json* p = r.find("photons")) {
        if (!p->is_array()) throw ConfigError("schema", "experiment.photons must be an array");
        e.photons.clear();
        for (std::size_t i = 0; i < p->size(); ++i) {
            NpointPhoton ph;
            ObjectReader pr((*p)[i], "experiment.photons[" + std::to_string(i) + "]");
            pr.positive("wavelength_nm", ph.wavelength_nm);
            pr.vec3("direction", ph.direction);
            pr.finish();
            e.photons.push_back(ph);
        }
    }
    r.string("npoint_mode", e.npoint_mode);
    if (const Json* s = r.find("singles_override")) {
        if (!s->is_null()) e.singles_override = ObjectReader::number_array(*s, "experiment.singles_override");
    }
    r.non_negative("assumed_correlation", e.assumed_correlation);
    r.boolean("include_sum_term", e.include_sum_term);
    r.boolean("band_average", e.band_average);
    r.boolean("fit_tau", e.fit_tau);
    r.string("angle_scan_csv", e.angle_scan_csv);
    r.string("energy_scan_csv", e.energy_scan_csv);
    r.finish();
    return e;
}

inline OutputConfig read_output(const Json& j) {
    OutputConfig o;
    ObjectReader r(j, "output");
    r.string("dir", o.dir);
    r.boolean("emit_events", o.emit_events);
    r.finish();
    return o;
}

inline Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace detail

/// Physical invariants that need the whole configuration.
inline void validate(const RunConfig& c) {
    auto wrap = [](const std::string& where, const std::function<void()>& f) {
        try {
            f();
        } catch (const DomainError& e) {
            throw ConfigError("invariant", where + ": " + e.what());
        }
    };
    wrap("source", [&] { (void)c.source.build(); });
    if (c.detectors.size() < 2) throw ConfigError("invariant", "detectors: at least two channels are required");
    for (std::size_t i = 0; i < c.detectors.size(); ++i)
        wrap("detectors[" + std::to_string(i) + "]", [&] { c.detectors[i].validate(); });
    wrap("flash", [&] { c.flash.validate(); });
    const auto& modes = experiment_modes();
    if (std::find(modes.begin(), modes.end(), c.experiment.mode) == modes.end())
        throw ConfigError("schema", "experiment.mode \"" + c.experiment.mode + "\" is not a known mode");
    if (c.experiment.npoint_mode != "unpolarized" && c.experiment.npoint_mode != "scalar")
        throw ConfigError("schema", "experiment.npoint_mode must be \"unpolarized\" or \"scalar\"");
    for (std::size_t i = 0; i < c.experiment.separations_mm.size(); ++i) {
        if (c.experiment.separations_mm[i] < 0.0)
            throw ConfigError("invariant", "experiment.separations_mm must be non-negative");
        if (i > 0 && c.experiment.separations_mm[i] < c.experiment.separations_mm[i - 1])
            throw ConfigError("invariant", "experiment.separations_mm must be sorted");
    }
    if (c.experiment.singles_override && c.experiment.singles_override->size() != c.detectors.size())
        throw ConfigError("invariant", "experiment.singles_override needs one value per detector");
}

inline RunConfig config_from_json(const Json& j) {
    RunConfig c;
    detail::ObjectReader r(j, "");
    if (const Json* s = r.find("source")) c.source = detail::read_source(*s);
    if (const Json* d = r.find("detectors")) {
        if (!d->is_array()) throw ConfigError("schema", "detectors must be an array");
        c.detectors.clear();
        for (std::size_t i = 0; i < d->size(); ++i)
            c.detectors.push_back(detail::read_detector((*d)[i], "detectors[" + std::to_string(i) + "]"));
    }
    if (const Json* f = r.find("flash")) c.flash = detail::read_flash(*f);
    if (const Json* e = r.find("experiment")) c.experiment = detail::read_experiment(*e);
    if (const Json* o = r.find("output")) c.output = detail::read_output(*o);
    r.finish();
    validate(c);
    return c;
}

/// Fully resolved configuration, every default spelled out.
inline Json config_to_json(const RunConfig& c) {
    using detail::vec_json;
    Json j;
    Json src;
    src["model"] = c.source.model;
    if (c.source.model == "gaussian") {
        src["R_nm"] = c.source.R_nm;
        src["tau_fs"] = c.source.tau_fs;
    } else {
        src["R0_nm"] = c.source.R0_nm;
        src["width_nm"] = c.source.width_nm;
        src["tau_fs"] = c.source.tau_fs;
        src["harmonics"] = Json::array();
        for (const auto& h : c.source.harmonics)
            src["harmonics"].push_back({{"l", h.l}, {"m", h.m}, {"amplitude", h.amplitude}});
    }
    j["source"] = src;
    j["detectors"] = Json::array();
    for (const auto& d : c.detectors) {
        j["detectors"].push_back({{"distance_mm", d.distance},
                                  {"direction", vec_json(d.direction)},
                                  {"aperture_radius_mm", d.aperture_radius},
                                  {"filter_center_nm", d.filter_center},
                                  {"filter_fwhm_nm", d.filter_fwhm},
                                  {"quantum_efficiency", d.quantum_efficiency},
                                  {"dark_rate_hz", d.dark_rate}});
    }
    j["flash"] = {{"photons_per_flash", c.flash.photons_per_flash},
                  {"spectrum_temperature_K", c.flash.spectrum_temperature},
                  {"rep_rate_hz", c.flash.rep_rate},
                  {"modes_per_band", c.flash.modes_per_band},
                  {"seed", c.flash.seed},
                  {"flash_count", c.flash.flash_count},
                  {"trigger_efficiency", c.flash.trigger_efficiency},
                  {"uncorrelated_field", c.flash.uncorrelated_field}};
    Json e;
    e["mode"] = c.experiment.mode;
    e["separations_mm"] = c.experiment.separations_mm;
    e["wavelength_offsets_nm"] = c.experiment.wavelength_offsets_nm;
    e["energy_scan_separation_mm"] = c.experiment.energy_scan_separation_mm;
    e["photons"] = Json::array();
    for (const auto& p : c.experiment.photons)
        e["photons"].push_back({{"wavelength_nm", p.wavelength_nm}, {"direction", vec_json(p.direction)}});
    e["npoint_mode"] = c.experiment.npoint_mode;
    e["singles_override"] = c.experiment.singles_override ? Json(*c.experiment.singles_override) : Json(nullptr);
    e["assumed_correlation"] = c.experiment.assumed_correlation;
    e["include_sum_term"] = c.experiment.include_sum_term;
    e["band_average"] = c.experiment.band_average;
    e["fit_tau"] = c.experiment.fit_tau;
    e["angle_scan_csv"] = c.experiment.angle_scan_csv;
    e["energy_scan_csv"] = c.experiment.energy_scan_csv;
    j["experiment"] = e;
    j["output"] = {{"dir", c.output.dir}, {"emit_events", c.output.emit_events}};
    return j;
}

/// Parses JSON text; syntax errors report line and column.
inline RunConfig parse_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("parse", "JSON parse error at line " + std::to_string(line) + ", column " +
                                       std::to_string(col) + ": " + e.what());
    }
    return config_from_json(j);
}

inline RunConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("io", "cannot open configuration file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// FNV-1a 64 of the compact resolved configuration.
inline std::string config_hash(const RunConfig& c) {
    const std::string text = config_to_json(c).dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace hbt
