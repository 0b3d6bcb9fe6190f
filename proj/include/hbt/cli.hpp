#pragma once

// Experiment orchestration behind the command-line tool. Every command writes
// config.resolved.json plus its own artifacts into the output directory and
// returns a one-paragraph summary.

#include <hbt/analysis.hpp>
#include <hbt/config.hpp>
#include <hbt/correlation.hpp>
#include <hbt/error.hpp>
#include <hbt/fit.hpp>
#include <hbt/io.hpp>
#include <hbt/montecarlo.hpp>
#include <hbt/physics.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hbt::cli {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> flashes;
    unsigned threads = 1;
};

struct Result {
    std::string summary;
    std::vector<std::string> artifacts;  // paths, in write order
};

inline RunConfig apply(RunConfig cfg, const std::string& command, const Overrides& o) {
    const auto& modes = experiment_modes();
    if (std::find(modes.begin(), modes.end(), command) == modes.end())
        throw Error("cli.command", "unknown command \"" + command + "\"");
    cfg.experiment.mode = command;
    if (o.seed) cfg.flash.seed = *o.seed;
    if (o.flashes) cfg.flash.flash_count = *o.flashes;
    if (o.out_dir) cfg.output.dir = *o.out_dir;
    validate(cfg);
    return cfg;
}

inline std::string error_json(const std::string& code, const std::string& message) {
    return Json{{"error", {{"code", code}, {"message", message}}}}.dump();
}

namespace detail {

class Session {
public:
    Session(const RunConfig& cfg, unsigned threads) : cfg_(cfg), hash_(config_hash(cfg)), threads_(threads) {
        std::filesystem::create_directories(cfg_.output.dir);
        write("config.resolved.json", config_to_json(cfg_).dump(2) + "\n");
    }

    Result dispatch() {
        const std::string& m = cfg_.experiment.mode;
        if (m == "rates") rates();
        else if (m == "angle-scan") angle();
        else if (m == "energy-scan") energy();
        else if (m == "simulate") simulate();
        else if (m == "fit") fit();
        else npoint();
        return std::move(result_);
    }

private:
    std::string path(const std::string& name) const { return (std::filesystem::path(cfg_.output.dir) / name).string(); }

    void write(const std::string& name, const std::string& text) {
        io::write_text(path(name), text);
        result_.artifacts.push_back(path(name));
    }

    ScanOptions scan_options() const {
        return ScanOptions{threads_, cfg_.experiment.band_average, cfg_.experiment.include_sum_term};
    }

    CorrelationScan run_angle_scan() const {
        return angular_scan(cfg_.source.build(), cfg_.detectors[0], cfg_.flash, cfg_.experiment.separations_mm,
                            scan_options());
    }

    CorrelationScan run_energy_scan() const {
        const auto& d = cfg_.detectors;
        const DetectorChannel second = placed_at_separation(d[0], d[1], cfg_.experiment.energy_scan_separation_mm);
        return energy_scan(cfg_.source.build(), d[0], second, cfg_.flash, cfg_.experiment.wavelength_offsets_nm,
                           scan_options());
    }

    static std::string peak_text(const CorrelationScan& scan) {
        if (scan.bins.empty()) return "no scan points";
        const auto& b = scan.bins.front();
        return "C_hat(0) = " + io::fmt(b.c_hat) + " +/- " + io::fmt(b.sigma) + " (analytic " + io::fmt(b.analytic) + ")";
    }

    static std::string width_text(const CorrelationScan& scan, const char* unit) {
        const auto mc = one_over_e_point(scan), exact = one_over_e_point(scan, true);
        return std::string("1/e width ") + (mc ? io::fmt(*mc) + " " + unit : "not reached") + " (analytic " +
               (exact ? io::fmt(*exact) + " " + unit : "not reached") + ")";
    }

    void rates() {
        const auto r = rate_estimate(cfg_.detectors, cfg_.flash, cfg_.experiment.assumed_correlation,
                                     cfg_.experiment.singles_override);
        Json singles = Json::array();
        for (double s : r.singles_per_flash) singles.push_back(io::num(s));
        const double acc = aperture_fraction(cfg_.detectors[0]);
        write("rates.json", Json{{"config_hash", hash_},
                                 {"singles_per_flash", singles},
                                 {"geometric_acceptance", io::num(acc)},
                                 {"coincidences_per_flash", io::num(r.coincidences_per_flash)},
                                 {"coincidences_per_second", io::num(r.coincidences_per_second)}}
                                .dump(2) +
                                "\n");
        result_.summary = "Rates: " + io::fmt(r.singles_per_flash[0]) + " and " + io::fmt(r.singles_per_flash[1]) +
                          " singles per flash, geometric acceptance " + io::fmt(acc) + ", " +
                          io::fmt(r.coincidences_per_second) + " coincidences/sec.";
    }

    void angle() {
        const auto scan = run_angle_scan();
        write("angle_scan.csv", io::scan_csv(scan, hash_));
        result_.summary = "Angle scan over " + std::to_string(scan.bins.size()) + " separations: " + peak_text(scan) +
                          ", " + width_text(scan, "mm") + ".";
    }

    void energy() {
        const auto scan = run_energy_scan();
        write("energy_scan.csv", io::scan_csv(scan, hash_));
        result_.summary = "Energy scan over " + std::to_string(scan.bins.size()) + " offsets: " + peak_text(scan) +
                          ", " + width_text(scan, "eV") + ".";
    }

    void simulate() {
        const RunRecord run = simulate_run(cfg_.source.build(), cfg_.detectors, cfg_.flash, RunOptions{threads_, 0});
        if (cfg_.output.emit_events) {
            io::write_events(run, path("events.jsonl"));
            result_.artifacts.push_back(path("events.jsonl"));
        }
        const auto counts = estimate_correlation(run, 0, 1);
        const auto adc = adc_correlate(run, 0, 1);
        Json totals = Json::array();
        for (auto t : run.count_totals()) totals.push_back(t);
        write("simulate.json", Json{{"config_hash", hash_},
                                    {"flashes", run.size()},
                                    {"count_totals", totals},
                                    {"C_hat", io::num(counts.c_hat)},
                                    {"sigma", io::num(counts.sigma)},
                                    {"pairs", io::num(counts.pairs)},
                                    {"adc_C_hat", io::num(adc.c_hat)},
                                    {"adc_sigma", io::num(adc.sigma)}}
                                   .dump(2) +
                                   "\n");
        result_.summary = "Simulated " + std::to_string(run.size()) + " flashes: C_hat(0) = " + io::fmt(counts.c_hat) +
                          " +/- " + io::fmt(counts.sigma) + " from coincidences, " + io::fmt(adc.c_hat) + " +/- " +
                          io::fmt(adc.sigma) + " from analog intensities.";
    }

    void fit() {
        const auto& e = cfg_.experiment;
        CorrelationScan angle_scan;
        if (e.angle_scan_csv.empty()) {
            angle_scan = run_angle_scan();
            write("angle_scan.csv", io::scan_csv(angle_scan, hash_));
        } else {
            angle_scan = io::read_scan_csv(io::read_text(e.angle_scan_csv));
        }
        if (angle_scan.axis != ScanAxis::separation_mm) throw FitError("input", "angle scan must be a separation scan");
        std::optional<CorrelationScan> energy_scan_data;
        if (!e.energy_scan_csv.empty()) {
            energy_scan_data = io::read_scan_csv(io::read_text(e.energy_scan_csv));
        } else if (e.fit_tau) {
            energy_scan_data = run_energy_scan();
            write("energy_scan.csv", io::scan_csv(*energy_scan_data, hash_));
        }
        if (energy_scan_data && energy_scan_data->axis != ScanAxis::delta_e_ev)
            throw FitError("input", "energy scan must be an energy-difference scan");
        FitOptions opt;
        opt.tau_fixed_fs = cfg_.source.tau_fs;
        const SourceFit f = fit_source(angle_scan, energy_scan_data, angle_scan.lambda0_nm, angle_scan.distance_mm, opt);
        Json j = io::fit_json(f);
        j["config_hash"] = hash_;
        write("fit.json", j.dump(2) + "\n");
        std::ostringstream s;
        s << "Fit: R_hat = " << io::fmt(f.R_hat) << " +/- " << io::fmt(std::sqrt(f.covariance[0][0])) << " nm, tau_hat = "
          << io::fmt(f.tau_hat);
        if (f.tau_fitted) s << " +/- " << io::fmt(std::sqrt(f.covariance[1][1]));
        else s << " (fixed)";
        s << " fs, chi2/dof = " << io::fmt(f.chi_square) << "/" << f.dof << "; " << peak_text(angle_scan) << ", "
          << width_text(angle_scan, "mm") << ".";
        result_.summary = s.str();
    }

    void npoint() {
        std::vector<PhotonState> ks;
        for (const auto& p : cfg_.experiment.photons)
            ks.emplace_back(energy_from_wavelength(p.wavelength_nm), p.direction);
        const NpointMode mode = cfg_.experiment.npoint_mode == "scalar" ? NpointMode::scalar : NpointMode::unpolarized;
        const double value = npoint_correlation(cfg_.source.build(), std::span<const PhotonState>(ks), mode);
        write("npoint.json", Json{{"config_hash", hash_},
                                  {"n", ks.size()},
                                  {"mode", cfg_.experiment.npoint_mode},
                                  {"correlation", io::num(value)}}
                                 .dump(2) +
                                 "\n");
        result_.summary = std::to_string(ks.size()) + "-photon " + cfg_.experiment.npoint_mode +
                          " correlation: " + io::fmt(value) + ".";
    }

    RunConfig cfg_;
    std::string hash_;
    unsigned threads_;
    Result result_;
};

}  // namespace detail

/// Runs one command on a validated configuration (after overrides).
inline Result run(const RunConfig& config, const std::string& command, const Overrides& o = {}) {
    const RunConfig cfg = apply(config, command, o);
    return detail::Session(cfg, o.threads).dispatch();
}

}  // namespace hbt::cli
