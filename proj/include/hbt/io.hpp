#pragma once

// Artifact formats: scans as CSV (comment line with the config hash, header,
// one row per bin), fits and summaries as JSON, flashes as JSON-Lines. Floats
// are written with 9 significant digits.

#include <hbt/analysis.hpp>
#include <hbt/config.hpp>
#include <hbt/error.hpp>
#include <hbt/fit.hpp>
#include <hbt/montecarlo.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace hbt::io {

inline std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

/// JSON value holding a float at 9 significant digits (re-parsed from text so
/// the dump is exactly that rounding).
inline Json num(double x) {
    if (!std::isfinite(x)) return Json(nullptr);
    return Json::parse(fmt(x));
}

inline const char* axis_name(ScanAxis a) { return a == ScanAxis::separation_mm ? "separation_mm" : "delta_e_eV"; }

inline std::string scan_csv(const CorrelationScan& scan, const std::string& hash) {
    std::ostringstream out;
    out << "# config_hash=" << hash << " lambda0_nm=" << fmt(scan.lambda0_nm) << " distance_mm=" << fmt(scan.distance_mm)
        << " fixed_separation_mm=" << fmt(scan.fixed_separation_mm) << "\n";
    out << axis_name(scan.axis) << ",C_hat,sigma,pairs,analytic,band_averaged,mc_expected\n";
    for (const auto& b : scan.bins)
        out << fmt(b.axis) << ',' << fmt(b.c_hat) << ',' << fmt(b.sigma) << ',' << fmt(b.pairs) << ','
            << fmt(b.analytic) << ',' << fmt(b.band_averaged) << ',' << fmt(b.mc_expected) << "\n";
    return out.str();
}

/// Reads a scan written by scan_csv. Trailing optional columns may be absent.
inline CorrelationScan read_scan_csv(const std::string& text) {
    CorrelationScan scan;
    std::istringstream in(text);
    std::string line;
    bool header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream meta(line.substr(1));
            std::string item;
            while (meta >> item) {
                const auto eq = item.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
                if (key == "lambda0_nm") scan.lambda0_nm = std::stod(value);
                if (key == "distance_mm") scan.distance_mm = std::stod(value);
                if (key == "fixed_separation_mm") scan.fixed_separation_mm = std::stod(value);
            }
            continue;
        }
        std::vector<std::string> cells;
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) cells.push_back(cell);
        if (!header) {
            if (cells.empty()) throw Error("io.format", "empty CSV header");
            if (cells[0] == "separation_mm") scan.axis = ScanAxis::separation_mm;
            else if (cells[0] == "delta_e_eV") scan.axis = ScanAxis::delta_e_ev;
            else throw Error("io.format", "unknown scan axis column \"" + cells[0] + "\"");
            header = true;
            continue;
        }
        if (cells.size() < 4) throw Error("io.format", "scan row " + std::to_string(line_no) + " needs at least 4 columns");
        auto value = [&](std::size_t i) {
            if (i >= cells.size()) return std::numeric_limits<double>::quiet_NaN();
            try {
                return std::stod(cells[i]);
            } catch (const std::exception&) {
                throw Error("io.format", "bad number \"" + cells[i] + "\" on line " + std::to_string(line_no));
            }
        };
        ScanBin b;
        b.axis = value(0);
        b.c_hat = value(1);
        b.sigma = value(2);
        b.pairs = value(3);
        b.analytic = value(4);
        b.band_averaged = value(5);
        b.mc_expected = value(6);
        scan.bins.push_back(b);
    }
    if (!header) throw Error("io.format", "scan CSV has no header row");
    scan.validate();
    return scan;
}

inline Json fit_json(const SourceFit& f) {
    return Json{{"R_hat", num(f.R_hat)},
                {"tau_hat", num(f.tau_hat)},
                {"covariance", Json::array({Json::array({num(f.covariance[0][0]), num(f.covariance[0][1])}),
                                            Json::array({num(f.covariance[1][0]), num(f.covariance[1][1])})})},
                {"chi_square", num(f.chi_square)},
                {"dof", f.dof},
                {"tau_fitted", f.tau_fitted}};
}

inline std::string event_line(const FlashRecord& rec) {
    std::string s = "{\"flash_index\":" + std::to_string(rec.flash_index) + ",\"counts\":[";
    for (std::size_t i = 0; i < rec.counts.size(); ++i) s += (i ? "," : "") + std::to_string(rec.counts[i]);
    s += "],\"analog\":[";
    for (std::size_t i = 0; i < rec.analog.size(); ++i) s += (i ? "," : "") + fmt(rec.analog[i]);
    s += "]}";
    return s;
}

inline void write_events(const RunRecord& run, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io.file", "cannot write " + path);
    for (std::size_t i = 0; i < run.size(); ++i) out << event_line(run.flash(i)) << '\n';
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io.file", "cannot write " + path);
    out << text;
}

inline std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io.file", "cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace hbt::io
