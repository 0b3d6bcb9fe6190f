#include <hbt/cli.hpp>
#include <hbt/config.hpp>
#include <hbt/io.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hbt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hbt_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) { return io::read_text(p.string()); }

std::string config_error_code(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.code() + ": " + e.what();
    }
    return "none";
}

// Small, fast configuration for end-to-end runs.
RunConfig small_config(const fs::path& out) {
    RunConfig c = parse_config_text(R"({
        "flash": {"photons_per_flash": 3e8, "modes_per_band": 1, "flash_count": 4000},
        "experiment": {"separations_mm": [0, 10, 20, 30], "band_average": false}
    })");
    c.output.dir = out.string();
    return c;
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
    const RunConfig c = parse_config_text("{}");
    EXPECT_EQ(c.source.model, "gaussian");
    EXPECT_EQ(c.source.R_nm, 500.0);
    EXPECT_EQ(c.source.tau_fs, 1000.0);
    ASSERT_EQ(c.detectors.size(), 2u);
    for (const auto& d : c.detectors) {
        EXPECT_EQ(d.distance, 200.0);
        EXPECT_EQ(d.aperture_radius, 0.5);
        EXPECT_EQ(d.filter_center, 200.0);
        EXPECT_EQ(d.filter_fwhm, 10.0);
        EXPECT_EQ(d.quantum_efficiency, 0.075);
    }
    EXPECT_EQ(c.flash.rep_rate, 27000.0);
    EXPECT_EQ(c.flash.photons_per_flash, 5e5);
    EXPECT_TRUE(c == RunConfig{});
}

TEST(Config, SchemaErrorsNameTheKey) {
    EXPECT_EQ(config_error_code(R"({"source": {"R_nm": -500}})").rfind("config.schema", 0), 0u);
    EXPECT_NE(config_error_code(R"({"source": {"R_nm": -500}})").find("source.R_nm"), std::string::npos);
    const auto unknown = config_error_code(R"({"detectors": [{"gain": 2}]})");
    EXPECT_EQ(unknown.rfind("config.unknown_key", 0), 0u);
    EXPECT_NE(unknown.find("detectors[0].gain"), std::string::npos);
    EXPECT_NE(config_error_code(R"({"flash": {"modes_per_band": 1.5}})").find("flash.modes_per_band"), std::string::npos);
    EXPECT_NE(config_error_code(R"({"source": {"model": "cube"}})").find("source.model"), std::string::npos);
    EXPECT_NE(config_error_code(R"({"bogus": 1})").find("unknown key bogus"), std::string::npos);
    EXPECT_NE(config_error_code(R"({"flash": {"seed": -3}})").find("flash.seed"), std::string::npos);
    EXPECT_NE(config_error_code(R"({"source": {"tau_fs": "long"}})").find("source.tau_fs"), std::string::npos);
}

TEST(Config, InvariantErrorsNameTheConstraint) {
    const auto c = config_error_code(R"({"detectors": [{"aperture_radius_mm": 30}, {}]})");
    EXPECT_EQ(c.rfind("config.invariant", 0), 0u);
    EXPECT_NE(c.find("detectors[0]"), std::string::npos);
    EXPECT_NE(c.find("aperture_radius"), std::string::npos);
    EXPECT_EQ(config_error_code(R"({"detectors": [{}]})").rfind("config.invariant", 0), 0u);
    EXPECT_EQ(config_error_code(R"({"experiment": {"separations_mm": [5, 1]}})").rfind("config.invariant", 0), 0u);
    EXPECT_EQ(config_error_code(R"({"source": {"model": "deformed_shell", "harmonics": [{"l": 2, "m": 0, "amplitude": 9}]}})")
                  .rfind("config.invariant", 0),
              0u);
}

TEST(Config, ParseErrorsReportLineAndColumn) {
    const auto c = config_error_code("{\n  \"source\": {\n    \"R_nm\": ,\n  }\n}");
    EXPECT_EQ(c.rfind("config.parse", 0), 0u);
    EXPECT_NE(c.find("line 3"), std::string::npos) << c;
    EXPECT_THROW(parse_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ResolvedConfigRoundTrips) {
    const RunConfig c = parse_config_text(R"({
        "source": {"model": "deformed_shell", "R0_nm": 420.5, "width_nm": 33.3, "tau_fs": 2.5,
                   "harmonics": [{"l": 2, "m": -1, "amplitude": 0.1}]},
        "detectors": [{"direction": [0.1, 0.2, 0.97]}, {"filter_center_nm": 212.125, "dark_rate_hz": 7}],
        "flash": {"seed": 18446744073709551615, "flash_count": 12, "photons_per_flash": 1.234567890123e7},
        "experiment": {"mode": "npoint", "singles_override": [0.1, 0.3], "photons": [{"wavelength_nm": 201}, {}]},
        "output": {"dir": "elsewhere", "emit_events": true}
    })");
    const std::string text = config_to_json(c).dump(2);
    const RunConfig again = parse_config_text(text);
    EXPECT_TRUE(again == c);
    EXPECT_EQ(config_to_json(again).dump(2), text);
    EXPECT_EQ(config_hash(again), config_hash(c));
    EXPECT_EQ(again.flash.seed, 18446744073709551615ull);
    EXPECT_NEAR(again.detectors[0].direction.norm(), 1.0, 1e-15);

    RunConfig d = c;
    d.flash.seed = 5;
    EXPECT_NE(config_hash(d), config_hash(c));
    EXPECT_EQ(config_hash(c).size(), 16u);
}

TEST(Io, NineSignificantDigits) {
    EXPECT_EQ(io::fmt(1.5), "1.5");
    EXPECT_EQ(io::fmt(1.0 / 3.0), "0.333333333");
    EXPECT_EQ(io::fmt(270.0), "270");
    EXPECT_EQ(io::fmt(1.5625e-6), "1.5625e-06");
    EXPECT_EQ(io::fmt(std::numeric_limits<double>::quiet_NaN()), "nan");
    EXPECT_EQ(io::num(1.0 / 3.0).dump(), "0.333333333");
}

TEST(Io, ScanCsvRoundTrip) {
    CorrelationScan scan;
    scan.axis = ScanAxis::delta_e_ev;
    scan.lambda0_nm = 210.0;
    scan.distance_mm = 150.0;
    scan.fixed_separation_mm = 1.25;
    scan.bins.push_back({0.0, 1.5, 0.01, 1200, 1.5, std::numeric_limits<double>::quiet_NaN(), 1.5});
    scan.bins.push_back({1e-3, 1.25, 0.02, 900, 1.3, 1.01, 1.2});
    const std::string csv = io::scan_csv(scan, "0123456789abcdef");
    EXPECT_EQ(csv.rfind("# config_hash=0123456789abcdef", 0), 0u);
    EXPECT_NE(csv.find("\ndelta_e_eV,C_hat,sigma,pairs,analytic,band_averaged,mc_expected\n"), std::string::npos);
    const auto back = io::read_scan_csv(csv);
    EXPECT_EQ(back.axis, ScanAxis::delta_e_ev);
    EXPECT_EQ(back.lambda0_nm, 210.0);
    EXPECT_EQ(back.distance_mm, 150.0);
    EXPECT_EQ(back.fixed_separation_mm, 1.25);
    ASSERT_EQ(back.bins.size(), 2u);
    EXPECT_EQ(back.bins[1].c_hat, 1.25);
    EXPECT_TRUE(std::isnan(back.bins[0].band_averaged));
    EXPECT_EQ(io::scan_csv(back, "0123456789abcdef"), csv);

    EXPECT_THROW(io::read_scan_csv("x,C_hat\n1,2\n"), Error);
    EXPECT_THROW(io::read_scan_csv("separation_mm,C_hat,sigma,pairs\n1,abc,1,1\n"), Error);
    EXPECT_THROW(io::read_scan_csv(""), Error);
    const auto minimal = io::read_scan_csv("separation_mm,C_hat,sigma,pairs\n0,1.5,0.1,10\n");
    EXPECT_TRUE(std::isnan(minimal.bins[0].analytic));
}

TEST(Io, EventLines) {
    const FlashRecord rec{42, {1, 0, 3}, {0.5, 1.0 / 3.0, 2.0}};
    EXPECT_EQ(io::event_line(rec), R"({"flash_index":42,"counts":[1,0,3],"analog":[0.5,0.333333333,2]})");
    const Json j = Json::parse(io::event_line(rec));
    EXPECT_EQ(j["counts"][2], 3);
}

TEST(Cli, RatesWithSinglesOverride) {
    const auto out = scratch("rates");
    RunConfig c = parse_config_text(R"({"experiment": {"singles_override": [0.1, 0.1]}})");
    const auto r = cli::run(c, "rates", {std::nullopt, out.string(), std::nullopt, 1});
    EXPECT_NE(r.summary.find("270 coincidences/sec"), std::string::npos) << r.summary;
    const Json j = Json::parse(slurp(out / "rates.json"));
    EXPECT_EQ(j["coincidences_per_second"], 270);
    EXPECT_EQ(j["geometric_acceptance"].get<double>(), 1.5625e-6);
    EXPECT_TRUE(fs::exists(out / "config.resolved.json"));
}

TEST(Cli, ResolvedConfigReparsesIdentically) {
    const auto out = scratch("resolved");
    const RunConfig c = small_config(out);
    cli::run(c, "rates", {7u, std::nullopt, 123u, 1});
    const RunConfig back = parse_config(out / "config.resolved.json");
    RunConfig expected = c;
    expected.flash.seed = 7;
    expected.flash.flash_count = 123;
    expected.experiment.mode = "rates";
    EXPECT_TRUE(back == expected);
}

TEST(Cli, AngleScanAnalyticPeak) {
    const auto out = scratch("angle");
    RunConfig c = parse_config_text(R"({"flash": {"flash_count": 200}})");
    c.output.dir = out.string();
    const auto r = cli::run(c, "angle-scan");
    const auto csv = slurp(out / "angle_scan.csv");
    EXPECT_EQ(csv.rfind("# config_hash=" + config_hash(cli::apply(c, "angle-scan", {})), 0), 0u);
    const auto scan = io::read_scan_csv(csv);
    ASSERT_EQ(scan.bins.size(), 7u);
    EXPECT_EQ(scan.bins[0].axis, 0.0);
    EXPECT_EQ(scan.bins[0].analytic, 1.5);
    EXPECT_NE(r.summary.find("1/e width"), std::string::npos);
}

TEST(Cli, NpointThreeIdenticalPhotons) {
    const auto out = scratch("npoint");
    RunConfig c;
    c.output.dir = out.string();
    const auto r = cli::run(c, "npoint");
    EXPECT_NE(r.summary.find(": 3"), std::string::npos) << r.summary;
    EXPECT_EQ(Json::parse(slurp(out / "npoint.json"))["correlation"], 3);
}

TEST(Cli, SimulateAndFitPipeline) {
    const auto out = scratch("pipeline");
    RunConfig c = small_config(out);
    c.output.emit_events = true;
    cli::run(c, "simulate");
    const auto events = slurp(out / "events.jsonl");
    EXPECT_EQ(std::count(events.begin(), events.end(), '\n'), 4000);
    std::istringstream first(events);
    std::string line;
    std::getline(first, line);
    EXPECT_EQ(Json::parse(line)["flash_index"], 0);

    cli::run(c, "angle-scan");
    RunConfig f = small_config(out);
    f.experiment.angle_scan_csv = (out / "angle_scan.csv").string();
    f.output.dir = (out / "fit").string();
    const auto r = cli::run(f, "fit");
    const Json j = Json::parse(slurp(out / "fit" / "fit.json"));
    EXPECT_GT(j["R_hat"].get<double>(), 0.0);
    EXPECT_EQ(j["dof"], 3);
    EXPECT_NE(r.summary.find("R_hat"), std::string::npos);
}

TEST(Cli, ArtifactsAreByteIdenticalAcrossThreadCounts) {
    std::vector<std::string> texts;
    for (unsigned threads : {1u, 3u}) {
        const auto out = scratch("det");
        RunConfig c = small_config(out);
        c.output.emit_events = true;
        cli::run(c, "simulate", {std::nullopt, std::nullopt, std::nullopt, threads});
        cli::run(c, "angle-scan", {std::nullopt, std::nullopt, std::nullopt, threads});
        texts.push_back(slurp(out / "events.jsonl") + slurp(out / "simulate.json") + slurp(out / "angle_scan.csv"));
    }
    EXPECT_EQ(texts[0], texts[1]);
}

TEST(Cli, UnknownCommand) {
    EXPECT_THROW(cli::run(RunConfig{}, "dance"), Error);
    EXPECT_EQ(cli::error_json("config.schema", "bad \"x\""),
              R"({"error":{"code":"config.schema","message":"bad \"x\""}})");
}

TEST(CliBinary, ExitCodesAndErrorJson) {
    const auto dir = scratch("binary");
    {
        std::ofstream(dir / "bad.json") << R"({"detectors": [{"gain": 1}]})";
        std::ofstream(dir / "ok.json") << R"({"experiment": {"singles_override": [0.1, 0.1]}})";
    }
    const std::string cli = HBT_CLI_PATH;
    const std::string err = (dir / "err.txt").string(), out = (dir / "out.txt").string();
    int status = std::system((cli + " rates --config " + (dir / "bad.json").string() + " --out " + dir.string() +
                              " > " + out + " 2> " + err)
                                 .c_str());
    EXPECT_NE(status, 0);
    const Json e = Json::parse(slurp(err));
    EXPECT_EQ(e["error"]["code"], "config.unknown_key");

    status = std::system((cli + " rates --config " + (dir / "ok.json").string() + " --out " + dir.string() + " > " +
                          out + " 2> " + err)
                             .c_str());
    EXPECT_EQ(status, 0);
    EXPECT_NE(slurp(out).find("270 coincidences/sec"), std::string::npos);

    status = std::system((cli + " npoint --seed 3 --flashes 10 --out " + dir.string() + " > " + out).c_str());
    EXPECT_EQ(status, 0);
    EXPECT_EQ(parse_config((dir / "config.resolved.json").string()).flash.seed, 3u);
}
