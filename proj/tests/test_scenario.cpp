#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "heraldsim/csv.hpp"
#include "heraldsim/scenario.hpp"

using namespace heraldsim;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const std::filesystem::path dir = std::filesystem::path("scenario_test_out") / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void check_point_invariants(const ScenarioResult& result) {
    REQUIRE_FALSE(result.points.empty());
    for (const ScenarioPoint& p : result.points) {
        CHECK(p.ci_low <= p.estimate);
        CHECK(p.estimate <= p.ci_high);
    }
}

void check_common_files(const ScenarioResult& result, const std::filesystem::path& base) {
    const std::filesystem::path dir = base / result.scenario;
    for (const char* name : {"results.csv", "metadata.txt", "summary.txt"})
        CHECK(std::filesystem::exists(dir / name));
    for (const std::filesystem::path& f : result.files) CHECK(std::filesystem::exists(f));

    const CsvTable table = read_csv(dir / "results.csv");
    REQUIRE(table.header.size() == 5);
    CHECK(table.header[1] == "estimate");
    CHECK(table.header[4] == "analytic");
    CHECK(table.rows.size() == result.points.size());

    const std::string meta = slurp(dir / "metadata.txt");
    CHECK(meta.find("scenario=" + result.scenario) != std::string::npos);
    CHECK(meta.find("seed=") != std::string::npos);
    CHECK(meta.find("source.eta_q=") != std::string::npos);

    const std::string summary = slurp(dir / "summary.txt");
    for (const SummaryLine& line : result.summary)
        CHECK(summary.find((line.pass ? "[PASS] " : "[FAIL] ") + line.label) !=
              std::string::npos);
}

}  // namespace

TEST_CASE("scenario dispatch rejects bad requests") {
    ScenarioConfig sc;
    sc.scenario = "nonexistent";
    try {
        run_scenario(sc);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        CHECK(what.find("nonexistent") != std::string::npos);
        for (const std::string& name : scenario_names())
            CHECK(what.find(name) != std::string::npos);
    }

    sc.scenario = "appx_rabi";
    sc.trials = -3;
    CHECK_THROWS_AS(run_scenario(sc), std::invalid_argument);

    sc.trials = 100;
    sc.overrides = {"source.nope=1"};
    CHECK_THROWS_AS(run_scenario(sc), std::invalid_argument);

    sc.overrides = {"tomography.chain=weird"};
    sc.scenario = "fig3_tomography";
    sc.output_dir = fresh_dir("bad_chain");
    CHECK_THROWS_AS(run_scenario(sc), std::invalid_argument);
}

TEST_CASE("readout scenario writes curve and histogram, flags the non-monotone curve") {
    ScenarioConfig sc;
    sc.scenario = "fig2_readout";
    sc.seed = 11;
    sc.trials = 4000;
    sc.output_dir = fresh_dir("fig2");
    const ScenarioResult result = run_scenario(sc);

    check_point_invariants(result);
    check_common_files(result, sc.output_dir);
    CHECK(result.points.size() == 20);
    CHECK(result.sweep_name == "duration");

    REQUIRE(result.summary.size() == 3);
    CHECK(result.summary[0].pass);  // analytic fidelity at the reference duration
    CHECK(result.summary[1].pass);  // bright histogram mean
    CHECK_FALSE(result.summary[2].pass);  // the curve peaks, then falls: honest red
    CHECK_FALSE(result.all_pass());

    const CsvTable hist = read_csv(sc.output_dir / "fig2_readout/histogram.csv");
    REQUIRE(hist.header.size() == 3);
    double bright_total = 0.0, dark_total = 0.0;
    for (const auto& row : hist.rows) {
        bright_total += parse_double(row[1]);
        dark_total += parse_double(row[2]);
    }
    CHECK_THAT(bright_total, Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK_THAT(dark_total, Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("tomography scenario reconstructs both event classes") {
    ScenarioConfig sc;
    sc.scenario = "fig3_tomography";
    sc.seed = 5;
    sc.trials = 2000;
    sc.overrides = {"tomography.resamples=50"};
    sc.output_dir = fresh_dir("fig3");
    const ScenarioResult result = run_scenario(sc);

    check_point_invariants(result);
    check_common_files(result, sc.output_dir);
    REQUIRE(result.points.size() == 2);
    CHECK_THAT(result.points[0].estimate, Catch::Matchers::WithinAbs(0.87, 0.03));
    CHECK_THAT(result.points[1].estimate, Catch::Matchers::WithinAbs(0.65, 0.03));
    CHECK(result.all_pass());

    const std::filesystem::path dir = sc.output_dir / "fig3_tomography";
    for (const char* name : {"counts_heralded.csv", "counts_all_qubit.csv",
                             "rho_heralded.csv", "rho_heralded_realpart.csv"})
        CHECK(std::filesystem::exists(dir / name));
    const ComplexMatrix rho = read_matrix_csv(dir / "rho_heralded.csv");
    CHECK_THAT(rho.trace().real(), Catch::Matchers::WithinAbs(1.0, 1e-9));
}

TEST_CASE("storage-delay scenario recovers the dephasing time") {
    ScenarioConfig sc;
    sc.scenario = "fig3d_delay";
    sc.seed = 9;
    sc.trials = 6000;
    sc.output_dir = fresh_dir("fig3d");
    const ScenarioResult result = run_scenario(sc);

    check_point_invariants(result);
    check_common_files(result, sc.output_dir);
    CHECK(result.points.size() == 21);
    CHECK(result.all_pass());
    // analytic column should follow the compensated decay from ~0.87 to ~0.5
    CHECK_THAT(result.points.front().analytic, Catch::Matchers::WithinAbs(0.87, 1e-12));
    CHECK(result.points.back().analytic < 0.58);
}

TEST_CASE("timing scenario reproduces arrival peak and gate capture") {
    ScenarioConfig sc;
    sc.scenario = "fig4_timing";
    sc.seed = 3;
    sc.output_dir = fresh_dir("fig4");
    const ScenarioResult result = run_scenario(sc);

    check_point_invariants(result);
    check_common_files(result, sc.output_dir);
    CHECK(result.points.size() == 50);
    CHECK(result.all_pass());

    const CsvTable arr = read_csv(sc.output_dir / "fig4_timing/arrivals.csv");
    REQUIRE(arr.header.size() == 5);
    CHECK(arr.rows.size() == 50);
    // analytic qubit density integrates to most of the mass within 200 ns
    double mass = 0.0;
    for (const auto& row : arr.rows) mass += parse_double(row[4]) * 4.0;
    CHECK(mass > 0.90);
}

TEST_CASE("noise scenario compares gating modes at the calibrated rate") {
    ScenarioConfig sc;
    sc.scenario = "fig4c_noise";
    sc.seed = 17;
    sc.trials = 5000;
    sc.overrides = {"noise_scan.points=7"};
    sc.output_dir = fresh_dir("fig4c");
    const ScenarioResult result = run_scenario(sc);

    check_point_invariants(result);
    check_common_files(result, sc.output_dir);
    CHECK(result.points.size() == 8);  // 7 grid rates plus the calibrated one
    CHECK(result.all_pass());

    const CsvTable scan = read_csv(sc.output_dir / "fig4c_noise/noise_scan.csv");
    REQUIRE(scan.header.size() == 9);
    CHECK(scan.rows.size() == 16);
    const int mode_col = scan.column("mode");
    int fixed_rows = 0, referenced_rows = 0;
    for (const auto& row : scan.rows) {
        if (row[static_cast<std::size_t>(mode_col)] == "fixed") ++fixed_rows;
        if (row[static_cast<std::size_t>(mode_col)] == "herald_referenced") ++referenced_rows;
    }
    CHECK(fixed_rows == 8);
    CHECK(referenced_rows == 8);
}

TEST_CASE("pulse calibration scenario pins exact populations") {
    ScenarioConfig sc;
    sc.scenario = "appx_rabi";
    sc.seed = 2;
    sc.trials = 300;
    sc.output_dir = fresh_dir("rabi");
    const ScenarioResult result = run_scenario(sc);

    check_point_invariants(result);
    check_common_files(result, sc.output_dir);
    CHECK(result.points.size() == 81);
    CHECK(result.all_pass());

    const CsvTable curves = read_csv(sc.output_dir / "appx_rabi/rabi_curves.csv");
    REQUIRE(curves.header.size() == 9);
    CHECK(curves.rows.size() == 81);
    // the pi point sits at 10 us: first transition peaks at its contrast
    const CsvTable res = read_csv(sc.output_dir / "appx_rabi/results.csv");
    bool found = false;
    for (const auto& row : res.rows)
        if (parse_double(row[0]) == 10.0) {
            CHECK(parse_double(row[4]) == 0.95);
            found = true;
        }
    CHECK(found);
}

TEST_CASE("precession scenario fits the oscillation period") {
    ScenarioConfig sc;
    sc.scenario = "appx_precession";
    sc.seed = 7;
    sc.trials = 600;
    sc.output_dir = fresh_dir("precession");
    const ScenarioResult result = run_scenario(sc);

    check_point_invariants(result);
    check_common_files(result, sc.output_dir);
    CHECK(result.points.size() == 51);
    CHECK(result.all_pass());
}

TEST_CASE("scenario output is deterministic across runs and worker counts") {
    ScenarioConfig sc;
    sc.scenario = "appx_precession";
    sc.seed = 31;
    sc.trials = 500;
    sc.threads = 1;
    sc.output_dir = fresh_dir("det_a");
    run_scenario(sc);

    ScenarioConfig again = sc;
    again.threads = 4;
    again.output_dir = fresh_dir("det_b");
    run_scenario(again);

    const std::string a = slurp(sc.output_dir / "appx_precession/results.csv");
    const std::string b = slurp(again.output_dir / "appx_precession/results.csv");
    CHECK(a == b);

    ScenarioConfig reseeded = sc;
    reseeded.seed = 32;
    reseeded.output_dir = fresh_dir("det_c");
    run_scenario(reseeded);
    CHECK(slurp(reseeded.output_dir / "appx_precession/results.csv") != a);
}

TEST_CASE("empty output directory falls back to the environment variable") {
    const std::filesystem::path base = fresh_dir("env_fallback");
    REQUIRE(setenv("HERALDSIM_OUT", base.string().c_str(), 1) == 0);
    ScenarioConfig sc;
    sc.scenario = "appx_rabi";
    sc.seed = 1;
    sc.trials = 50;
    const ScenarioResult result = run_scenario(sc);
    REQUIRE(unsetenv("HERALDSIM_OUT") == 0);
    CHECK(std::filesystem::exists(base / "appx_rabi/results.csv"));
    CHECK(result.all_pass());
}
