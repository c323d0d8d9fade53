#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "test_support.hpp"

using cpmhs::testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output; ///< stdout and stderr interleaved
};

/// Runs the command-line tool with the given arguments, capturing all output.
CliResult run_cli(const std::string& args) {
    static int counter = 0;
    static const fs::path dir = scratch_dir("cli_capture");
    const fs::path capture = dir / ("out_" + std::to_string(counter++) + ".txt");

    const std::string cmd =
        std::string(CPMHS_CLI_PATH) + " " + args + " > " + capture.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WIFEXITED(status));

    CliResult result;
    result.exit_code = WEXITSTATUS(status);
    std::ifstream in(capture, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    result.output = ss.str();
    return result;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("cli: validate reports network shape on success") {
    const CliResult r = run_cli("validate --scenario bundled:mountain-lake");
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "ok: 'mountain-lake' passed validation"));
    CHECK(contains(r.output, "8 reservoirs, 7 stages, 24 steps"));
}

TEST_CASE("cli: validate exits 1 and prints the report when an override breaks the network") {
    const CliResult r =
        run_cli("validate --scenario bundled:mountain-lake --set stages.rush_s1.eta_turbine=2");
    CHECK(r.exit_code == 1);
    CHECK(contains(r.output, "rush_s1"));
    CHECK(contains(r.output, "eta_turbine"));
}

TEST_CASE("cli: usage problems exit 2") {
    SUBCASE("unknown bundled scenario") {
        const CliResult r = run_cli("validate --scenario bundled:atlantis");
        CHECK(r.exit_code == 2);
        CHECK(contains(r.output, "unknown bundled scenario 'atlantis'"));
    }
    SUBCASE("nonexistent scenario file") {
        const CliResult r = run_cli("validate --scenario /definitely/not/here.json");
        CHECK(r.exit_code == 2);
        CHECK(contains(r.output, "cannot open"));
    }
    SUBCASE("missing required option") {
        CHECK(run_cli("validate").exit_code == 2);
    }
    SUBCASE("unknown flag") {
        CHECK(run_cli("validate --scenario bundled:mountain-lake --bogus").exit_code == 2);
    }
    SUBCASE("no subcommand") {
        CHECK(run_cli("").exit_code == 2);
    }
    SUBCASE("malformed override") {
        const CliResult r =
            run_cli("validate --scenario bundled:mountain-lake --set stages.rush_s1.head_m=10");
        CHECK(r.exit_code == 2);
        CHECK(contains(r.output, "unknown override path"));
    }
    SUBCASE("non-positive step override") {
        const CliResult r = run_cli("simulate --scenario bundled:mountain-lake --out /tmp/x "
                                    "--set dt_s=0");
        CHECK(r.exit_code == 2);
        CHECK(contains(r.output, "must be positive"));
    }
}

TEST_CASE("cli: help exits 0 and lists the subcommands") {
    const CliResult r = run_cli("--help");
    CHECK(r.exit_code == 0);
    for (const char* sub : {"validate", "estimate-energy", "simulate", "dispatch", "plan",
                            "optimize"}) {
        CHECK(contains(r.output, sub));
    }
}

TEST_CASE("cli: estimate-energy prints derived and reference figures") {
    const CliResult r = run_cli("estimate-energy --scenario bundled:mountain-lake");
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "lake,head_m,ur_volume_m3,derived_gwh,reference_gwh"));
    CHECK(contains(r.output, "rush,"));
    CHECK(contains(r.output, "1.9285,2.0353"));
    CHECK(contains(r.output, "ives,"));
    CHECK(contains(r.output, "0.8190,1.1171"));
}

TEST_CASE("cli: simulate writes result files and a one-line summary") {
    const fs::path out_a = scratch_dir("cli_sim_a");
    const CliResult a = run_cli("simulate --scenario bundled:mountain-lake --out " +
                                out_a.string());
    CHECK(a.exit_code == 0);
    CHECK(contains(a.output, "wrote " + (out_a / "steps.csv").string()));
    CHECK(contains(a.output, "wrote " + (out_a / "reservoirs.csv").string()));
    CHECK(contains(a.output, "wrote " + (out_a / "summary.json").string()));
    CHECK(contains(a.output, "steps=24"));
    CHECK(contains(a.output, "unserved_wh=0"));
    CHECK(fs::exists(out_a / "steps.csv"));

    SUBCASE("a second run is byte-identical") {
        const fs::path out_b = scratch_dir("cli_sim_b");
        const CliResult b = run_cli("simulate --scenario bundled:mountain-lake --out " +
                                    out_b.string());
        CHECK(b.exit_code == 0);
        for (const char* file : {"steps.csv", "reservoirs.csv", "summary.json"}) {
            CHECK(read_file(out_a / file) == read_file(out_b / file));
        }
    }
}

TEST_CASE("cli: dispatch explains the first-step decision") {
    SUBCASE("deficit from the scenario's own series") {
        const CliResult r = run_cli("dispatch --scenario bundled:mountain-lake");
        CHECK(r.exit_code == 0);
        CHECK(contains(r.output, "(deficit)"));
        CHECK(contains(r.output, "stage rush_s1: generate q_m3s=5.392625466"));
        CHECK(contains(r.output, "unserved_w=0"));
    }
    SUBCASE("surplus with nothing below to pump exports") {
        const CliResult r =
            run_cli("dispatch --scenario bundled:mountain-lake --net-load-w=-2e6");
        CHECK(r.exit_code == 0);
        CHECK(contains(r.output, "(surplus)"));
        CHECK(contains(r.output, "idle"));
        CHECK(contains(r.output, "curtailed_w=0"));
    }
}

TEST_CASE("cli: plan places reservoirs along a terrain profile") {
    const fs::path dir = scratch_dir("cli_plan");

    SUBCASE("gentle ridge") {
        std::ostringstream csv;
        csv << "distance_km,elevation_m\n";
        // Linear 26.76 m drop over 3.78 km, sampled every 0.2 km.
        const double slope = 26.76 / 3.78;
        double d = 0.0;
        int row = 0;
        while (d < 3.78) {
            csv << d << "," << (258.17 - slope * d) << "\n";
            ++row;
            d = 0.2 * (row);
        }
        csv << 3.78 << "," << (258.17 - 26.76) << "\n";
        write_file(dir / "ridge.csv", csv.str());

        const CliResult r = run_cli("plan --terrain " + (dir / "ridge.csv").string() +
                                    " --segment-max-km 1.0 --head-min-m 5.0");
        CHECK(r.exit_code == 0);
        CHECK(contains(r.output, "intermediates=3"));
        CHECK(contains(r.output, "site,distance_km,elevation_m"));
        CHECK(contains(r.output, "segment,span_km,head_m"));
    }
    SUBCASE("a flat stretch longer than the segment cap is a planning failure") {
        write_file(dir / "flat.csv", "distance_km,elevation_m\n0,100\n0.5,99\n2.0,98\n");
        const CliResult r = run_cli("plan --terrain " + (dir / "flat.csv").string() +
                                    " --segment-max-km 1.0 --head-min-m 5.0");
        CHECK(r.exit_code == 1);
        CHECK(contains(r.output, "error:"));
        CHECK(contains(r.output, "blocking span"));
    }
}

TEST_CASE("cli: optimize searches the scenario's declared space") {
    SUBCASE("whole space") {
        const CliResult r = run_cli("optimize --scenario bundled:mountain-lake");
        CHECK(r.exit_code == 0);
        CHECK(contains(r.output, "evaluations=32 exhaustive=true"));
        CHECK(contains(r.output, "best: n_intermediate="));
    }
    SUBCASE("budgeted sampling is reproducible and writes its log") {
        const fs::path out = scratch_dir("cli_opt");
        const std::string cmd = "optimize --scenario bundled:mountain-lake --budget 6 --seed 7";
        const CliResult a = run_cli(cmd + " --out " + out.string());
        CHECK(a.exit_code == 0);
        CHECK(contains(a.output, "exhaustive=false"));
        CHECK(fs::exists(out / "evaluations.csv"));
        CHECK(fs::exists(out / "best_config.json"));

        const CliResult b = run_cli(cmd);
        CHECK(contains(a.output, b.output)); // same search, minus the "wrote" lines
    }
}
