#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "json.hpp"

namespace {

std::string binary_path() {
    const char* p = std::getenv("POISSONOPT_BIN");
    REQUIRE_MESSAGE(p != nullptr, "POISSONOPT_BIN must point at the CLI binary");
    return p;
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CliResult run_cli(const std::string& args) {
    static int invocation = 0;
    const std::string out_path = "cli_stdout_" + std::to_string(invocation) + ".txt";
    const std::string err_path = "cli_stderr_" + std::to_string(invocation) + ".txt";
    ++invocation;

    const std::string cmd = binary_path() + " " + args + " > " + out_path + " 2> " + err_path;
    const int raw = std::system(cmd.c_str());

    CliResult r;
    r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    std::remove(out_path.c_str());
    std::remove(err_path.c_str());
    return r;
}

bool file_exists(const std::string& path) {
    std::ifstream in(path);
    return in.good();
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
}

// small run so the whole pipeline stays fast
const char* kConfigBody = R"({
  "population_size": 12,
  "max_generations": 6,
  "stall_gens": 50,
  "seed": 1,
  "seismic": {"m": 20}
})";

} // namespace

TEST_CASE("generate is deterministic per seed") {
    CliResult a = run_cli("generate --nodes 4 --types 2 --seed 7 --out cli_spec_a.json");
    CHECK(a.exit_code == 0);
    CHECK(a.out.find("wrote cli_spec_a.json") != std::string::npos);
    CliResult b = run_cli("generate --nodes 4 --types 2 --seed 7 --out cli_spec_b.json");
    CHECK(b.exit_code == 0);
    CHECK(slurp("cli_spec_a.json") == slurp("cli_spec_b.json"));

    CliResult c = run_cli("generate --nodes 4 --types 2 --seed 8 --out cli_spec_c.json");
    CHECK(c.exit_code == 0);
    CHECK(slurp("cli_spec_a.json") != slurp("cli_spec_c.json"));
    std::remove("cli_spec_b.json");
    std::remove("cli_spec_c.json");
}

TEST_CASE("optimize refuses a missing spec with exit code 2") {
    CliResult r = run_cli("optimize --spec cli_no_such_spec.json --out cli_run_missing");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("not found") != std::string::npos);
    CHECK(r.err.find("cli_no_such_spec.json") != std::string::npos);
}

TEST_CASE("optimize writes the run bundle and repeats byte-identically per seed") {
    run_cli("generate --nodes 4 --types 2 --seed 7 --out cli_spec_a.json");
    write_file("cli_config.json", kConfigBody);

    CliResult a = run_cli(
        "optimize --spec cli_spec_a.json --config cli_config.json --seed 5 --out cli_run_a");
    CHECK(a.exit_code == 0);
    CHECK(a.out.find("generations=") != std::string::npos);
    for (const char* name : {"manifest.json", "archive.csv", "run.json", "magnitudes.csv"})
        CHECK(file_exists(std::string("cli_run_a/") + name));

    CliResult b = run_cli(
        "optimize --spec cli_spec_a.json --config cli_config.json --seed 5 --out cli_run_b");
    CHECK(b.exit_code == 0);
    CHECK(slurp("cli_run_a/archive.csv") == slurp("cli_run_b/archive.csv"));
    CHECK(slurp("cli_run_a/magnitudes.csv") == slurp("cli_run_b/magnitudes.csv"));

    CliResult c = run_cli(
        "optimize --spec cli_spec_a.json --config cli_config.json --seed 6 --out cli_run_c");
    CHECK(c.exit_code == 0);
    CHECK(slurp("cli_run_a/archive.csv") != slurp("cli_run_c/archive.csv"));

    const std::string archive = slurp("cli_run_a/archive.csv");
    CHECK(archive.rfind("solution_id,x_0,x_1,x_2,x_3,x_4,x_5,x_6,x_7,G,F1,F2,h1,h2,h3,penalty\n",
                        0) == 0);
}

TEST_CASE("the manifest records the effective seed") {
    // cli_run_a came from --seed 5 overriding the config seed 1
    const nlohmann::json with_flag = nlohmann::json::parse(slurp("cli_run_a/manifest.json"));
    CHECK(with_flag["seed"].get<std::uint64_t>() == 5);
    CHECK(with_flag["spec"].get<std::string>() == "cli_spec_a.json");
    CHECK(with_flag["version"].is_string());
    CHECK(with_flag["timestamp"].is_string());

    CliResult r = run_cli(
        "optimize --spec cli_spec_a.json --config cli_config.json --out cli_run_noseed");
    CHECK(r.exit_code == 0);
    const nlohmann::json without_flag =
        nlohmann::json::parse(slurp("cli_run_noseed/manifest.json"));
    CHECK(without_flag["seed"].get<std::uint64_t>() == 1);
}

TEST_CASE("run report is valid JSON with the documented fields") {
    const nlohmann::json j = nlohmann::json::parse(slurp("cli_run_a/run.json"));
    CHECK(j["seed"].get<std::uint64_t>() == 5);
    CHECK(j["config"]["population_size"].get<int>() == 12);
    CHECK(j["generations_run"].get<int>() >= 1);
    CHECK(j["hypervolume"].is_array());
    CHECK(j["best"].contains("position"));
    CHECK(j["best"].contains("penalized"));
    CHECK(j["stop_reason"].is_string());
}

TEST_CASE("analyze emits both reports by default and narrows under flags") {
    CliResult r = run_cli("analyze --run cli_run_a --bins 10 --iterations 200 --seed 3");
    CHECK(r.exit_code == 0);
    CHECK(file_exists("cli_run_a/histogram.csv"));
    CHECK(file_exists("cli_run_a/analysis.json"));

    nlohmann::json j = nlohmann::json::parse(slurp("cli_run_a/analysis.json"));
    CHECK(j.contains("gr_fit"));
    CHECK(j.contains("poisson_check"));
    CHECK(j["histogram"]["counts"].size() == 10);
    CHECK(j["poisson_check"]["samples"].get<long long>() == 200);

    const std::string hist = slurp("cli_run_a/histogram.csv");
    CHECK(hist.rfind("bin_midpoint,count,fitted\n", 0) == 0);

    CliResult gr_only =
        run_cli("analyze --run cli_run_a --gr-fit --bins 10 --out cli_ana_gr");
    CHECK(gr_only.exit_code == 0);
    j = nlohmann::json::parse(slurp("cli_ana_gr/analysis.json"));
    CHECK(j.contains("gr_fit"));
    CHECK_FALSE(j.contains("poisson_check"));

    CliResult poisson_only = run_cli(
        "analyze --run cli_run_a --poisson-check --bins 10 --iterations 150 --out cli_ana_p");
    CHECK(poisson_only.exit_code == 0);
    j = nlohmann::json::parse(slurp("cli_ana_p/analysis.json"));
    CHECK_FALSE(j.contains("gr_fit"));
    CHECK(j.contains("poisson_check"));
}

TEST_CASE("analyze rejects missing or empty traces") {
    CliResult missing = run_cli("analyze --run cli_no_such_run");
    CHECK(missing.exit_code == 2);
    CHECK(missing.err.find("not found") != std::string::npos);

    REQUIRE(std::system("mkdir -p cli_empty_run") == 0);
    write_file("cli_empty_run/magnitudes.csv", "generation,magnitude\n");
    CliResult empty = run_cli("analyze --run cli_empty_run");
    CHECK(empty.exit_code == 1);
    CHECK(empty.err.find("empty magnitude trace") != std::string::npos);
}

TEST_CASE("hypervolume reports the front measure and contributions") {
    write_file("cli_front.csv", "f1,f2\n1,3\n2,2\n3,1\n");
    CliResult r = run_cli("hypervolume --front cli_front.csv --ref 4,4 --out cli_hv.json");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("hypervolume = 6") != std::string::npos);
    CHECK(r.out.find("point 0") != std::string::npos);
    CHECK(r.out.find("contribution = 1") != std::string::npos);

    const nlohmann::json j = nlohmann::json::parse(slurp("cli_hv.json"));
    CHECK(j["hypervolume"].get<double>() == doctest::Approx(6.0));
    REQUIRE(j["points"].size() == 3);
    for (const auto& p : j["points"])
        CHECK(p["contribution"].get<double>() == doctest::Approx(1.0));

    write_file("cli_point.csv", "0,0\n");
    CliResult single = run_cli("hypervolume --front cli_point.csv --ref 1,1");
    CHECK(single.exit_code == 0);
    CHECK(single.out.find("hypervolume = 1") != std::string::npos);
}

TEST_CASE("hypervolume rejects an uncovering reference") {
    write_file("cli_front_bad.csv", "5,0\n");
    CliResult r = run_cli("hypervolume --front cli_front_bad.csv --ref 4,4");
    CHECK(r.exit_code == 1);
    CHECK(r.err.find("reference point does not cover") != std::string::npos);

    CliResult missing = run_cli("hypervolume --front cli_no_front.csv --ref 4,4");
    CHECK(missing.exit_code == 2);
}

TEST_CASE("usage errors and version flag") {
    CliResult none = run_cli("");
    CHECK(none.exit_code != 0);

    CliResult version = run_cli("--version");
    CHECK(version.exit_code == 0);
    CHECK(version.out.find("0.1.0") != std::string::npos);

    // cleanup for everything the suite created in the build tree
    CHECK(std::system("rm -rf cli_run_a cli_run_b cli_run_c cli_run_noseed cli_ana_gr cli_ana_p "
                      "cli_empty_run cli_spec_a.json cli_config.json cli_front.csv cli_point.csv "
                      "cli_front_bad.csv cli_hv.json") == 0);
}
