#include <array>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "poissonopt/analysis.hpp"
#include "poissonopt/engine.hpp"
#include "poissonopt/generator.hpp"
#include "poissonopt/moo.hpp"
#include "poissonopt/problem.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace poissonopt;

namespace {

constexpr const char* kVersion = "0.1.0";

// exit code 2: a named input file is absent
struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void atomic_write(const std::string& path, const std::string& body) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write `" + tmp + "`");
        out << body;
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move `" + tmp + "` into place");
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::exists(path)) throw MissingInput(what + " not found: " + path);
}

EngineConfig load_engine_config(const std::string& path) {
    EngineConfig c;
    if (path.empty()) return c;
    require_file(path, "config file");
    std::ifstream in(path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config `" + path + "` is not valid JSON: " + std::string(e.what()));
    }
    c.population_size = j.value("population_size", c.population_size);
    c.max_generations = j.value("max_generations", c.max_generations);
    c.selection_count = j.value("selection_count", c.selection_count);
    c.p_cross = j.value("p_cross", c.p_cross);
    c.vartheta_de = j.value("vartheta_de", c.vartheta_de);
    c.objective_dim = j.value("objective_dim", c.objective_dim);
    c.stall_gens = j.value("stall_gens", c.stall_gens);
    c.check_archive = j.value("check_archive", c.check_archive);
    if (j.contains("selection")) {
        const std::string mode = j.at("selection").get<std::string>();
        if (mode == "inverted")
            c.selection = SelectionMode::inverted;
        else if (mode == "literal")
            c.selection = SelectionMode::literal;
        else
            throw std::runtime_error("config `selection` must be \"inverted\" or \"literal\"");
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("seismic")) {
        const json& s = j.at("seismic");
        c.seismic.m = s.value("m", c.seismic.m);
        c.seismic.vartheta = s.value("vartheta", c.seismic.vartheta);
        c.seismic.b0 = s.value("b0", c.seismic.b0);
        c.seismic.b1 = s.value("b1", c.seismic.b1);
        c.seismic.sigma_lnp = s.value("sigma_lnp", c.seismic.sigma_lnp);
        c.seismic.ellipse_a = s.value("ellipse_a", c.seismic.ellipse_a);
        c.seismic.ellipse_b = s.value("ellipse_b", c.seismic.ellipse_b);
        c.seismic.chi = s.value("chi", c.seismic.chi);
        c.seismic.q1 = s.value("q1", c.seismic.q1);
        c.seismic.q2 = s.value("q2", c.seismic.q2);
        c.seismic.d_min = s.value("d_min", c.seismic.d_min);
        c.seismic.d_max = s.value("d_max", c.seismic.d_max);
        c.seismic.lambda_loc = s.value("lambda_loc", c.seismic.lambda_loc);
        c.seismic.n_ref = s.value("n_ref", c.seismic.n_ref);
    }
    return c;
}

void write_manifest(const std::string& out_dir, const std::string& spec_path,
                    const std::string& config_path, std::uint64_t seed) {
    json m;
    m["spec"] = spec_path;
    m["config"] = config_path;
    m["seed"] = seed;
    m["out"] = out_dir;
    m["version"] = kVersion;
    m["timestamp"] = timestamp_utc();
    atomic_write((fs::path(out_dir) / "manifest.json").string(), m.dump(2) + "\n");
}

int cmd_generate(int nodes, int types, std::uint64_t seed, const std::string& out) {
    const NetworkSpec spec = generate_network_spec(nodes, types, seed);
    save_network_spec(spec, out);
    std::cout << "wrote " << out << " (nodes=" << nodes << ", types=" << types << ", seed=" << seed
              << ")\n";
    return 0;
}

int cmd_optimize(const std::string& spec_path, const std::string& config_path,
                 std::uint64_t seed, bool seed_given, const std::string& selection_flag,
                 const std::string& out_dir) {
    require_file(spec_path, "spec file");
    const NetworkSpec spec = load_network_spec(spec_path);

    EngineConfig config = load_engine_config(config_path);
    if (seed_given) config.seed = seed;
    if (!selection_flag.empty())
        config.selection =
            selection_flag == "literal" ? SelectionMode::literal : SelectionMode::inverted;
    validate_config(config);

    fs::create_directories(out_dir);
    write_manifest(out_dir, spec_path, config_path, config.seed);

    const RunReport report = run_optimizer(spec, config);
    write_archive_csv(report, (fs::path(out_dir) / "archive.csv").string());
    write_run_json(report, (fs::path(out_dir) / "run.json").string());
    write_magnitude_csv(report, (fs::path(out_dir) / "magnitudes.csv").string());

    std::cout << "generations=" << report.generations_run << " archive=" << report.rows.size()
              << " best_penalized=" << fmt17(report.best.penalized) << " stop=" << report.stop_reason
              << " wall_s=" << report.wall_seconds << "\n";
    return 0;
}

std::vector<double> read_magnitude_trace(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::vector<double> mags;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("malformed magnitude trace at line " + std::to_string(lineno));
        const std::string second = line.substr(comma + 1);
        if (lineno == 1 && second == "magnitude") continue; // header
        try {
            mags.push_back(std::stod(second));
        } catch (const std::exception&) {
            throw std::runtime_error("malformed magnitude trace at line " + std::to_string(lineno));
        }
    }
    return mags;
}

int cmd_analyze(const std::string& run_dir, bool gr_fit, bool poisson_check, int bins,
                bool log_midpoints, int iterations, std::uint64_t seed,
                const std::string& out_dir_flag) {
    const std::string trace_path = (fs::path(run_dir) / "magnitudes.csv").string();
    require_file(trace_path, "magnitude trace");
    const std::vector<double> mags = read_magnitude_trace(trace_path);
    if (mags.empty()) throw std::runtime_error("empty magnitude trace: " + trace_path);

    const bool want_gr = gr_fit || !poisson_check;      // default: everything
    const bool want_poisson = poisson_check || !gr_fit; // flags narrow the set

    const MagnitudeHistogram hist = magnitude_histogram(mags, bins);

    json out;
    out["trace"] = trace_path;
    out["samples"] = hist.total;
    json h;
    h["edges"] = hist.edges;
    h["counts"] = hist.counts;
    h["total"] = hist.total;
    out["histogram"] = h;

    bool have_fit = false;
    GrFit fit;
    if (want_gr || want_poisson) {
        fit = gutenberg_richter_fit(hist, log_midpoints);
        have_fit = true;
    }
    if (want_gr) {
        json g;
        g["a"] = fit.a;
        g["b"] = fit.b;
        g["residual"] = fit.residual;
        g["log_midpoints"] = log_midpoints;
        out["gr_fit"] = g;
    }
    if (want_poisson) {
        // per-bin rates from the fitted law over the occupied bins
        std::vector<double> lambdas;
        for (size_t bin = 0; bin < hist.bins(); ++bin) {
            if (hist.counts[bin] <= 0) continue;
            double x = hist.midpoint(bin);
            if (log_midpoints) x = std::log10(x);
            lambdas.push_back(std::pow(10.0, fit.a - fit.b * x));
        }
        RngStream rng(seed);
        const PoissonAggregateReport rep =
            poisson_aggregate_check(lambdas, 1, iterations, rng);
        json p;
        p["lambda_total"] = rep.lambda_total;
        p["sample_mean"] = rep.sample_mean;
        p["sample_variance"] = rep.sample_variance;
        p["mean_variance_ratio"] = rep.mean_variance_ratio;
        p["jarque_bera"] = rep.jarque_bera;
        p["normal_at_1pct"] = rep.normal_at_1pct;
        p["samples"] = rep.samples;
        p["iterations"] = iterations;
        p["seed"] = seed;
        out["poisson_check"] = p;
    }

    const std::string out_dir = out_dir_flag.empty() ? run_dir : out_dir_flag;
    fs::create_directories(out_dir);

    std::string csv = "bin_midpoint,count";
    if (have_fit) csv += ",fitted";
    csv += "\n";
    for (size_t bin = 0; bin < hist.bins(); ++bin) {
        csv += fmt17(hist.midpoint(bin)) + "," + std::to_string(hist.counts[bin]);
        if (have_fit) {
            double x = hist.midpoint(bin);
            if (log_midpoints) x = std::log10(x);
            csv += "," + fmt17(std::pow(10.0, fit.a - fit.b * x));
        }
        csv += "\n";
    }
    atomic_write((fs::path(out_dir) / "histogram.csv").string(), csv);
    atomic_write((fs::path(out_dir) / "analysis.json").string(), out.dump(2) + "\n");

    std::cout << "analyzed " << mags.size() << " magnitudes into " << bins << " bins";
    if (want_gr) std::cout << "; a=" << fit.a << " b=" << fit.b;
    std::cout << "\n";
    return 0;
}

std::vector<std::array<double, 2>> read_front_csv(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::vector<std::array<double, 2>> front;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b))
            throw std::runtime_error("malformed front CSV at line " + std::to_string(lineno));
        try {
            front.push_back({std::stod(a), std::stod(b)});
        } catch (const std::exception&) {
            if (lineno == 1) continue; // header
            throw std::runtime_error("malformed front CSV at line " + std::to_string(lineno));
        }
    }
    if (front.empty()) throw std::runtime_error("front CSV has no points: " + path);
    return front;
}

int cmd_hypervolume(const std::string& front_path, const std::vector<double>& ref_values,
                    const std::string& out_path) {
    require_file(front_path, "front CSV");
    if (ref_values.size() != 2)
        throw std::runtime_error("reference point needs exactly two coordinates");
    const std::array<double, 2> ref{ref_values[0], ref_values[1]};
    const std::vector<std::array<double, 2>> front = read_front_csv(front_path);

    const double hv = hypervolume_2d(front, ref);
    std::cout << "hypervolume = " << fmt17(hv) << "\n";
    json points = json::array();
    for (size_t i = 0; i < front.size(); ++i) {
        const double c = hypervolume_contribution(front, i, ref);
        std::cout << "point " << i << " (" << fmt17(front[i][0]) << ", " << fmt17(front[i][1])
                  << ") contribution = " << fmt17(c) << "\n";
        json p;
        p["f1"] = front[i][0];
        p["f2"] = front[i][1];
        p["contribution"] = c;
        points.push_back(p);
    }
    if (!out_path.empty()) {
        json j;
        j["hypervolume"] = hv;
        j["ref"] = ref;
        j["points"] = points;
        atomic_write(out_path, j.dump(2) + "\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poisson-seismic multiobjective optimizer for entanglement allocation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic network spec");
    int g_nodes = 4, g_types = 2;
    std::uint64_t g_seed = 1;
    std::string g_out = "spec.json";
    gen->add_option("--nodes", g_nodes, "Node count")->check(CLI::PositiveNumber);
    gen->add_option("--types", g_types, "Fidelity type count")->check(CLI::PositiveNumber);
    gen->add_option("--seed", g_seed, "Generator seed");
    gen->add_option("--out", g_out, "Output spec path");

    // optimize
    auto* opt = app.add_subcommand("optimize", "Run the optimizer on a spec");
    std::string o_spec, o_config, o_out = "run", o_selection;
    std::uint64_t o_seed = 1;
    opt->add_option("--spec", o_spec, "Network spec JSON")->required();
    opt->add_option("--config", o_config, "Engine config JSON");
    auto* o_seed_opt = opt->add_option("--seed", o_seed, "Run seed (overrides config)");
    opt->add_option("--out", o_out, "Output directory");
    opt->add_option("--selection", o_selection, "Selection rule")
        ->check(CLI::IsMember({"inverted", "literal"}));

    // analyze
    auto* ana = app.add_subcommand("analyze", "Analyze a run's magnitude trace");
    std::string a_run, a_out;
    bool a_gr = false, a_poisson = false, a_logmid = false;
    int a_bins = 10, a_iters = 1000;
    std::uint64_t a_seed = 1;
    ana->add_option("--run", a_run, "Run directory")->required();
    ana->add_flag("--gr-fit", a_gr, "Emit the power-law fit");
    ana->add_flag("--poisson-check", a_poisson, "Emit the Poisson aggregate check");
    ana->add_option("--bins", a_bins, "Histogram bin count")->check(CLI::Range(2, 1000000));
    ana->add_flag("--log-midpoints", a_logmid, "Regress on log10 of bin midpoints");
    ana->add_option("--iterations", a_iters, "Poisson check iterations")
        ->check(CLI::Range(100, 100000000));
    ana->add_option("--seed", a_seed, "Poisson check seed");
    ana->add_option("--out", a_out, "Output directory (default: run directory)");

    // hypervolume
    auto* hv = app.add_subcommand("hypervolume", "2-D hypervolume of a front CSV");
    std::string h_front, h_out;
    std::vector<double> h_ref;
    hv->add_option("--front", h_front, "Front CSV with two columns")->required();
    hv->add_option("--ref", h_ref, "Reference point, two values")->required()->expected(2)
        ->delimiter(',');
    hv->add_option("--out", h_out, "Optional JSON output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(g_nodes, g_types, g_seed, g_out);
        if (opt->parsed())
            return cmd_optimize(o_spec, o_config, o_seed, o_seed_opt->count() > 0, o_selection,
                                o_out);
        if (ana->parsed())
            return cmd_analyze(a_run, a_gr, a_poisson, a_bins, a_logmid, a_iters, a_seed, a_out);
        if (hv->parsed()) return cmd_hypervolume(h_front, h_ref, h_out);
    } catch (const MissingInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
