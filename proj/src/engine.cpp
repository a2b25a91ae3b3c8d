#include "poissonopt/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"
#include "poissonopt/seismic.hpp"

namespace poissonopt {

namespace {

// picks `count` distinct dimension indices with a partial Fisher-Yates pass
std::vector<size_t> sample_dims(size_t dim, size_t count, RngStream& rng) {
    std::vector<size_t> idx(dim);
    std::iota(idx.begin(), idx.end(), 0);
    for (size_t k = 0; k < count; ++k) {
        const auto swap_with =
            static_cast<size_t>(rng.uniform_int(static_cast<long long>(k), static_cast<long long>(dim) - 1));
        std::swap(idx[k], idx[swap_with]);
    }
    idx.resize(count);
    return idx;
}

std::array<double, 2> front_point(const Solution& s, int objective_dim) {
    // the cost pair lives in the last two objective slots
    if (objective_dim == 3) return {s.objectives[1], s.objectives[2]};
    return {s.objectives[0], s.objectives[1]};
}

} // namespace

RunReport run_optimizer(const NetworkSpec& spec, const EngineConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    validate_spec(spec);
    validate_config(config);

    const int dim = spec.dim();
    const std::vector<double>& lo = spec.bounds_low;
    const std::vector<double>& up = spec.bounds_up;
    const size_t p_sel = config.selection_count == 0 ? static_cast<size_t>(config.population_size)
                                                     : static_cast<size_t>(config.selection_count);
    // stream-id stride; keeps per-epicenter streams disjoint across
    // generations even when the refill count differs from the initial size
    const std::uint64_t stride = std::max<std::uint64_t>(static_cast<std::uint64_t>(config.population_size),
                                                         static_cast<std::uint64_t>(p_sel));

    RunReport report;
    report.config = config;
    report.seed = config.seed;
    report.dim = dim;

    BestRecord best;
    bool best_set = false;

    auto evaluate = [&](const std::vector<double>& position) {
        const ThroughputMatrix x = ThroughputMatrix::from_position(position, spec.nodes, spec.types);
        const ObjectiveVector o = objective_vector(spec, x);
        const ViolationRecord v = constraint_violations(spec, x, PenaltyWeights{});

        Solution s;
        s.position = position;
        s.violations = v;
        if (config.objective_dim == 3)
            s.objectives = {o.g_neg, o.f1, o.f2};
        else
            s.objectives = {o.f1, o.f2};

        const double penalized = o.g_neg + v.penalty;
        if (!best_set || penalized < best.penalized) {
            best_set = true;
            best.position = position;
            best.objectives = o;
            best.violations = v;
            best.penalized = penalized;
        }
        return s;
    };

    RngStream master(config.seed);

    std::vector<Solution> pop;
    pop.reserve(static_cast<size_t>(config.population_size));
    for (int i = 0; i < config.population_size; ++i) {
        std::vector<double> x(static_cast<size_t>(dim));
        for (int k = 0; k < dim; ++k) x[static_cast<size_t>(k)] = master.uniform(lo[k], up[k]);
        pop.push_back(evaluate(x));
    }

    ParetoArchive archive;
    std::vector<double> prev_c(pop.size(), 1.0);
    std::vector<double> prev_mag(pop.size(), 1.0);
    std::vector<std::vector<std::array<double, 2>>> snapshots;
    int stall = 0;

    int gen = 0;
    for (gen = 1; gen <= config.max_generations; ++gen) {
        const size_t n_pop = pop.size();

        // fitness over population plus archive drives the dispersion shares
        std::vector<Solution> pool = pop;
        pool.insert(pool.end(), archive.members.begin(), archive.members.end());
        fitness_assignment(pool);
        for (size_t i = 0; i < n_pop; ++i) pop[i] = pool[i];

        std::vector<double> pop_fitness(n_pop);
        for (size_t i = 0; i < n_pop; ++i) pop_fitness[i] = pop[i].fitness;
        const DispersionResult disp = dispersion_counts(pop_fitness, config.seismic);

        // per-epicenter streams persist through location generation and spawn
        std::vector<RngStream> streams;
        streams.reserve(n_pop);
        for (size_t i = 0; i < n_pop; ++i)
            streams.push_back(master.derive(static_cast<std::uint64_t>(gen) * stride + i));

        std::vector<std::vector<Solution>> locations(n_pop);
        for (size_t i = 0; i < n_pop; ++i) {
            RngStream& st = streams[i];
            for (int j = 0; j < disp.counts[i]; ++j) {
                std::vector<double> x = pop[i].position;
                const auto displaced =
                    static_cast<size_t>(st.uniform_int(1, static_cast<long long>(dim)));
                for (size_t k : sample_dims(static_cast<size_t>(dim), displaced, st))
                    x[k] = normalize_coordinate(hypocentral_displace(x[k], prev_c[i], prev_mag[i], st),
                                                lo[k], up[k]);
                const auto jittered =
                    static_cast<size_t>(st.uniform_int(1, static_cast<long long>(dim)));
                for (size_t k : sample_dims(static_cast<size_t>(dim), jittered, st))
                    x[k] = poisson_location(x[k], lo[k], up[k], config.seismic, st);
                locations[i].push_back(evaluate(x));
            }
        }

        // location fitness against population, archive, and all locations
        pool = pop;
        pool.insert(pool.end(), archive.members.begin(), archive.members.end());
        for (const auto& group : locations) pool.insert(pool.end(), group.begin(), group.end());
        fitness_assignment(pool);
        {
            size_t cursor = n_pop + archive.size();
            for (auto& group : locations)
                for (auto& loc : group) loc = pool[cursor++];
        }

        // power is highest where fitness is lowest; magnitudes follow through
        // the elliptical distance of the location offset from its epicenter
        std::vector<std::vector<double>> powers(n_pop);
        std::vector<std::vector<double>> mags(n_pop);
        for (size_t i = 0; i < n_pop; ++i) {
            powers[i].reserve(locations[i].size());
            mags[i].reserve(locations[i].size());
            for (const Solution& loc : locations[i]) {
                const double p = 1.0 / (1.0 + loc.fitness);
                std::vector<double> offset(static_cast<size_t>(dim));
                for (int k = 0; k < dim; ++k)
                    offset[static_cast<size_t>(k)] =
                        loc.position[static_cast<size_t>(k)] - pop[i].position[static_cast<size_t>(k)];
                const double dist = offset_ellipse_distance(config.seismic, offset);
                const double m = magnitude_from_power(p, dist, config.seismic);
                powers[i].push_back(p);
                mags[i].push_back(m);
                report.magnitudes.emplace_back(gen, m);
            }
        }

        const PeakPower peaks = peak_power(powers);
        std::vector<double> mag_at_peak(n_pop);
        for (size_t i = 0; i < n_pop; ++i) mag_at_peak[i] = mags[i][peaks.peak_location[i]];

        const std::vector<double> cum = cumulative_magnitudes(pop_fitness, mag_at_peak, config.seismic);
        const double radius = relevance_radius(mag_at_peak, config.seismic);
        double mean_mag = 0.0;
        for (double m : mag_at_peak) mean_mag += m;
        mean_mag /= static_cast<double>(n_pop);

        // spawn one candidate epicenter per population slot
        std::vector<Solution> spawned;
        spawned.reserve(n_pop);
        SpawnContext ctx;
        for (size_t i = 0; i < n_pop; ++i) {
            RngStream& st = streams[i];
            std::vector<std::vector<double>> refs(static_cast<size_t>(config.seismic.n_ref));
            for (auto& ref : refs) {
                ref.resize(static_cast<size_t>(dim));
                for (int k = 0; k < dim; ++k) ref[static_cast<size_t>(k)] = st.uniform(lo[k], up[k]);
            }
            spawned.push_back(evaluate(spawn_epicenter(pop[i].position, refs, radius, mean_mag, lo,
                                                       up, config.seismic, ctx, st)));
        }

        std::vector<Solution> candidates = pop;
        for (const auto& group : locations)
            candidates.insert(candidates.end(), group.begin(), group.end());
        candidates.insert(candidates.end(), spawned.begin(), spawned.end());
        bool changed = update_archive(archive, candidates);

        // exploration pool: everything evaluated this generation
        std::vector<Solution> full = pop;
        full.insert(full.end(), archive.members.begin(), archive.members.end());
        for (const auto& group : locations) full.insert(full.end(), group.begin(), group.end());
        full.insert(full.end(), spawned.begin(), spawned.end());
        fitness_assignment(full);

        const std::vector<size_t> picked = selection(full, p_sel, config.selection, master);
        const std::vector<Solution> varied =
            de_variation(picked, full, config, lo, up, evaluate, master);
        changed = update_archive(archive, varied) || changed;

        if (config.check_archive && !archive_invariant_holds(archive))
            throw std::logic_error("archive invariant violated");

        // refill: keep the fittest, sample the rest without replacement
        for (size_t k = 0; k < picked.size(); ++k) full[picked[k]] = varied[k];
        size_t best_idx = 0;
        for (size_t i = 1; i < full.size(); ++i)
            if (full[i].fitness < full[best_idx].fitness) best_idx = i;

        std::vector<Solution> rest;
        rest.reserve(full.size() - 1);
        for (size_t i = 0; i < full.size(); ++i)
            if (i != best_idx) rest.push_back(full[i]);

        std::vector<Solution> next_pop;
        next_pop.reserve(p_sel);
        next_pop.push_back(full[best_idx]);
        for (size_t idx : selection(rest, p_sel - 1, config.selection, master))
            next_pop.push_back(rest[idx]);
        pop = std::move(next_pop);

        // carry magnitude context into the next generation by slot
        std::vector<double> next_c(pop.size()), next_mag(pop.size());
        for (size_t s = 0; s < pop.size(); ++s) {
            const size_t src = std::min(s, n_pop - 1);
            next_c[s] = cum[src];
            next_mag[s] = mag_at_peak[src];
        }
        prev_c = std::move(next_c);
        prev_mag = std::move(next_mag);

        GenerationRecord rec;
        rec.generation = gen;
        rec.best_penalized = best.penalized;
        rec.best_fitness = full[best_idx].fitness;
        rec.archive_size = archive.size();
        rec.radius = radius;
        rec.locations = disp.total;
        report.generations.push_back(rec);

        std::vector<std::array<double, 2>> snap;
        snap.reserve(archive.size());
        for (const Solution& s : archive.members) snap.push_back(front_point(s, config.objective_dim));
        snapshots.push_back(std::move(snap));

        stall = changed ? 0 : stall + 1;
        if (stall >= config.stall_gens) break;
    }
    report.generations_run = static_cast<int>(report.generations.size());
    report.stop_reason = report.generations_run < config.max_generations ? "archive stagnation"
                                                                         : "generation cap";

    // one shared reference point makes the trajectory comparable across
    // generations
    std::array<double, 2> ref{1.0, 1.0};
    bool any = false;
    for (const auto& snap : snapshots) {
        for (const auto& p : snap) {
            if (!any) {
                ref = p;
                any = true;
            } else {
                ref[0] = std::max(ref[0], p[0]);
                ref[1] = std::max(ref[1], p[1]);
            }
        }
    }
    if (any) {
        ref[0] += 0.1 * std::max(1.0, std::abs(ref[0]));
        ref[1] += 0.1 * std::max(1.0, std::abs(ref[1]));
    }
    report.hypervolume_ref = ref;
    report.hypervolume.reserve(snapshots.size());
    for (const auto& snap : snapshots) report.hypervolume.push_back(hypervolume_2d(snap, ref));

    report.archive = archive;
    report.rows.reserve(archive.size());
    for (const Solution& s : archive.members) {
        const ThroughputMatrix x = ThroughputMatrix::from_position(s.position, spec.nodes, spec.types);
        ArchiveRow row;
        row.position = s.position;
        row.g = main_objective(spec, x);
        const auto cost_pair = front_point(s, config.objective_dim);
        row.f1 = cost_pair[0];
        row.f2 = cost_pair[1];
        row.h1 = s.violations.h1;
        row.h2 = s.violations.h2;
        row.h3 = s.violations.h3;
        row.penalty = s.violations.penalty;
        report.rows.push_back(std::move(row));
    }

    report.best = best;
    {
        const ThroughputMatrix x =
            ThroughputMatrix::from_position(best.position, spec.nodes, spec.types);
        const NodePartition partition = classify_nodes(spec);
        const auto split = class_objectives(spec, x, partition);
        report.best_g_low = split.first;
        report.best_g_high = split.second;
        report.best_combined = combined_class_objective(spec, x, partition);
    }

    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
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

} // namespace

void write_archive_csv(const RunReport& report, const std::string& path) {
    std::string body = "solution_id";
    for (int k = 0; k < report.dim; ++k) body += ",x_" + std::to_string(k);
    body += ",G,F1,F2,h1,h2,h3,penalty\n";
    for (size_t i = 0; i < report.rows.size(); ++i) {
        const ArchiveRow& r = report.rows[i];
        body += std::to_string(i);
        for (double x : r.position) body += "," + fmt(x);
        body += "," + fmt(r.g) + "," + fmt(r.f1) + "," + fmt(r.f2);
        body += "," + fmt(r.h1) + "," + fmt(r.h2) + "," + fmt(r.h3) + "," + fmt(r.penalty) + "\n";
    }
    atomic_write(path, body);
}

void write_magnitude_csv(const RunReport& report, const std::string& path) {
    std::string body = "generation,magnitude\n";
    for (const auto& [gen, mag] : report.magnitudes)
        body += std::to_string(gen) + "," + fmt(mag) + "\n";
    atomic_write(path, body);
}

void write_run_json(const RunReport& report, const std::string& path) {
    using nlohmann::json;
    json j;
    j["seed"] = report.seed;

    json cfg;
    cfg["population_size"] = report.config.population_size;
    cfg["max_generations"] = report.config.max_generations;
    cfg["selection_count"] = report.config.selection_count;
    cfg["p_cross"] = report.config.p_cross;
    cfg["vartheta_de"] = report.config.vartheta_de;
    cfg["objective_dim"] = report.config.objective_dim;
    cfg["stall_gens"] = report.config.stall_gens;
    cfg["selection"] = report.config.selection == SelectionMode::inverted ? "inverted" : "literal";
    json seis;
    seis["m"] = report.config.seismic.m;
    seis["vartheta"] = report.config.seismic.vartheta;
    seis["b0"] = report.config.seismic.b0;
    seis["b1"] = report.config.seismic.b1;
    seis["sigma_lnp"] = report.config.seismic.sigma_lnp;
    seis["ellipse_a"] = report.config.seismic.ellipse_a;
    seis["ellipse_b"] = report.config.seismic.ellipse_b;
    seis["chi"] = report.config.seismic.chi;
    seis["q1"] = report.config.seismic.q1;
    seis["q2"] = report.config.seismic.q2;
    seis["d_min"] = report.config.seismic.d_min;
    seis["d_max"] = report.config.seismic.d_max;
    seis["lambda_loc"] = report.config.seismic.lambda_loc;
    seis["n_ref"] = report.config.seismic.n_ref;
    cfg["seismic"] = seis;
    j["config"] = cfg;

    json gens = json::array();
    for (const GenerationRecord& g : report.generations) {
        json row;
        row["generation"] = g.generation;
        row["best_penalized"] = g.best_penalized;
        row["best_fitness"] = g.best_fitness;
        row["archive_size"] = g.archive_size;
        row["radius"] = g.radius;
        row["locations"] = g.locations;
        gens.push_back(row);
    }
    j["generations"] = gens;

    j["hypervolume"] = report.hypervolume;
    j["hypervolume_ref"] = report.hypervolume_ref;

    json best;
    best["position"] = report.best.position;
    best["G"] = -report.best.objectives.g_neg;
    best["F1"] = report.best.objectives.f1;
    best["F2"] = report.best.objectives.f2;
    best["h1"] = report.best.violations.h1;
    best["h2"] = report.best.violations.h2;
    best["h3"] = report.best.violations.h3;
    best["penalty"] = report.best.violations.penalty;
    best["penalized"] = report.best.penalized;
    best["g_low"] = report.best_g_low;
    best["g_high"] = report.best_g_high;
    best["g_combined"] = report.best_combined;
    j["best"] = best;

    j["archive_size"] = report.rows.size();
    j["generations_run"] = report.generations_run;
    j["stop_reason"] = report.stop_reason;
    j["wall_seconds"] = report.wall_seconds;

    atomic_write(path, j.dump(2) + "\n");
}

} // namespace poissonopt
