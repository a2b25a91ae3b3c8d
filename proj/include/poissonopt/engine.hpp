#pragma once

// Main optimizer loop over the entanglement-allocation model, plus run-report
// serialization. Per generation: dispersion of locations around epicenters
// (hypocentral displacement and Poisson jitter), power and magnitude
// bookkeeping, relevance-radius epicenter spawning, archive update, and a
// selection + differential-evolution exploration step.

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "poissonopt/moo.hpp"
#include "poissonopt/problem.hpp"

namespace poissonopt {

struct GenerationRecord {
    int generation = 0;
    double best_penalized = 0.0; // best-so-far penalized main objective, minimization
    double best_fitness = 0.0;   // lowest pool fitness this generation
    size_t archive_size = 0;
    double radius = 0.0; // relevance radius used this generation
    int locations = 0;   // location budget actually spent
};

struct BestRecord {
    std::vector<double> position;
    ObjectiveVector objectives;
    ViolationRecord violations;
    double penalized = 0.0; // objectives.g_neg + violations.penalty
};

// archive member flattened for reporting; G is the positive main objective
struct ArchiveRow {
    std::vector<double> position;
    double g = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;
    double h1 = 0.0, h2 = 0.0, h3 = 0.0;
    double penalty = 0.0;
};

struct RunReport {
    EngineConfig config;
    std::uint64_t seed = 0;
    int dim = 0; // decision-vector length, fixes the archive CSV column count

    ParetoArchive archive;
    std::vector<ArchiveRow> rows; // archive in insertion order

    std::vector<GenerationRecord> generations;
    std::vector<double> hypervolume;        // per generation, archive (F1,F2) front
    std::array<double, 2> hypervolume_ref{}; // common reference across the trajectory
    std::vector<std::pair<int, double>> magnitudes; // (generation, location magnitude)

    BestRecord best;
    double best_g_low = 0.0;    // class-split diagnostics at the best solution
    double best_g_high = 0.0;
    double best_combined = 0.0;

    int generations_run = 0;
    std::string stop_reason;
    double wall_seconds = 0.0;
};

RunReport run_optimizer(const NetworkSpec& spec, const EngineConfig& config);

// atomic writers: temp file in place, renamed on success
void write_archive_csv(const RunReport& report, const std::string& path);
void write_run_json(const RunReport& report, const std::string& path);
void write_magnitude_csv(const RunReport& report, const std::string& path);

} // namespace poissonopt
