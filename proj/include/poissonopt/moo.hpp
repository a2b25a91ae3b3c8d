#pragma once

// Multiobjective core: Pareto dominance, strength/density fitness, the
// non-dominated archive, fitness-proportional selection and differential
// evolution variation, plus the 2-D hypervolume metric. Everything minimizes.

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "poissonopt/problem.hpp"
#include "poissonopt/rng.hpp"
#include "poissonopt/seismic.hpp"

namespace poissonopt {

struct Solution {
    std::vector<double> position;
    std::vector<double> objectives; // minimization, d >= 2
    ViolationRecord violations;

    double strength = 0.0;    // count of pool members this one dominates
    double raw_fitness = 0.0; // dominator strengths plus constraint penalty
    double density = 0.0;     // inverse distance to the g-th nearest neighbor
    double fitness = 0.0;     // raw_fitness + density, smaller is better
};

// Insertion-ordered set of mutually non-dominated, feasible solutions.
struct ParetoArchive {
    std::vector<Solution> members;

    size_t size() const { return members.size(); }
    bool empty() const { return members.empty(); }
};

enum class SelectionMode {
    inverted, // probability proportional to 1/(1 + fitness), favors low fitness
    literal   // probability proportional to fitness itself
};

struct EngineConfig {
    int population_size = 50;
    int max_generations = 300;
    int selection_count = 0; // 0 means population_size
    double p_cross = 0.9;    // crossover probability, open interval (0,1)
    double vartheta_de = 0.5;
    std::uint64_t seed = 1;
    int objective_dim = 3; // 3: (-G, F1, F2); 2: (F1, F2)
    int stall_gens = 50;   // stop after this many generations without archive change
    SelectionMode selection = SelectionMode::inverted;
    bool check_archive = false; // audit the archive invariant every generation
    SeismicParams seismic;
};

// throws std::invalid_argument naming the offending field
void validate_config(const EngineConfig& config);

// weak dominance in every coordinate and strict in at least one; equal
// vectors dominate neither way
bool dominates(std::span<const double> a, std::span<const double> b);

// Strength/raw-fitness/density assignment over the whole pool. Raw fitness
// folds in the constraint penalty, so feasible non-dominated members are
// exactly those with raw_fitness == 0.
void fitness_assignment(std::vector<Solution>& pool);

// Fitness the candidate would receive against a frozen pool whose strengths
// are current: dominator strengths plus the candidate's own penalty, plus
// density measured against the pool.
double candidate_fitness(const std::vector<Solution>& pool, const Solution& candidate);

// normalized selection weights over the pool
std::vector<double> selection_probabilities(const std::vector<Solution>& pool, SelectionMode mode);

// samples count indices without replacement, weighted by the selection mode
std::vector<size_t> selection(const std::vector<Solution>& pool, size_t count, SelectionMode mode,
                              RngStream& rng);

using Evaluator = std::function<Solution(const std::vector<double>&)>;

// One DE pass: for each target index, a rand/1 mutant from three distinct
// donors, binomial crossover with one forced coordinate, a bounds-normalized
// trial evaluated and scored against the frozen pool, kept when its fitness
// does not exceed the target's. Returns one solution per target.
std::vector<Solution> de_variation(const std::vector<size_t>& targets,
                                   const std::vector<Solution>& pool, const EngineConfig& config,
                                   std::span<const double> lower, std::span<const double> upper,
                                   const Evaluator& evaluate, RngStream& rng);

// Inserts each feasible candidate not dominated by a member, evicting members
// the candidate dominates. A candidate whose objective vector already appears
// keeps the earlier member. Returns true when the archive changed.
bool update_archive(ParetoArchive& archive, const std::vector<Solution>& candidates);

// true when no member dominates another and no duplicates slipped in
bool archive_invariant_holds(const ParetoArchive& archive);

// Lebesgue measure of the union of boxes [point, ref]; every point must be
// coordinate-wise <= ref or the offender is named in the error.
double hypervolume_2d(const std::vector<std::array<double, 2>>& front,
                      const std::array<double, 2>& ref);

// exclusive contribution: hypervolume lost when the indexed point is removed
double hypervolume_contribution(const std::vector<std::array<double, 2>>& front, size_t index,
                                const std::array<double, 2>& ref);

} // namespace poissonopt
