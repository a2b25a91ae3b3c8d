#include "poissonopt/moo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace poissonopt {

void validate_config(const EngineConfig& config) {
    if (config.population_size < 4)
        throw std::invalid_argument("config `population_size` must be >= 4");
    if (config.max_generations < 1)
        throw std::invalid_argument("config `max_generations` must be >= 1");
    if (!(config.p_cross > 0.0 && config.p_cross < 1.0))
        throw std::invalid_argument("config `p_cross` must lie in (0,1)");
    if (!(config.vartheta_de > 0.0))
        throw std::invalid_argument("config `vartheta_de` must be > 0");
    if (config.objective_dim != 2 && config.objective_dim != 3)
        throw std::invalid_argument("config `objective_dim` must be 2 or 3");
    if (config.stall_gens < 1)
        throw std::invalid_argument("config `stall_gens` must be >= 1");
    if (config.selection_count < 0 ||
        (config.selection_count != 0 && config.selection_count < 4))
        throw std::invalid_argument("config `selection_count` must be 0 or >= 4");
    if (config.seismic.m < 1) throw std::invalid_argument("config `seismic.m` must be >= 1");
    if (!(config.seismic.vartheta > 0.0))
        throw std::invalid_argument("config `seismic.vartheta` must be > 0");
    if (config.seismic.b1 == 0.0) throw std::invalid_argument("config `seismic.b1` must be nonzero");
    if (config.seismic.d_min < 1) throw std::invalid_argument("config `seismic.d_min` must be >= 1");
    if (config.seismic.d_max < config.seismic.d_min)
        throw std::invalid_argument("config `seismic.d_max` must be >= d_min");
    if (!(config.seismic.chi > 0.0)) throw std::invalid_argument("config `seismic.chi` must be > 0");
    if (!(config.seismic.lambda_loc > 0.0))
        throw std::invalid_argument("config `seismic.lambda_loc` must be > 0");
    if (config.seismic.n_ref < 2) throw std::invalid_argument("config `seismic.n_ref` must be >= 2");
}

bool dominates(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dominance needs equal dimensions");
    bool strict = false;
    for (size_t k = 0; k < a.size(); ++k) {
        if (a[k] > b[k]) return false;
        if (a[k] < b[k]) strict = true;
    }
    return strict;
}

namespace {

constexpr double kDensityEpsilon = 1e-12;

double objective_distance(const Solution& a, const Solution& b) {
    double acc = 0.0;
    for (size_t k = 0; k < a.objectives.size(); ++k) {
        const double d = a.objectives[k] - b.objectives[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// distance to the g-th nearest of the given neighbor distances (1-based g);
// zero distances collapse to the epsilon floor
double density_from_distances(std::vector<double>& dists, size_t g) {
    if (dists.empty()) return 1.0 / kDensityEpsilon;
    const size_t idx = std::min(g, dists.size()) - 1;
    std::nth_element(dists.begin(), dists.begin() + idx, dists.end());
    double d_g = dists[idx];
    if (d_g == 0.0) d_g = kDensityEpsilon;
    return 1.0 / d_g;
}

size_t neighbor_rank(size_t sample_size) {
    const auto g = static_cast<size_t>(std::llround(std::sqrt(static_cast<double>(sample_size))));
    return std::max<size_t>(1, g);
}

} // namespace

void fitness_assignment(std::vector<Solution>& pool) {
    if (pool.empty()) throw std::invalid_argument("fitness assignment needs a nonempty pool");
    const size_t n = pool.size();

    // strength: how many pool members each solution dominates
    std::vector<std::vector<bool>> dom(n, std::vector<bool>(n, false));
    for (size_t i = 0; i < n; ++i) {
        pool[i].strength = 0.0;
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (dominates(pool[i].objectives, pool[j].objectives)) {
                dom[i][j] = true;
                pool[i].strength += 1.0;
            }
        }
    }

    const size_t g = neighbor_rank(n);
    std::vector<double> dists;
    dists.reserve(n - 1);
    for (size_t i = 0; i < n; ++i) {
        double alpha = pool[i].violations.penalty;
        for (size_t j = 0; j < n; ++j)
            if (dom[j][i]) alpha += pool[j].strength;
        pool[i].raw_fitness = alpha;

        dists.clear();
        for (size_t j = 0; j < n; ++j)
            if (j != i) dists.push_back(objective_distance(pool[i], pool[j]));
        pool[i].density = density_from_distances(dists, g);
        pool[i].fitness = pool[i].raw_fitness + pool[i].density;
    }
}

double candidate_fitness(const std::vector<Solution>& pool, const Solution& candidate) {
    if (pool.empty()) throw std::invalid_argument("candidate fitness needs a nonempty pool");
    double alpha = candidate.violations.penalty;
    std::vector<double> dists;
    dists.reserve(pool.size());
    for (const Solution& s : pool) {
        if (dominates(s.objectives, candidate.objectives)) alpha += s.strength;
        dists.push_back(objective_distance(s, candidate));
    }
    const double density = density_from_distances(dists, neighbor_rank(pool.size() + 1));
    return alpha + density;
}

std::vector<double> selection_probabilities(const std::vector<Solution>& pool, SelectionMode mode) {
    if (pool.empty()) throw std::invalid_argument("selection needs a nonempty pool");
    std::vector<double> w(pool.size());
    double total = 0.0;
    for (size_t i = 0; i < pool.size(); ++i) {
        w[i] = mode == SelectionMode::inverted ? 1.0 / (1.0 + pool[i].fitness) : pool[i].fitness;
        if (!(w[i] >= 0.0)) w[i] = 0.0;
        total += w[i];
    }
    if (total <= 0.0) {
        // all-zero weights degenerate to uniform
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(pool.size()));
        return w;
    }
    for (double& x : w) x /= total;
    return w;
}

std::vector<size_t> selection(const std::vector<Solution>& pool, size_t count, SelectionMode mode,
                              RngStream& rng) {
    if (count > pool.size()) throw std::invalid_argument("selection count exceeds pool size");
    std::vector<double> w = selection_probabilities(pool, mode);
    std::vector<size_t> alive(pool.size());
    for (size_t i = 0; i < alive.size(); ++i) alive[i] = i;

    std::vector<size_t> picked;
    picked.reserve(count);
    double remaining = 1.0;
    while (picked.size() < count) {
        double roll = rng.uniform(0.0, remaining);
        size_t chosen = alive.size() - 1;
        double acc = 0.0;
        for (size_t k = 0; k < alive.size(); ++k) {
            acc += w[alive[k]];
            if (roll < acc) {
                chosen = k;
                break;
            }
        }
        picked.push_back(alive[chosen]);
        remaining -= w[alive[chosen]];
        if (remaining < 0.0) remaining = 0.0;
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(chosen));
    }
    return picked;
}

std::vector<Solution> de_variation(const std::vector<size_t>& targets,
                                   const std::vector<Solution>& pool, const EngineConfig& config,
                                   std::span<const double> lower, std::span<const double> upper,
                                   const Evaluator& evaluate, RngStream& rng) {
    if (pool.size() < 4) throw std::invalid_argument("differential evolution needs a pool of >= 4");
    std::vector<Solution> out;
    out.reserve(targets.size());
    const auto n = static_cast<long long>(pool.size());

    for (size_t t : targets) {
        const Solution& target = pool[t];
        const size_t dim = target.position.size();

        // three distinct donors, none equal to the target index
        long long ra, rb, rc;
        do { ra = rng.uniform_int(0, n - 1); } while (static_cast<size_t>(ra) == t);
        do { rb = rng.uniform_int(0, n - 1); } while (static_cast<size_t>(rb) == t || rb == ra);
        do {
            rc = rng.uniform_int(0, n - 1);
        } while (static_cast<size_t>(rc) == t || rc == ra || rc == rb);

        const auto& xa = pool[static_cast<size_t>(ra)].position;
        const auto& xb = pool[static_cast<size_t>(rb)].position;
        const auto& xc = pool[static_cast<size_t>(rc)].position;

        const auto forced = static_cast<size_t>(rng.uniform_int(0, static_cast<long long>(dim) - 1));
        std::vector<double> trial(dim);
        for (size_t k = 0; k < dim; ++k) {
            const double mutant = xa[k] + config.vartheta_de * (xb[k] - xc[k]);
            const bool take = k == forced || rng.uniform(0.0, 1.0) < config.p_cross;
            trial[k] = take ? mutant : target.position[k];
            trial[k] = normalize_coordinate(trial[k], lower[k], upper[k]);
        }

        Solution candidate = evaluate(trial);
        candidate.fitness = candidate_fitness(pool, candidate);
        out.push_back(candidate.fitness <= target.fitness ? candidate : target);
    }
    return out;
}

bool update_archive(ParetoArchive& archive, const std::vector<Solution>& candidates) {
    bool changed = false;
    for (const Solution& cand : candidates) {
        if (!cand.violations.feasible()) continue;
        bool rejected = false;
        for (const Solution& member : archive.members) {
            if (member.objectives == cand.objectives || dominates(member.objectives, cand.objectives)) {
                rejected = true;
                break;
            }
        }
        if (rejected) continue;
        auto dominated = [&](const Solution& member) {
            return dominates(cand.objectives, member.objectives);
        };
        const auto kept = std::remove_if(archive.members.begin(), archive.members.end(), dominated);
        archive.members.erase(kept, archive.members.end());
        archive.members.push_back(cand);
        changed = true;
    }
    return changed;
}

bool archive_invariant_holds(const ParetoArchive& archive) {
    const auto& m = archive.members;
    for (size_t i = 0; i < m.size(); ++i) {
        if (!m[i].violations.feasible()) return false;
        for (size_t j = 0; j < m.size(); ++j) {
            if (i == j) continue;
            if (m[i].objectives == m[j].objectives && i < j) return false;
            if (dominates(m[i].objectives, m[j].objectives)) return false;
        }
    }
    return true;
}

double hypervolume_2d(const std::vector<std::array<double, 2>>& front,
                      const std::array<double, 2>& ref) {
    for (size_t i = 0; i < front.size(); ++i) {
        if (front[i][0] > ref[0] || front[i][1] > ref[1])
            throw std::invalid_argument("reference point does not cover front point " +
                                        std::to_string(i) + " (" + std::to_string(front[i][0]) +
                                        ", " + std::to_string(front[i][1]) + ")");
    }
    if (front.empty()) return 0.0;

    std::vector<std::array<double, 2>> pts = front;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
    });

    // sweep left to right; each point adds the box to the right of itself and
    // above the best second coordinate seen so far
    double hv = 0.0;
    double best2 = ref[1];
    for (const auto& p : pts) {
        if (p[1] < best2) {
            hv += (ref[0] - p[0]) * (best2 - p[1]);
            best2 = p[1];
        }
    }
    return hv;
}

double hypervolume_contribution(const std::vector<std::array<double, 2>>& front, size_t index,
                                const std::array<double, 2>& ref) {
    if (index >= front.size()) throw std::out_of_range("contribution index out of range");
    std::vector<std::array<double, 2>> rest;
    rest.reserve(front.size() - 1);
    for (size_t i = 0; i < front.size(); ++i)
        if (i != index) rest.push_back(front[i]);
    return hypervolume_2d(front, ref) - hypervolume_2d(rest, ref);
}

} // namespace poissonopt
