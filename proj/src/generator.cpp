#include "poissonopt/generator.hpp"

#include <stdexcept>

#include "poissonopt/rng.hpp"

namespace poissonopt {

NetworkSpec generate_network_spec(int nodes, int types, std::uint64_t seed) {
    if (nodes < 1 || types < 1) throw std::invalid_argument("generator needs nodes, types >= 1");
    RngStream rng(seed);

    NetworkSpec s;
    s.nodes = nodes;
    s.types = types;
    s.f_star = 0.9;
    const size_t n = static_cast<size_t>(nodes), t = static_cast<size_t>(types);

    s.fidelities.resize(n * t);
    for (int i = 0; i < nodes; ++i) {
        for (int j = 0; j < types; ++j) {
            double f;
            if (i % 2 == 0)
                f = rng.uniform(0.90, 0.99);
            else if (j == 0)
                f = rng.uniform(0.60, 0.85); // drags the node below the threshold
            else
                f = rng.uniform(0.70, 0.95);
            s.fidelities[static_cast<size_t>(i) * t + j] = f;
        }
    }

    s.init_throughput.resize(n * t);
    for (auto& v : s.init_throughput) v = rng.uniform(0.5, 1.5);

    // concave quadratic surrogates with the peak inside the box (near the
    // bounds midpoint), so the generated instances have an interior optimum
    // that the midpoint-calibrated caps keep feasible
    auto fill_surrogate = [&](std::vector<double>& quad, std::vector<double>& lin,
                              std::vector<double>& cst, double lin_lo, double lin_hi,
                              double cst_lo, double cst_hi) {
        quad.assign(n * t * t, 0.0);
        lin.resize(n * t);
        cst.resize(n);
        for (int i = 0; i < nodes; ++i) {
            for (int j = 0; j < types; ++j) {
                for (int k = j; k < types; ++k) {
                    double v;
                    if (j == k)
                        v = -rng.uniform(0.05, 0.07);
                    else
                        v = rng.uniform(-0.01, 0.01) / types;
                    quad[s.quad_index(i, j, k)] = v;
                    quad[s.quad_index(i, k, j)] = v;
                }
                lin[static_cast<size_t>(i) * t + j] = rng.uniform(lin_lo, lin_hi);
            }
            cst[i] = rng.uniform(cst_lo, cst_hi);
        }
    };
    fill_surrogate(s.fidelity_quad, s.fidelity_lin, s.fidelity_const, 0.40, 0.50, 0.5, 1.0);
    fill_surrogate(s.relent_quad, s.relent_lin, s.relent_const, 0.30, 0.40, 0.3, 0.8);

    s.unit_costs.resize(t);
    for (auto& v : s.unit_costs) v = rng.uniform(0.5, 1.5);
    s.eta.resize(t);
    for (auto& v : s.eta) v = rng.uniform(0.5, 1.0);
    s.kappa.resize(t);
    for (auto& v : s.kappa) v = rng.uniform(0.1, 0.5);
    s.lambda_mem = 1.0;
    s.memory_capacity.resize(n);
    for (auto& v : s.memory_capacity) v = rng.uniform(2.0, 6.0);

    s.bounds_low.assign(n * t, 0.0);
    s.bounds_up.assign(n * t, 5.0);

    // calibrate the caps at the box midpoint so the midpoint is feasible
    ThroughputMatrix mid;
    mid.nodes = nodes;
    mid.types = types;
    mid.values.resize(n * t);
    for (size_t k = 0; k < n * t; ++k) mid.values[k] = 0.5 * (s.bounds_low[k] + s.bounds_up[k]);

    double zeta = 0.0;
    for (int i = 0; i < nodes; ++i) zeta += node_fidelity_objective(s, mid, i);
    s.fidelity_floor = 0.8 * zeta;
    s.cost_cap = 1.25 * cost_f1(s, mid);

    double nu = 0.0;
    for (int j = 0; j < types; ++j) {
        double mean = 0.0;
        for (int i = 0; i < nodes; ++i) mean += memory_coefficient(s, mid, i, j);
        mean /= nodes;
        for (int i = 0; i < nodes; ++i) {
            const double d = memory_coefficient(s, mid, i, j) - mean;
            nu += d * d;
        }
    }
    s.spread_cap = 2.0 * nu + 0.1 * nodes * types;

    validate_spec(s);
    return s;
}

} // namespace poissonopt
