#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "poissonopt/generator.hpp"
#include "poissonopt/problem.hpp"

using namespace poissonopt;

namespace {

// valid spec with all-zero surrogate coefficients; tests overwrite what they need
NetworkSpec tiny_spec(int nodes, int types) {
    NetworkSpec s;
    s.nodes = nodes;
    s.types = types;
    s.f_star = 0.9;
    const size_t n = static_cast<size_t>(nodes), t = static_cast<size_t>(types);
    s.fidelities.assign(n * t, 0.95);
    s.fidelity_quad.assign(n * t * t, 0.0);
    s.fidelity_lin.assign(n * t, 0.0);
    s.fidelity_const.assign(n, 0.0);
    s.relent_quad.assign(n * t * t, 0.0);
    s.relent_lin.assign(n * t, 0.0);
    s.relent_const.assign(n, 0.0);
    s.init_throughput.assign(n * t, 0.0);
    s.unit_costs.assign(t, 0.0);
    s.eta.assign(t, 0.0);
    s.kappa.assign(t, 0.0);
    s.lambda_mem = 1.0;
    s.memory_capacity.assign(n, 1.0);
    s.bounds_low.assign(n * t, 0.0);
    s.bounds_up.assign(n * t, 5.0);
    s.fidelity_floor = -1.0;
    s.cost_cap = 1e9;
    s.spread_cap = 1e9;
    return s;
}

ThroughputMatrix matrix(int nodes, int types, std::vector<double> vals) {
    ThroughputMatrix x;
    x.nodes = nodes;
    x.types = types;
    x.values = std::move(vals);
    return x;
}

template <typename Fn>
std::string thrown_message(Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("fidelity objective: constant term only") {
    NetworkSpec s = tiny_spec(1, 1);
    s.fidelity_const[0] = 0.7;
    ThroughputMatrix x = matrix(1, 1, {0.0});
    CHECK(node_fidelity_objective(s, x, 0) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("fidelity objective: linear term with mean throughput offset") {
    NetworkSpec s = tiny_spec(1, 1);
    s.fidelity_lin[0] = 1.0;
    s.init_throughput[0] = 1.0;
    ThroughputMatrix x = matrix(1, 1, {2.0});
    CHECK(node_fidelity_objective(s, x, 0) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("fidelity objective: quadratic term") {
    NetworkSpec s = tiny_spec(1, 1);
    s.fidelity_quad[0] = 0.1;
    s.init_throughput[0] = 1.0;
    ThroughputMatrix x = matrix(1, 1, {2.0}); // b_tilde = 3
    CHECK(node_fidelity_objective(s, x, 0) == doctest::Approx(0.9).epsilon(1e-12));
}

TEST_CASE("fidelity objective: node index out of range") {
    NetworkSpec s = tiny_spec(2, 1);
    ThroughputMatrix x = matrix(2, 1, {0.0, 0.0});
    CHECK_THROWS_AS(node_fidelity_objective(s, x, 2), std::out_of_range);
    CHECK_THROWS_AS(node_fidelity_objective(s, x, -1), std::out_of_range);
}

TEST_CASE("relent objective: zero coefficients give zero") {
    NetworkSpec s = tiny_spec(1, 2);
    ThroughputMatrix x = matrix(1, 2, {1.0, 2.0});
    CHECK(node_relent_objective(s, x, 0) == 0.0);
}

TEST_CASE("relent objective: mirrors fidelity objective when coefficients match") {
    NetworkSpec s = tiny_spec(2, 2);
    for (size_t i = 0; i < s.fidelity_quad.size(); ++i) s.fidelity_quad[i] = 0.01 * static_cast<double>(i + 1);
    for (size_t i = 0; i < s.fidelity_lin.size(); ++i) s.fidelity_lin[i] = 0.1 * static_cast<double>(i + 1);
    s.fidelity_const = {0.3, 0.4};
    s.relent_quad = s.fidelity_quad;
    s.relent_lin = s.fidelity_lin;
    s.relent_const = s.fidelity_const;
    ThroughputMatrix x = matrix(2, 2, {0.5, 1.5, 2.5, 3.5});
    for (int i = 0; i < 2; ++i)
        CHECK(node_relent_objective(s, x, i) == doctest::Approx(node_fidelity_objective(s, x, i)).epsilon(1e-15));
}

TEST_CASE("relent objective: two-type linear evaluation") {
    NetworkSpec s = tiny_spec(1, 2);
    s.relent_lin = {1.0, 2.0};
    s.relent_const[0] = 0.5;
    ThroughputMatrix x = matrix(1, 2, {1.0, 1.0});
    CHECK(node_relent_objective(s, x, 0) == doctest::Approx(3.5).epsilon(1e-15));
}

TEST_CASE("node classification against the critical fidelity") {
    NetworkSpec s = tiny_spec(3, 2);
    s.fidelities = {0.95, 0.92,  // all above: high
                    0.70, 0.85,  // all below: low
                    0.85, 0.95}; // mixed: low
    NodePartition p = classify_nodes(s);
    CHECK(p.high == std::vector<int>{0});
    CHECK(p.low == std::vector<int>{1, 2});
    REQUIRE(p.label.size() == 3);
    CHECK(p.label[0] == NodeClass::high);
    CHECK(p.label[1] == NodeClass::low);
    CHECK(p.label[2] == NodeClass::low);
    CHECK(p.low.size() + p.high.size() == 3);
}

TEST_CASE("boundary fidelity counts as high class") {
    NetworkSpec s = tiny_spec(1, 1);
    s.fidelities[0] = 0.9; // min fidelity == f_star
    NodePartition p = classify_nodes(s);
    CHECK(p.high == std::vector<int>{0});
}

TEST_CASE("purification cost is the type-weighted throughput sum") {
    NetworkSpec s = tiny_spec(1, 1);
    s.unit_costs[0] = 2.0;
    CHECK(cost_f1(s, matrix(1, 1, {0.0})) == 0.0);
    CHECK(cost_f1(s, matrix(1, 1, {3.0})) == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("purification cost is homogeneous of degree one") {
    NetworkSpec s = tiny_spec(2, 2);
    s.unit_costs = {0.7, 1.3};
    ThroughputMatrix x = matrix(2, 2, {1.0, 2.0, 3.0, 4.0});
    ThroughputMatrix x2 = x;
    for (double& v : x2.values) v *= 2.0;
    CHECK(cost_f1(s, x2) == doctest::Approx(2.0 * cost_f1(s, x)).epsilon(1e-15));
}

TEST_CASE("memory cost with unit quality coefficient") {
    NetworkSpec s = tiny_spec(1, 1);
    s.fidelities[0] = 0.5; // low class, effective alpha 1.0
    s.memory_capacity[0] = 2.0;
    NodePartition p = classify_nodes(s);
    CHECK(cost_f2(s, matrix(1, 1, {4.0}), p) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(cost_f2(s, matrix(1, 1, {0.0}), p) == 0.0);
}

TEST_CASE("effective quality coefficient follows class unless overridden") {
    NetworkSpec s = tiny_spec(2, 1);
    s.fidelities = {0.95, 0.5};
    NodePartition p = classify_nodes(s);
    CHECK(effective_alpha(s, p, 0) == 0.5);
    CHECK(effective_alpha(s, p, 1) == 1.0);
    s.alpha_override = {0.25, 0.75};
    CHECK(effective_alpha(s, p, 0) == 0.25);
    CHECK(effective_alpha(s, p, 1) == 0.75);
}

TEST_CASE("memory coefficient blends throughput and its mean") {
    NetworkSpec s = tiny_spec(1, 1);
    s.eta[0] = 0.5;
    s.kappa[0] = 0.25;
    s.init_throughput[0] = 2.0;
    ThroughputMatrix x = matrix(1, 1, {4.0});
    CHECK(memory_coefficient(s, x, 0, 0) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("main objective sums per-node fidelity-times-relent products") {
    NetworkSpec s = tiny_spec(2, 1);
    s.fidelity_const = {2.0, 3.0};
    s.relent_const = {3.0, 0.5};
    ThroughputMatrix x = matrix(2, 1, {0.0, 0.0});
    CHECK(main_objective(s, x) == doctest::Approx(7.5).epsilon(1e-15));

    s.fidelity_const[0] = 0.0; // annihilation at node 0
    CHECK(main_objective(s, x) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("class split partitions the main objective exactly") {
    NetworkSpec s = generate_network_spec(5, 3, 11);
    NodePartition p = classify_nodes(s);
    std::vector<double> vals(static_cast<size_t>(s.dim()));
    for (size_t k = 0; k < vals.size(); ++k)
        vals[k] = s.bounds_low[k] + 0.37 * (s.bounds_up[k] - s.bounds_low[k]) * static_cast<double>((k % 3) + 1) / 3.0;
    ThroughputMatrix x = ThroughputMatrix::from_position(vals, s.nodes, s.types);
    auto [g_low, g_high] = class_objectives(s, x, p);
    CHECK(g_low + g_high == doctest::Approx(main_objective(s, x)).epsilon(1e-12));
}

TEST_CASE("class split with explicit per-node products") {
    NetworkSpec s = tiny_spec(2, 1);
    s.fidelities = {0.5, 0.95}; // node 0 low, node 1 high
    s.fidelity_const = {1.0, 2.5};
    s.relent_const = {2.0, 2.0};
    NodePartition p = classify_nodes(s);
    ThroughputMatrix x = matrix(2, 1, {0.0, 0.0});
    auto [g_low, g_high] = class_objectives(s, x, p);
    CHECK(g_low == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(g_high == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("all-high partition leaves the low share empty") {
    NetworkSpec s = tiny_spec(2, 1);
    s.fidelity_const = {1.0, 1.0};
    s.relent_const = {1.0, 1.0};
    NodePartition p = classify_nodes(s);
    CHECK(p.low.empty());
    auto [g_low, g_high] = class_objectives(s, matrix(2, 1, {0.0, 0.0}), p);
    CHECK(g_low == 0.0);
    CHECK(g_high == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("combined class diagnostic weights terms by received systems") {
    NetworkSpec s = tiny_spec(2, 1);
    s.fidelities = {0.95, 0.5}; // node 0 high, node 1 low
    s.fidelity_const = {2.0, 3.0};
    s.relent_const = {1.0, 2.0};
    s.unit_costs[0] = 1.0;
    NodePartition p = classify_nodes(s);
    ThroughputMatrix x = matrix(2, 1, {4.0, 1.0}); // total cost 5
    // high node: 4 * 2 * 1 = 8; low node: 1 * 3 * 2 * cost = 30
    CHECK(combined_class_objective(s, x, p) == doctest::Approx(38.0).epsilon(1e-15));
}

TEST_CASE("constraint violations: fidelity floor") {
    NetworkSpec s = tiny_spec(1, 1);
    s.fidelity_const[0] = 8.0; // zeta = 8
    ThroughputMatrix x = matrix(1, 1, {0.0});

    s.fidelity_floor = 8.0; // boundary: satisfied
    ViolationRecord v = constraint_violations(s, x, PenaltyWeights{});
    CHECK(v.h1 == 0.0);

    s.fidelity_floor = 10.0;
    v = constraint_violations(s, x, PenaltyWeights{});
    CHECK(v.h1 == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("constraint violations: cost cap and spread") {
    NetworkSpec s = tiny_spec(2, 1);
    s.unit_costs[0] = 1.0;
    s.eta[0] = 1.0;
    s.cost_cap = 5.0;
    s.spread_cap = 0.0;
    ThroughputMatrix x = matrix(2, 1, {3.0, 3.0}); // cost 6, equal memory coefficients
    ViolationRecord v = constraint_violations(s, x, PenaltyWeights{});
    CHECK(v.h2 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(v.h3 == 0.0); // equal coefficients have zero spread

    ThroughputMatrix y = matrix(2, 1, {1.0, 3.0}); // mean 2, deviations +-1
    v = constraint_violations(s, y, PenaltyWeights{});
    CHECK(v.h2 == 0.0);
    CHECK(v.h3 == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("penalty is the weighted violation sum") {
    NetworkSpec s = tiny_spec(2, 1);
    s.unit_costs[0] = 1.0;
    s.eta[0] = 1.0;
    s.fidelity_floor = 1.0;
    s.cost_cap = 3.0;
    s.spread_cap = 1.0;
    ThroughputMatrix x = matrix(2, 1, {1.0, 3.0}); // zeta 0, cost 4, spread 2
    PenaltyWeights w{2.0, 3.0, 5.0};
    ViolationRecord v = constraint_violations(s, x, w);
    CHECK(v.h1 == doctest::Approx(1.0));
    CHECK(v.h2 == doctest::Approx(1.0));
    CHECK(v.h3 == doctest::Approx(1.0));
    CHECK(v.penalty == doctest::Approx(2.0 + 3.0 + 5.0).epsilon(1e-15));
    CHECK_FALSE(v.feasible());

    s.fidelity_floor = -1.0;
    s.cost_cap = 10.0;
    s.spread_cap = 10.0;
    v = constraint_violations(s, x, w);
    CHECK(v.feasible());
    CHECK(v.penalty == 0.0);
}

TEST_CASE("objective vector negates the main objective") {
    NetworkSpec s = tiny_spec(1, 1);
    s.fidelity_const[0] = 2.0;
    s.relent_const[0] = 3.0;
    s.unit_costs[0] = 1.0;
    s.eta[0] = 0.5;
    s.memory_capacity[0] = 1.0;
    s.fidelities[0] = 0.5; // alpha 1.0
    ThroughputMatrix x = matrix(1, 1, {2.0});
    ObjectiveVector o = objective_vector(s, x);
    CHECK(o.g_neg == doctest::Approx(-6.0).epsilon(1e-15));
    CHECK(o.f1 == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(o.f2 == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(o.as_array()[0] == o.g_neg);
}

TEST_CASE("objective vector is all zero for a zero instance") {
    NetworkSpec s = tiny_spec(1, 1);
    ObjectiveVector o = objective_vector(s, matrix(1, 1, {0.0}));
    CHECK(o.g_neg == 0.0);
    CHECK(o.f1 == 0.0);
    CHECK(o.f2 == 0.0);
}

TEST_CASE("recommendation sensitivities vanish for a flat model") {
    NetworkSpec s = tiny_spec(1, 1);
    Recommendation r = recommend_strategy(s, matrix(1, 1, {1.0}), 0, 1e-3);
    CHECK(r.fidelity_sensitivity == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(r.relent_sensitivity == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("linear model sensitivity is the coefficient sum, independent of position") {
    NetworkSpec s = tiny_spec(1, 2);
    s.fidelity_lin = {0.4, 0.6};
    Recommendation a = recommend_strategy(s, matrix(1, 2, {0.0, 0.0}), 0, 1e-3);
    Recommendation b = recommend_strategy(s, matrix(1, 2, {2.0, 4.0}), 0, 1e-3);
    CHECK(a.fidelity_sensitivity == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(b.fidelity_sensitivity == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("quadratic model sensitivity matches the analytic gradient") {
    NetworkSpec s = tiny_spec(1, 3);
    s.fidelity_quad = {0.03, -0.01, 0.02, 0.05, 0.01, -0.02, 0.00, 0.04, 0.06};
    s.fidelity_lin = {0.4, 0.5, 0.6};
    s.relent_quad = {0.01, 0.02, 0.00, -0.01, 0.03, 0.01, 0.02, 0.00, 0.05};
    s.relent_lin = {0.2, 0.3, 0.1};
    s.init_throughput = {0.5, 1.0, 1.5};
    ThroughputMatrix x = matrix(1, 3, {1.0, 2.0, 3.0});

    auto analytic = [&](const std::vector<double>& quad, const std::vector<double>& lin) {
        std::vector<double> b(3);
        for (int j = 0; j < 3; ++j) b[j] = x.at(0, j) + s.init_throughput[j];
        double g = 0.0;
        for (int j = 0; j < 3; ++j) {
            g += lin[j];
            for (int k = 0; k < 3; ++k) g += quad[static_cast<size_t>(j) * 3 + k] * (b[j] + b[k]);
        }
        return g;
    };

    Recommendation r = recommend_strategy(s, x, 0, 1e-4);
    CHECK(r.fidelity_sensitivity ==
          doctest::Approx(analytic(s.fidelity_quad, s.fidelity_lin)).epsilon(1e-6));
    CHECK(r.relent_sensitivity ==
          doctest::Approx(analytic(s.relent_quad, s.relent_lin)).epsilon(1e-6));
}

TEST_CASE("recommendation advice follows the node class") {
    NetworkSpec s = tiny_spec(2, 1);
    s.fidelities = {0.95, 0.5};
    Recommendation high = recommend_strategy(s, matrix(2, 1, {1.0, 1.0}), 0, 1e-3);
    Recommendation low = recommend_strategy(s, matrix(2, 1, {1.0, 1.0}), 1, 1e-3);
    CHECK(high.node_class == NodeClass::high);
    CHECK(high.advice == "increase throughput to maximize fidelity");
    CHECK(low.node_class == NodeClass::low);
    CHECK(low.advice == "prioritize relative entropy of entanglement");
}

TEST_CASE("recommendation rejects an underflowing step") {
    NetworkSpec s = tiny_spec(1, 1);
    ThroughputMatrix x = matrix(1, 1, {1.0});
    CHECK_THROWS_AS(recommend_strategy(s, x, 0, 1e-300), std::invalid_argument);
    CHECK_THROWS_AS(recommend_strategy(s, x, 0, 0.0), std::invalid_argument);
}

TEST_CASE("validation names the offending field") {
    NetworkSpec s = tiny_spec(2, 2);
    CHECK_NOTHROW(validate_spec(s));

    NetworkSpec bad = s;
    bad.fidelities[0] = 1.2;
    std::string msg = thrown_message([&] { validate_spec(bad); });
    CHECK(msg.find("fidelities[0][0]") != std::string::npos);

    bad = s;
    bad.fidelities[3] = -0.1;
    msg = thrown_message([&] { validate_spec(bad); });
    CHECK(msg.find("fidelities[1][1]") != std::string::npos);

    bad = s;
    bad.memory_capacity[1] = 0.0;
    msg = thrown_message([&] { validate_spec(bad); });
    CHECK(msg.find("memory_capacity") != std::string::npos);

    bad = s;
    bad.bounds_up[2] = bad.bounds_low[2];
    msg = thrown_message([&] { validate_spec(bad); });
    CHECK(msg.find("bounds_up[2]") != std::string::npos);

    bad = s;
    bad.fidelity_quad.pop_back();
    msg = thrown_message([&] { validate_spec(bad); });
    CHECK(msg.find("fidelity_quad") != std::string::npos);
}

TEST_CASE("spec file save and load roundtrip bit-identically") {
    NetworkSpec s = generate_network_spec(4, 2, 7);
    const std::string p1 = "roundtrip_a.json";
    const std::string p2 = "roundtrip_b.json";
    save_network_spec(s, p1);
    NetworkSpec loaded = load_network_spec(p1);
    save_network_spec(loaded, p2);
    CHECK(slurp(p1) == slurp(p2));
    CHECK(loaded.nodes == s.nodes);
    CHECK(loaded.types == s.types);
    CHECK(loaded.fidelities == s.fidelities);
    CHECK(loaded.bounds_up == s.bounds_up);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("loading a missing or malformed spec file fails loudly") {
    CHECK_THROWS_AS(load_network_spec("no_such_spec.json"), std::runtime_error);

    const std::string p = "malformed_spec.json";
    {
        std::ofstream out(p);
        out << "{ not json";
    }
    std::string msg = thrown_message([&] { return load_network_spec(p); });
    CHECK(msg.find("not valid JSON") != std::string::npos);
    std::remove(p.c_str());
}

TEST_CASE("loading a spec with a missing field names it") {
    const std::string p = "missing_field_spec.json";
    {
        std::ofstream out(p);
        out << "{\"nodes\": 1, \"types\": 1}";
    }
    std::string msg = thrown_message([&] { return load_network_spec(p); });
    CHECK(msg.find("missing field") != std::string::npos);
    std::remove(p.c_str());
}

TEST_CASE("position vector reshapes into a throughput matrix") {
    std::vector<double> pos = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
    ThroughputMatrix x = ThroughputMatrix::from_position(pos, 2, 3);
    CHECK(x.at(0, 0) == 1.0);
    CHECK(x.at(0, 2) == 3.0);
    CHECK(x.at(1, 0) == 4.0);
    CHECK(x.at(1, 2) == 6.0);
    CHECK_THROWS_AS(ThroughputMatrix::from_position(pos, 2, 2), std::invalid_argument);
}
