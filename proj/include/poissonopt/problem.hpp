#pragma once

// Entanglement-allocation problem model: a static network description plus a
// throughput matrix (the decision variable), with objective, cost, node
// classification and constraint functions over them. Everything here is a
// pure function of (spec, X).

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace poissonopt {

// Decision variable: entangled systems per second received at node i with
// fidelity type j. Row-major, node index outer.
struct ThroughputMatrix {
    int nodes = 0;
    int types = 0;
    std::vector<double> values; // nodes*types entries

    double at(int node, int type) const { return values[static_cast<size_t>(node) * types + type]; }
    double& at(int node, int type) { return values[static_cast<size_t>(node) * types + type]; }

    static ThroughputMatrix from_position(const std::vector<double>& x, int nodes, int types);
};

struct NetworkSpec {
    int nodes = 0;
    int types = 0;
    double f_star = 0.9; // critical fidelity separating the node classes

    std::vector<double> fidelities; // nodes*types, each in [0,1]

    // regression surrogate for the per-node fidelity objective:
    // quadratic (nodes*types*types), linear (nodes*types), constant (nodes)
    std::vector<double> fidelity_quad;
    std::vector<double> fidelity_lin;
    std::vector<double> fidelity_const;

    // same shapes for the relative-entropy surrogate
    std::vector<double> relent_quad;
    std::vector<double> relent_lin;
    std::vector<double> relent_const;

    std::vector<double> init_throughput; // nodes*types, mean throughput, >= 0
    std::vector<double> unit_costs;      // per type, purification+correction cost, >= 0
    std::vector<double> eta;             // per type memory coefficient on throughput
    std::vector<double> kappa;           // per type memory coefficient on mean throughput
    double lambda_mem = 1.0;
    std::vector<double> memory_capacity; // per node, > 0

    // per-node quality coefficient; empty means "derive from classification"
    std::vector<double> alpha_override;

    std::vector<double> bounds_low; // nodes*types
    std::vector<double> bounds_up;  // nodes*types, strictly above bounds_low

    double fidelity_floor = 0.0; // constraint: total fidelity objective >= this
    double cost_cap = 0.0;       // constraint: total purification cost <= this
    double spread_cap = 0.0;     // constraint: memory-coefficient spread <= this

    int dim() const { return nodes * types; }

    size_t quad_index(int node, int j, int k) const {
        return (static_cast<size_t>(node) * types + j) * types + k;
    }
};

enum class NodeClass { low, high };

struct NodePartition {
    std::vector<int> low;
    std::vector<int> high;
    std::vector<NodeClass> label; // per node
};

struct PenaltyWeights {
    double w1 = 1.0, w2 = 1.0, w3 = 1.0;
};

struct ViolationRecord {
    double h1 = 0.0, h2 = 0.0, h3 = 0.0;
    PenaltyWeights weights;
    double penalty = 0.0;

    // feasibility is about the violations themselves, not the weighted penalty
    bool feasible() const { return h1 == 0.0 && h2 == 0.0 && h3 == 0.0; }
};

// minimization form: (-G, F1, F2)
struct ObjectiveVector {
    double g_neg = 0.0;
    double f1 = 0.0;
    double f2 = 0.0;

    std::array<double, 3> as_array() const { return {g_neg, f1, f2}; }
};

struct Recommendation {
    double fidelity_sensitivity = 0.0; // d(fidelity objective)/db, uniform increment across types
    double relent_sensitivity = 0.0;   // d(relent objective)/db
    NodeClass node_class = NodeClass::low;
    std::string advice;
};

NetworkSpec load_network_spec(const std::string& path);
void save_network_spec(const NetworkSpec& spec, const std::string& path);

// throws std::invalid_argument naming the offending field
void validate_spec(const NetworkSpec& spec);

double node_fidelity_objective(const NetworkSpec& spec, const ThroughputMatrix& x, int node);
double node_relent_objective(const NetworkSpec& spec, const ThroughputMatrix& x, int node);

NodePartition classify_nodes(const NetworkSpec& spec);

// memory coefficient w_j(x_i) = eta_j * B + kappa_j * <B>
double memory_coefficient(const NetworkSpec& spec, const ThroughputMatrix& x, int node, int type);

// effective per-node quality coefficient: override if present, else 1.0 for
// low-class and 0.5 for high-class nodes
double effective_alpha(const NetworkSpec& spec, const NodePartition& partition, int node);

double cost_f1(const NetworkSpec& spec, const ThroughputMatrix& x);
double cost_f2(const NetworkSpec& spec, const ThroughputMatrix& x, const NodePartition& partition);

// sum over nodes of fidelity_objective * relent_objective (the relent value
// plays the expected-demand role)
double main_objective(const NetworkSpec& spec, const ThroughputMatrix& x);

// main objective split by node class
std::pair<double, double> class_objectives(const NetworkSpec& spec, const ThroughputMatrix& x,
                                           const NodePartition& partition);

// diagnostic combined form: high-class terms weighted by received-system
// counts, low-class terms additionally scaled by the total cost
double combined_class_objective(const NetworkSpec& spec, const ThroughputMatrix& x,
                                const NodePartition& partition);

ViolationRecord constraint_violations(const NetworkSpec& spec, const ThroughputMatrix& x,
                                      const PenaltyWeights& weights);

ObjectiveVector objective_vector(const NetworkSpec& spec, const ThroughputMatrix& x);

// finite-difference sensitivities for a uniform throughput increment across
// types at one node, plus the class-based advice string
Recommendation recommend_strategy(const NetworkSpec& spec, const ThroughputMatrix& x,
                                  int node, double delta);

} // namespace poissonopt
