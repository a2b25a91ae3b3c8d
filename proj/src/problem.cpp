#include "poissonopt/problem.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace poissonopt {

using nlohmann::json;

ThroughputMatrix ThroughputMatrix::from_position(const std::vector<double>& x, int nodes, int types) {
    if (static_cast<int>(x.size()) != nodes * types)
        throw std::invalid_argument("position length does not match nodes*types");
    ThroughputMatrix m;
    m.nodes = nodes;
    m.types = types;
    m.values = x;
    return m;
}

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::vector<double> read_flat(const json& j, const std::string& key, size_t rows, size_t cols) {
    // nested array of shape rows x cols, flattened row-major
    if (!j.contains(key)) throw std::invalid_argument("missing field `" + key + "`");
    const json& a = j.at(key);
    require(a.is_array() && a.size() == rows, "field `" + key + "` must have " + std::to_string(rows) + " rows");
    std::vector<double> out;
    out.reserve(rows * cols);
    for (size_t r = 0; r < rows; ++r) {
        const json& row = a.at(r);
        require(row.is_array() && row.size() == cols,
                "field `" + key + "[" + std::to_string(r) + "]` must have " + std::to_string(cols) + " entries");
        for (size_t c = 0; c < cols; ++c) {
            require(row.at(c).is_number(), "field `" + key + "[" + std::to_string(r) + "][" + std::to_string(c) + "]` must be a number");
            out.push_back(row.at(c).get<double>());
        }
    }
    return out;
}

std::vector<double> read_vec(const json& j, const std::string& key, size_t n) {
    if (!j.contains(key)) throw std::invalid_argument("missing field `" + key + "`");
    const json& a = j.at(key);
    require(a.is_array() && a.size() == n, "field `" + key + "` must have " + std::to_string(n) + " entries");
    std::vector<double> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        require(a.at(i).is_number(), "field `" + key + "[" + std::to_string(i) + "]` must be a number");
        out.push_back(a.at(i).get<double>());
    }
    return out;
}

std::vector<double> read_cube(const json& j, const std::string& key, size_t n, size_t t) {
    // n x t x t
    if (!j.contains(key)) throw std::invalid_argument("missing field `" + key + "`");
    const json& a = j.at(key);
    require(a.is_array() && a.size() == n, "field `" + key + "` must have " + std::to_string(n) + " blocks");
    std::vector<double> out;
    out.reserve(n * t * t);
    for (size_t i = 0; i < n; ++i) {
        const json& block = a.at(i);
        require(block.is_array() && block.size() == t, "field `" + key + "[" + std::to_string(i) + "]` must have " + std::to_string(t) + " rows");
        for (size_t r = 0; r < t; ++r) {
            const json& row = block.at(r);
            require(row.is_array() && row.size() == t,
                    "field `" + key + "[" + std::to_string(i) + "][" + std::to_string(r) + "]` must have " + std::to_string(t) + " entries");
            for (size_t c = 0; c < t; ++c) out.push_back(row.at(c).get<double>());
        }
    }
    return out;
}

json nest(const std::vector<double>& v, size_t rows, size_t cols) {
    json a = json::array();
    for (size_t r = 0; r < rows; ++r) {
        json row = json::array();
        for (size_t c = 0; c < cols; ++c) row.push_back(v[r * cols + c]);
        a.push_back(row);
    }
    return a;
}

json nest_cube(const std::vector<double>& v, size_t n, size_t t) {
    json a = json::array();
    for (size_t i = 0; i < n; ++i) {
        json block = json::array();
        for (size_t r = 0; r < t; ++r) {
            json row = json::array();
            for (size_t c = 0; c < t; ++c) row.push_back(v[(i * t + r) * t + c]);
            block.push_back(row);
        }
        a.push_back(block);
    }
    return a;
}

} // namespace

NetworkSpec load_network_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open network spec `" + path + "`");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::runtime_error("network spec `" + path + "` is not valid JSON: " + std::string(e.what()));
    }

    NetworkSpec s;
    require(j.contains("nodes") && j.at("nodes").is_number_integer(), "missing or non-integer field `nodes`");
    require(j.contains("types") && j.at("types").is_number_integer(), "missing or non-integer field `types`");
    s.nodes = j.at("nodes").get<int>();
    s.types = j.at("types").get<int>();
    require(s.nodes >= 1, "field `nodes` must be >= 1");
    require(s.types >= 1, "field `types` must be >= 1");
    const size_t n = static_cast<size_t>(s.nodes), t = static_cast<size_t>(s.types);

    require(j.contains("f_star") && j.at("f_star").is_number(), "missing field `f_star`");
    s.f_star = j.at("f_star").get<double>();

    s.fidelities = read_flat(j, "fidelities", n, t);
    s.fidelity_quad = read_cube(j, "fidelity_quad", n, t);
    s.fidelity_lin = read_flat(j, "fidelity_lin", n, t);
    s.fidelity_const = read_vec(j, "fidelity_const", n);
    s.relent_quad = read_cube(j, "relent_quad", n, t);
    s.relent_lin = read_flat(j, "relent_lin", n, t);
    s.relent_const = read_vec(j, "relent_const", n);
    s.init_throughput = read_flat(j, "init_throughput", n, t);
    s.unit_costs = read_vec(j, "unit_costs", t);
    s.eta = read_vec(j, "eta", t);
    s.kappa = read_vec(j, "kappa", t);
    require(j.contains("lambda_mem") && j.at("lambda_mem").is_number(), "missing field `lambda_mem`");
    s.lambda_mem = j.at("lambda_mem").get<double>();
    s.memory_capacity = read_vec(j, "memory_capacity", n);
    if (j.contains("alpha")) s.alpha_override = read_vec(j, "alpha", n);
    s.bounds_low = read_vec(j, "bounds_low", n * t);
    s.bounds_up = read_vec(j, "bounds_up", n * t);
    require(j.contains("fidelity_floor") && j.at("fidelity_floor").is_number(), "missing field `fidelity_floor`");
    require(j.contains("cost_cap") && j.at("cost_cap").is_number(), "missing field `cost_cap`");
    require(j.contains("spread_cap") && j.at("spread_cap").is_number(), "missing field `spread_cap`");
    s.fidelity_floor = j.at("fidelity_floor").get<double>();
    s.cost_cap = j.at("cost_cap").get<double>();
    s.spread_cap = j.at("spread_cap").get<double>();

    validate_spec(s);
    return s;
}

void save_network_spec(const NetworkSpec& s, const std::string& path) {
    validate_spec(s);
    const size_t n = static_cast<size_t>(s.nodes), t = static_cast<size_t>(s.types);
    json j;
    j["nodes"] = s.nodes;
    j["types"] = s.types;
    j["f_star"] = s.f_star;
    j["fidelities"] = nest(s.fidelities, n, t);
    j["fidelity_quad"] = nest_cube(s.fidelity_quad, n, t);
    j["fidelity_lin"] = nest(s.fidelity_lin, n, t);
    j["fidelity_const"] = s.fidelity_const;
    j["relent_quad"] = nest_cube(s.relent_quad, n, t);
    j["relent_lin"] = nest(s.relent_lin, n, t);
    j["relent_const"] = s.relent_const;
    j["init_throughput"] = nest(s.init_throughput, n, t);
    j["unit_costs"] = s.unit_costs;
    j["eta"] = s.eta;
    j["kappa"] = s.kappa;
    j["lambda_mem"] = s.lambda_mem;
    j["memory_capacity"] = s.memory_capacity;
    if (!s.alpha_override.empty()) j["alpha"] = s.alpha_override;
    j["bounds_low"] = s.bounds_low;
    j["bounds_up"] = s.bounds_up;
    j["fidelity_floor"] = s.fidelity_floor;
    j["cost_cap"] = s.cost_cap;
    j["spread_cap"] = s.spread_cap;

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write `" + tmp + "`");
        out << j.dump(2) << "\n";
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot move `" + tmp + "` into place");
}

void validate_spec(const NetworkSpec& s) {
    require(s.nodes >= 1, "field `nodes` must be >= 1");
    require(s.types >= 1, "field `types` must be >= 1");
    const size_t n = static_cast<size_t>(s.nodes), t = static_cast<size_t>(s.types);
    require(s.f_star > 0.0 && s.f_star <= 1.0, "field `f_star` must lie in (0,1]");
    require(s.fidelities.size() == n * t, "field `fidelities` has wrong shape");
    for (size_t i = 0; i < s.fidelities.size(); ++i) {
        if (s.fidelities[i] < 0.0 || s.fidelities[i] > 1.0)
            throw std::invalid_argument("field `fidelities[" + std::to_string(i / t) + "][" + std::to_string(i % t) +
                                        "]` out of [0,1]");
    }
    require(s.fidelity_quad.size() == n * t * t, "field `fidelity_quad` has wrong shape");
    require(s.fidelity_lin.size() == n * t, "field `fidelity_lin` has wrong shape");
    require(s.fidelity_const.size() == n, "field `fidelity_const` has wrong shape");
    require(s.relent_quad.size() == n * t * t, "field `relent_quad` has wrong shape");
    require(s.relent_lin.size() == n * t, "field `relent_lin` has wrong shape");
    require(s.relent_const.size() == n, "field `relent_const` has wrong shape");
    require(s.init_throughput.size() == n * t, "field `init_throughput` has wrong shape");
    for (double v : s.init_throughput) require(v >= 0.0, "field `init_throughput` entries must be >= 0");
    require(s.unit_costs.size() == t, "field `unit_costs` has wrong shape");
    for (double v : s.unit_costs) require(v >= 0.0, "field `unit_costs` entries must be >= 0");
    require(s.eta.size() == t, "field `eta` has wrong shape");
    require(s.kappa.size() == t, "field `kappa` has wrong shape");
    require(s.memory_capacity.size() == n, "field `memory_capacity` has wrong shape");
    for (double v : s.memory_capacity) require(v > 0.0, "field `memory_capacity` entries must be > 0");
    require(s.alpha_override.empty() || s.alpha_override.size() == n, "field `alpha` has wrong shape");
    require(s.bounds_low.size() == n * t, "field `bounds_low` has wrong shape");
    require(s.bounds_up.size() == n * t, "field `bounds_up` has wrong shape");
    for (size_t k = 0; k < n * t; ++k) {
        require(s.bounds_low[k] >= 0.0, "field `bounds_low[" + std::to_string(k) + "]` must be >= 0");
        require(s.bounds_up[k] > s.bounds_low[k],
                "field `bounds_up[" + std::to_string(k) + "]` must exceed bounds_low");
    }
}

namespace {

// shared quadratic-surrogate evaluation; b_tilde is throughput plus mean throughput
double surrogate(const NetworkSpec& s, const ThroughputMatrix& x, int node,
                 const std::vector<double>& quad, const std::vector<double>& lin,
                 const std::vector<double>& cst) {
    const int t = s.types;
    double acc = cst[node];
    std::vector<double> b_tilde(static_cast<size_t>(t));
    for (int j = 0; j < t; ++j)
        b_tilde[j] = x.at(node, j) + s.init_throughput[static_cast<size_t>(node) * t + j];
    for (int j = 0; j < t; ++j) {
        acc += lin[static_cast<size_t>(node) * t + j] * b_tilde[j];
        for (int k = 0; k < t; ++k)
            acc += quad[s.quad_index(node, j, k)] * b_tilde[j] * b_tilde[k];
    }
    return acc;
}

void check_node(const NetworkSpec& s, int node) {
    if (node < 0 || node >= s.nodes) throw std::out_of_range("node index out of range");
}

void check_x(const NetworkSpec& s, const ThroughputMatrix& x) {
    if (x.nodes != s.nodes || x.types != s.types)
        throw std::invalid_argument("throughput matrix shape does not match spec");
}

} // namespace

double node_fidelity_objective(const NetworkSpec& s, const ThroughputMatrix& x, int node) {
    check_x(s, x);
    check_node(s, node);
    return surrogate(s, x, node, s.fidelity_quad, s.fidelity_lin, s.fidelity_const);
}

double node_relent_objective(const NetworkSpec& s, const ThroughputMatrix& x, int node) {
    check_x(s, x);
    check_node(s, node);
    return surrogate(s, x, node, s.relent_quad, s.relent_lin, s.relent_const);
}

NodePartition classify_nodes(const NetworkSpec& s) {
    NodePartition p;
    p.label.resize(static_cast<size_t>(s.nodes));
    for (int i = 0; i < s.nodes; ++i) {
        double lo = 1.0;
        for (int j = 0; j < s.types; ++j)
            lo = std::min(lo, s.fidelities[static_cast<size_t>(i) * s.types + j]);
        // a node is high-class only when every fidelity type clears the
        // threshold; mixed nodes fall to low
        if (lo >= s.f_star) {
            p.high.push_back(i);
            p.label[i] = NodeClass::high;
        } else {
            p.low.push_back(i);
            p.label[i] = NodeClass::low;
        }
    }
    return p;
}

double memory_coefficient(const NetworkSpec& s, const ThroughputMatrix& x, int node, int type) {
    check_x(s, x);
    check_node(s, node);
    if (type < 0 || type >= s.types) throw std::out_of_range("type index out of range");
    return s.eta[type] * x.at(node, type) +
           s.kappa[type] * s.init_throughput[static_cast<size_t>(node) * s.types + type];
}

double effective_alpha(const NetworkSpec& s, const NodePartition& partition, int node) {
    if (!s.alpha_override.empty()) return s.alpha_override[node];
    return partition.label[node] == NodeClass::low ? 1.0 : 0.5;
}

double cost_f1(const NetworkSpec& s, const ThroughputMatrix& x) {
    check_x(s, x);
    double acc = 0.0;
    for (int i = 0; i < s.nodes; ++i)
        for (int j = 0; j < s.types; ++j)
            acc += s.unit_costs[j] * x.at(i, j);
    return acc;
}

double cost_f2(const NetworkSpec& s, const ThroughputMatrix& x, const NodePartition& partition) {
    check_x(s, x);
    double acc = 0.0;
    for (int i = 0; i < s.nodes; ++i) {
        const double a = effective_alpha(s, partition, i);
        double row = 0.0;
        for (int j = 0; j < s.types; ++j) row += x.at(i, j);
        acc += s.lambda_mem * a * row / s.memory_capacity[i];
    }
    return acc;
}

double main_objective(const NetworkSpec& s, const ThroughputMatrix& x) {
    check_x(s, x);
    double acc = 0.0;
    for (int i = 0; i < s.nodes; ++i)
        acc += node_fidelity_objective(s, x, i) * node_relent_objective(s, x, i);
    return acc;
}

std::pair<double, double> class_objectives(const NetworkSpec& s, const ThroughputMatrix& x,
                                           const NodePartition& partition) {
    check_x(s, x);
    double g_low = 0.0, g_high = 0.0;
    for (int i = 0; i < s.nodes; ++i) {
        const double term = node_fidelity_objective(s, x, i) * node_relent_objective(s, x, i);
        if (partition.label[i] == NodeClass::low)
            g_low += term;
        else
            g_high += term;
    }
    return {g_low, g_high};
}

double combined_class_objective(const NetworkSpec& s, const ThroughputMatrix& x,
                                const NodePartition& partition) {
    check_x(s, x);
    const double total_cost = cost_f1(s, x);
    double acc = 0.0;
    for (int i = 0; i < s.nodes; ++i) {
        double received = 0.0;
        for (int j = 0; j < s.types; ++j) received += x.at(i, j);
        const double term = received * node_fidelity_objective(s, x, i) * node_relent_objective(s, x, i);
        acc += partition.label[i] == NodeClass::high ? term : term * total_cost;
    }
    return acc;
}

ViolationRecord constraint_violations(const NetworkSpec& s, const ThroughputMatrix& x,
                                      const PenaltyWeights& weights) {
    check_x(s, x);
    ViolationRecord v;
    v.weights = weights;

    double zeta = 0.0;
    for (int i = 0; i < s.nodes; ++i) zeta += node_fidelity_objective(s, x, i);
    if (zeta < s.fidelity_floor) v.h1 = s.fidelity_floor - zeta;

    const double total_cost = cost_f1(s, x);
    if (total_cost > s.cost_cap) v.h2 = total_cost - s.cost_cap;

    double nu = 0.0;
    for (int j = 0; j < s.types; ++j) {
        double mean = 0.0;
        for (int i = 0; i < s.nodes; ++i) mean += memory_coefficient(s, x, i, j);
        mean /= s.nodes;
        double tau = 0.0;
        for (int i = 0; i < s.nodes; ++i) {
            const double d = memory_coefficient(s, x, i, j) - mean;
            tau += d * d;
        }
        nu += tau;
    }
    if (nu > s.spread_cap) v.h3 = nu - s.spread_cap;

    v.penalty = weights.w1 * v.h1 + weights.w2 * v.h2 + weights.w3 * v.h3;
    return v;
}

ObjectiveVector objective_vector(const NetworkSpec& s, const ThroughputMatrix& x) {
    check_x(s, x);
    ObjectiveVector o;
    o.g_neg = -main_objective(s, x);
    o.f1 = cost_f1(s, x);
    o.f2 = cost_f2(s, x, classify_nodes(s));
    return o;
}

Recommendation recommend_strategy(const NetworkSpec& s, const ThroughputMatrix& x,
                                  int node, double delta) {
    check_x(s, x);
    check_node(s, node);
    double scale = 1.0;
    for (int j = 0; j < s.types; ++j) scale = std::max(scale, std::abs(x.at(node, j)));
    if (!(delta > 0.0) || delta < std::numeric_limits<double>::epsilon() * scale)
        throw std::invalid_argument("step underflow: delta too small for the throughput scale");

    // central difference of the surrogates under a uniform increment across
    // types; exact for the quadratic model up to rounding
    auto shifted = [&](double step) {
        ThroughputMatrix xs = x;
        for (int j = 0; j < s.types; ++j) xs.at(node, j) += step;
        return xs;
    };
    const ThroughputMatrix up = shifted(delta), down = shifted(-delta);

    Recommendation r;
    r.fidelity_sensitivity =
        (node_fidelity_objective(s, up, node) - node_fidelity_objective(s, down, node)) / (2.0 * delta);
    r.relent_sensitivity =
        (node_relent_objective(s, up, node) - node_relent_objective(s, down, node)) / (2.0 * delta);
    const NodePartition partition = classify_nodes(s);
    r.node_class = partition.label[node];
    r.advice = r.node_class == NodeClass::high
                   ? "increase throughput to maximize fidelity"
                   : "prioritize relative entropy of entanglement";
    return r;
}

} // namespace poissonopt
