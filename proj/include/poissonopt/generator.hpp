#pragma once

// Synthetic network-instance generation: random but well-conditioned
// coefficients with both node classes populated and a feasible midpoint, so
// generated instances always admit feasible solutions.

#include <cstdint>

#include "poissonopt/problem.hpp"

namespace poissonopt {

// Deterministic under seed. Even-indexed nodes clear the fidelity threshold
// in every type; odd-indexed nodes fall below it in type 0, so both classes
// are nonempty whenever nodes >= 2. Constraint caps are calibrated at the
// bounds midpoint, which is therefore always feasible.
NetworkSpec generate_network_spec(int nodes, int types, std::uint64_t seed);

} // namespace poissonopt
