#pragma once

#include "magflow/problem.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace magflow {

struct GAConfig {
    std::size_t population = 250;
    std::size_t max_evaluations = 10000;
    double crossover_eta = 20.0;
    double crossover_probability = 0.9;
    double mutation_eta = 20.0;
    double mutation_rate = 0.0; // 0 means 1 / M
    std::uint64_t seed = 1;

    void validate() const;
};

/// Front 0 is the nondominated set, front i + 1 the nondominated set of what remains.
std::vector<std::vector<std::size_t>> fast_nondominated_sort(const Matrix& ys);

/// Crowding distance of the rows of `front`: per-objective boundary points get +inf,
/// interior points the sum of normalized neighbour gaps.
Vector crowding_distance(const Matrix& front);

struct GAResult {
    Population population;
    std::size_t evaluations = 0;
    std::size_t generations = 0;
};

/// Elitist NSGA-II with SBX crossover and polynomial mutation. Never exceeds the
/// evaluation budget; failed evaluations rank last.
GAResult nsga2_run(const ObjectiveProblem& f, const GAConfig& cfg);

} // namespace magflow
