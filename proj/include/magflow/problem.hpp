#pragma once

#include "magflow/geometry.hpp"
#include "magflow/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace magflow {

struct Bounds {
    Vector lower;
    Vector upper;

    [[nodiscard]] bool contains(const Vector& x) const;
    [[nodiscard]] Vector clamp(const Vector& x) const;
};

/// Map f: R^M -> R^m with box bounds, an initial-solution sampler, and a sampler of
/// reference points on the Pareto front. Evaluation must be a pure function.
class ObjectiveProblem {
public:
    using Evaluator = std::function<Vector(const Vector&)>;
    using FrontSampler = std::function<Matrix(std::size_t, Rng&)>;
    using SolutionSampler = std::function<Vector(Rng&)>;

    ObjectiveProblem(std::string name, std::size_t solution_dim, std::size_t objective_dim,
                     Bounds bounds, Evaluator evaluate, FrontSampler front,
                     SolutionSampler initial = {});

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] std::size_t solution_dim() const noexcept { return solution_dim_; }
    [[nodiscard]] std::size_t objective_dim() const noexcept { return objective_dim_; }
    [[nodiscard]] const Bounds& bounds() const noexcept { return bounds_; }

    [[nodiscard]] Vector evaluate(const Vector& x) const;

    /// Reference points on the Pareto front; mutually nondominated.
    [[nodiscard]] Matrix pareto_front(std::size_t count, std::uint64_t seed = 1) const;

    /// Random solution for initialization (uniform in the box unless overridden).
    [[nodiscard]] Vector random_solution(Rng& rng) const;

private:
    std::string name_;
    std::size_t solution_dim_;
    std::size_t objective_dim_;
    Bounds bounds_;
    Evaluator evaluate_;
    FrontSampler front_;
    SolutionSampler initial_;
};

/// Paired solution/objective points with dominance counts (minimization).
struct Population {
    Matrix xs;               // n x M
    Matrix ys;               // n x m
    std::vector<int> dom;    // number of points dominating each point
    std::vector<bool> feasible;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(xs.rows()); }

    /// Evaluates every row of xs; infeasible rows are out of bounds or evaluate non-finite.
    static Population evaluate(const ObjectiveProblem& f, Matrix xs);

    void refresh_dominance();
    [[nodiscard]] std::vector<std::size_t> nondominated() const;
    [[nodiscard]] std::size_t nondominated_count() const;
};

} // namespace magflow
