#pragma once

#include "magflow/problem.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace magflow {

/// dom_j = #{k : y_k <= y_j componentwise and y_k != y_j}. Rows are objective points.
std::vector<int> dominance_counts(const Matrix& ys);

/// True iff a Pareto-dominates b (minimization).
bool dominates(const Vector& a, const Vector& b);

/// Keeps j unless some k satisfies y_k + delta < y_j in every coordinate. At delta = 0
/// this keeps the weak Pareto set.
std::vector<std::size_t> delta_dominance_filter(const Matrix& ys, double delta);

/// Mean over reference points of the distance to the nearest point of X.
double igd(const Matrix& xs, const Matrix& reference);

/// Objective f_i(x) = |x - v_i| for the vertices v_i of a regular k-gon on the unit circle.
ObjectiveProblem polygon_problem(std::size_t k);

/// DTLZ4 (alpha = 100) or DTLZ7 on [0, 1]^M with m objectives.
ObjectiveProblem dtlz_problem(int which, std::size_t solution_dim = 10, std::size_t objective_dim = 3);

/// WFG2 or WFG3 with position parameter count k (multiple of m - 1) and the remaining
/// M - k variables as distance parameters (must be even).
ObjectiveProblem wfg_problem(int which, std::size_t solution_dim = 10, std::size_t objective_dim = 3,
                             std::size_t position_params = 4);

/// f(x) = x on the box [lo, hi]^dim. Its Pareto front is the single corner lo * 1.
ObjectiveProblem identity_problem(std::size_t dim, double lo, double hi);

/// `tri`, `dodeca`, `dtlz4`, `dtlz7`, `wfg2`, `wfg3`.
ObjectiveProblem make_problem(const std::string& name);
const std::vector<std::string>& problem_names();

} // namespace magflow
