#pragma once

#include "magflow/geometry.hpp"
#include "magflow/magnitude.hpp"
#include "magflow/problem.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace magflow {

/// Per-point gradient estimate of a weighting (or any per-point field) over a point set.
struct GradientField {
    Matrix vectors; // n x m
    double t = 0.0;
};

/// Weighted neighbour-difference estimate of the gradient of `w` at every point:
///   sum_{k != j} [Z_jk / sum_{k' != j} Z_jk'] [(w_k - w_j) / d_jk] e_jk,
/// e_jk the unit vector from x_j to x_k. Throws SingularPair on coincident points.
GradientField weighting_gradient(const PointSet& ps, const ScaledSimilarity& z, const Vector& w);

/// S_j = 1 - 2 dom_j / max_k dom_k, and S = 1 everywhere when nothing is dominated.
Vector speed_factors(std::span<const int> dominance_counts);

/// sqrt(mean nearest-neighbour distance / n).
double step_size(const PointSet& ys);

/// Forward differences with h_i = max(1e-6, 1e-6 |x_i|); probes that would leave the box
/// step backwards instead. M + 1 evaluations.
Matrix jacobian(const ObjectiveProblem& f, const Vector& x);
/// Same, reusing a known f(x): M evaluations.
Matrix jacobian(const ObjectiveProblem& f, const Vector& x, const Vector& fx);

/// J^+ dy, singular values below rcond * sigma_max treated as zero.
Vector pullback(const Matrix& j, const Vector& dy, double rcond = 1e-10);

/// Every (x, f(x)) pair evaluated so far; the neighbour pool for recycled Jacobians.
class EvaluationArchive {
public:
    void add(const Vector& x, const Vector& y);
    [[nodiscard]] std::size_t size() const noexcept { return xs_.size(); }
    [[nodiscard]] const Vector& x(std::size_t i) const { return xs_[i]; }
    [[nodiscard]] const Vector& y(std::size_t i) const { return ys_[i]; }
    /// Indices of the `count` entries nearest to x, excluding entries located exactly at x.
    [[nodiscard]] std::vector<std::size_t> nearest(const Vector& x, std::size_t count) const;

private:
    std::vector<Vector> xs_;
    std::vector<Vector> ys_;
};

struct RecycledJacobian {
    Matrix jacobian;
    std::size_t fresh_evals = 0;
    bool recycled = false; // false when the fresh finite-difference fallback was used
};

/// Least-squares Jacobian from the M nearest archived neighbours of x. Falls back to a
/// fresh finite-difference Jacobian (M evaluations) when the estimate is rank deficient.
RecycledJacobian recycled_jacobian(const ObjectiveProblem& f, const EvaluationArchive& history,
                                   const Vector& x, const Vector& fx);

enum class ScalePolicy { PositiveCutoff, Fixed };
enum class JacobianMode { Fresh, Recycled };
enum class FlowDriver { Weighting, MultiObjective, Spread };

struct FlowConfig {
    std::size_t steps = 10;
    ScalePolicy scale_policy = ScalePolicy::PositiveCutoff;
    double fixed_scale = 1.0;
    bool speed_factor_enabled = true;
    double lambda_w = 1.0;
    double lambda_f = 0.0;
    JacobianMode jacobian_mode = JacobianMode::Fresh;
    FlowDriver driver = FlowDriver::Weighting;

    void validate() const;
};

/// Mutable state threaded through consecutive flow steps.
struct FlowContext {
    EvaluationArchive archive;
    std::size_t evaluations = 0;          // all objective evaluations made by the flow
    std::size_t jacobian_evaluations = 0; // the part spent on finite-difference probes

    /// Archives the population's existing evaluations without counting them.
    static FlowContext seeded(const Population& pop);
};

struct StepReport {
    double t = 0.0;
    double ds = 0.0;
    std::size_t evaluations = 0;
    std::size_t replaced = 0;   // points restored to their predecessor
    std::size_t recycled = 0;   // Jacobians taken from the archive
    std::size_t fallbacks = 0;  // recycled attempts that needed fresh probes
};

/// Flow scale for the population's objective points under `cfg`: t_plus, or t_d when t_plus = 0.
double flow_scale(const Population& pop, const FlowConfig& cfg);

/// dy_j = ds S_j (grad w)_j at the configured scale, pulled back through J^+, followed by
/// re-evaluation, predecessor replacement of bad points and fresh dominance counts.
Population flow_step(const ObjectiveProblem& f, const Population& pop, const FlowConfig& cfg,
                     FlowContext& ctx, StepReport* report = nullptr);

/// dy_j = ds [lambda_w S_j (grad w)_j + lambda_f sum_l (-e_l)] over objectives l whose
/// descent direction has positive inner product with (grad w)_j.
Population mowgf_step(const ObjectiveProblem& f, const Population& pop, const FlowConfig& cfg,
                      FlowContext& ctx, StepReport* report = nullptr);

/// As flow_step with the spread vector a_j = 1 / sum_k exp(-t d_jk) in place of w.
Population spread_vector_flow_step(const ObjectiveProblem& f, const Population& pop,
                                   const FlowConfig& cfg, FlowContext& ctx,
                                   StepReport* report = nullptr);

/// Step with cfg.driver at an explicitly supplied scale.
Population flow_step_at(const ObjectiveProblem& f, const Population& pop, const FlowConfig& cfg,
                        FlowContext& ctx, double t, StepReport* report = nullptr);

struct TraceRow {
    std::size_t step = 0;
    double t_plus = 0.0;        // positive cutoff of the feasible objective points
    double ds = 0.0;
    double mag_feasible = 0.0;  // magnitude at t_plus
    double t_plus_nondom = 0.0; // positive cutoff of the nondominated subset
    double mag_nondom = 0.0;    // its magnitude at t_plus_nondom
    std::size_t n_nondom = 0;
    double igd = 0.0;           // NaN without a reference set
    std::size_t evals = 0;      // cumulative flow evaluations
    std::size_t jacobian_evals = 0;
};

struct FlowTrace {
    std::vector<Population> snapshots; // N + 1 entries
    std::vector<TraceRow> rows;        // one per snapshot
    std::vector<StepReport> steps;     // N entries
};

/// Runs cfg.steps flow steps, recording a snapshot and a trace row before the first
/// step and after each step.
FlowTrace run_flow(const ObjectiveProblem& f, Population initial, const FlowConfig& cfg,
                   const Matrix* reference = nullptr);

/// Diversity quotient of a step: Mag(t_s; Y_s) / Mag(t_s; Y_0), t_s the step's positive
/// cutoff, for the feasible set and for the nondominated subsets.
struct QuotientRow {
    std::size_t step = 0;
    double q_feasible = 1.0;
    double q_nondom = 1.0;
    double nondom_fraction = 1.0;
};
std::vector<QuotientRow> diversity_quotients(const FlowTrace& trace);

/// Magnitude at the positive cutoff: (t_plus, magnitude). One point gives (0, 1).
std::pair<double, double> magnitude_at_positive_cutoff(const Matrix& ys);

} // namespace magflow
