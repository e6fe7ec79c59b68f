#include "magflow/flow.hpp"

#include "magflow/errors.hpp"
#include "magflow/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace magflow {

GradientField weighting_gradient(const PointSet& ps, const ScaledSimilarity& z, const Vector& w) {
    const auto n = static_cast<Eigen::Index>(ps.size());
    if (static_cast<Eigen::Index>(z.size()) != n || w.size() != n) {
        throw std::invalid_argument("weighting_gradient: size mismatch");
    }
    const Matrix& x = ps.coords();
    const Matrix& zv = z.values();
    GradientField field{Matrix::Zero(n, x.cols()), z.scale()};
    if (n == 1) return field;

    for (Eigen::Index j = 0; j < n; ++j) {
        double norm = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != j) norm += zv(j, k);
        }
        if (!(norm > 0.0)) {
            throw Error("weighting_gradient: similarity row " + std::to_string(j) + " underflows to zero");
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == j) continue;
            const Eigen::RowVectorXd diff = x.row(k) - x.row(j);
            const double dist = diff.norm();
            if (dist == 0.0) {
                throw SingularPair(static_cast<std::size_t>(std::min(j, k)), static_cast<std::size_t>(std::max(j, k)));
            }
            // (Z_jk / norm) * ((w_k - w_j) / d_jk) * (diff / d_jk)
            field.vectors.row(j) += (zv(j, k) / norm) * ((w(k) - w(j)) / dist) * (diff / dist);
        }
    }
    return field;
}

Vector speed_factors(std::span<const int> dominance_counts) {
    const auto n = static_cast<Eigen::Index>(dominance_counts.size());
    Vector s = Vector::Ones(n);
    int max_dom = 0;
    for (int c : dominance_counts) {
        if (c < 0) throw std::invalid_argument("speed_factors: negative dominance count");
        max_dom = std::max(max_dom, c);
    }
    if (max_dom == 0) return s;
    for (Eigen::Index j = 0; j < n; ++j) {
        s(j) = 1.0 - 2.0 * static_cast<double>(dominance_counts[static_cast<std::size_t>(j)]) / max_dom;
    }
    return s;
}

double step_size(const PointSet& ys) {
    const auto n = ys.size();
    if (n < 2) throw std::invalid_argument("step_size: need at least two points");
    const DistanceMatrix d = distance_matrix(ys);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            if (k != j) nearest = std::min(nearest, d(j, k));
        }
        total += nearest;
    }
    return std::sqrt(total / static_cast<double>(n) / static_cast<double>(n));
}

Matrix jacobian(const ObjectiveProblem& f, const Vector& x) { return jacobian(f, x, f.evaluate(x)); }

Matrix jacobian(const ObjectiveProblem& f, const Vector& x, const Vector& fx) {
    if (!fx.allFinite()) throw EvaluationError("jacobian: non-finite base value", {0});
    const auto M = x.size();
    Matrix j(fx.size(), M);
    const Bounds& b = f.bounds();
    for (Eigen::Index i = 0; i < M; ++i) {
        double h = std::max(1e-6, 1e-6 * std::abs(x(i)));
        if (x(i) + h > b.upper(i)) h = -h;
        Vector probe = x;
        probe(i) += h;
        const Vector fp = f.evaluate(probe);
        if (!fp.allFinite()) {
            throw EvaluationError("jacobian: non-finite value at probe " + std::to_string(i),
                                  {static_cast<std::size_t>(i)});
        }
        j.col(i) = (fp - fx) / h;
    }
    return j;
}

Vector pullback(const Matrix& j, const Vector& dy, double rcond) {
    Eigen::JacobiSVD<Matrix> svd(j, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    Vector coeff = svd.matrixU().transpose() * dy;
    const double cutoff = sigma.size() > 0 ? rcond * sigma(0) : 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        coeff(i) = sigma(i) > cutoff && sigma(i) > 0.0 ? coeff(i) / sigma(i) : 0.0;
    }
    return svd.matrixV() * coeff;
}

void EvaluationArchive::add(const Vector& x, const Vector& y) {
    xs_.push_back(x);
    ys_.push_back(y);
}

std::vector<std::size_t> EvaluationArchive::nearest(const Vector& x, std::size_t count) const {
    std::vector<std::pair<double, std::size_t>> dist;
    dist.reserve(xs_.size());
    for (std::size_t i = 0; i < xs_.size(); ++i) {
        const double d2 = (xs_[i] - x).squaredNorm();
        if (d2 > 0.0) dist.emplace_back(d2, i);
    }
    const std::size_t keep = std::min(count, dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(keep), dist.end());
    std::vector<std::size_t> out(keep);
    for (std::size_t r = 0; r < keep; ++r) out[r] = dist[r].second;
    return out;
}

RecycledJacobian recycled_jacobian(const ObjectiveProblem& f, const EvaluationArchive& history,
                                   const Vector& x, const Vector& fx) {
    const auto M = static_cast<std::size_t>(x.size());
    const auto m = fx.size();
    const auto neighbours = history.nearest(x, M);
    RecycledJacobian out;
    if (!neighbours.empty()) {
        const auto k = static_cast<Eigen::Index>(neighbours.size());
        Matrix dx(k, x.size());
        Matrix dy(k, m);
        for (Eigen::Index r = 0; r < k; ++r) {
            const auto i = neighbours[static_cast<std::size_t>(r)];
            dx.row(r) = (history.x(i) - x).transpose();
            dy.row(r) = (history.y(i) - fx).transpose();
        }
        // dx J^T ~= dy in the minimum-norm least-squares sense.
        Eigen::JacobiSVD<Matrix> svd(dx, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Matrix estimate = svd.solve(dy).transpose();
        Eigen::JacobiSVD<Matrix> check(estimate);
        const Vector& sigma = check.singularValues();
        std::size_t rank = 0;
        if (sigma.size() > 0 && sigma(0) > 0.0 && estimate.allFinite()) {
            for (Eigen::Index i = 0; i < sigma.size(); ++i) {
                if (sigma(i) >= 1e-8 * sigma(0)) ++rank;
            }
        }
        if (rank >= std::min(static_cast<std::size_t>(m), M)) {
            out.jacobian = estimate;
            out.recycled = true;
            return out;
        }
    }
    out.jacobian = jacobian(f, x, fx);
    out.fresh_evals = M;
    return out;
}

void FlowConfig::validate() const {
    if (scale_policy == ScalePolicy::Fixed && !(fixed_scale > 0.0 && std::isfinite(fixed_scale))) {
        throw std::invalid_argument("FlowConfig: fixed scale must be positive");
    }
    if (lambda_w < 0.0 || lambda_f < 0.0) throw std::invalid_argument("FlowConfig: lambdas must be nonnegative");
    if (driver == FlowDriver::MultiObjective && !(lambda_w + lambda_f > 0.0)) {
        throw std::invalid_argument("FlowConfig: lambda_w + lambda_f must be positive");
    }
}

FlowContext FlowContext::seeded(const Population& pop) {
    FlowContext ctx;
    for (Eigen::Index j = 0; j < pop.xs.rows(); ++j) {
        ctx.archive.add(pop.xs.row(j).transpose(), pop.ys.row(j).transpose());
    }
    return ctx;
}

double flow_scale(const Population& pop, const FlowConfig& cfg) {
    if (cfg.scale_policy == ScalePolicy::Fixed) return cfg.fixed_scale;
    if (pop.size() < 2) return 1.0;
    // A weighting positive at every scale has t_plus = 0; fall back to t_d, and for two
    // points (equal weights, zero gradient) to any positive scale.
    const ScaleReport r = scale_report(distance_matrix(PointSet(pop.ys)));
    if (r.t_plus > 0.0) return r.t_plus;
    return r.t_d > 0.0 ? r.t_d : 1.0;
}

namespace {

// Shared pipeline: differentials in objective space, pullback, update, repair.
Population advance(const ObjectiveProblem& f, const Population& pop, const FlowConfig& cfg,
                   FlowContext& ctx, double t, FlowDriver driver, double lambda_w,
                   double lambda_f, StepReport* report) {
    cfg.validate();
    const auto n = pop.xs.rows();
    const auto m = pop.ys.cols();
    StepReport rep;
    rep.t = t;
    if (n < 2) {
        if (report) *report = rep;
        return pop;
    }
    if (!(t > 0.0)) throw std::invalid_argument("flow step: scale must be positive");

    const PointSet ys(pop.ys);
    const DistanceMatrix d = distance_matrix(ys);
    const ScaledSimilarity z = similarity(d, t);
    const Vector field_values = driver == FlowDriver::Spread ? spread(d, t).a : solve_weighting(z).w;
    const GradientField grad = weighting_gradient(ys, z, field_values);
    const Vector speed = cfg.speed_factor_enabled ? speed_factors(pop.dom) : Vector::Ones(n);
    const double ds = step_size(ys);
    rep.ds = ds;

    Matrix dy(n, m);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::RowVectorXd g = grad.vectors.row(j);
        Eigen::RowVectorXd descent = Eigen::RowVectorXd::Zero(m);
        if (driver == FlowDriver::MultiObjective) {
            // <g, -e_l> > 0  <=>  g_l < 0
            for (Eigen::Index l = 0; l < m; ++l) {
                if (g(l) < 0.0) descent(l) -= 1.0;
            }
        }
        dy.row(j) = ds * (lambda_w * speed(j) * g + lambda_f * descent);
    }

    Population next = pop;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Vector x = pop.xs.row(j).transpose();
        const Vector y = pop.ys.row(j).transpose();
        Matrix jac;
        try {
            if (cfg.jacobian_mode == JacobianMode::Recycled) {
                const RecycledJacobian rj = recycled_jacobian(f, ctx.archive, x, y);
                jac = rj.jacobian;
                rep.evaluations += rj.fresh_evals;
                ctx.jacobian_evaluations += rj.fresh_evals;
                if (rj.recycled) {
                    ++rep.recycled;
                } else {
                    ++rep.fallbacks;
                }
            } else {
                jac = jacobian(f, x, y);
                rep.evaluations += static_cast<std::size_t>(x.size());
                ctx.jacobian_evaluations += static_cast<std::size_t>(x.size());
            }
        } catch (const EvaluationError&) {
            // Probes were spent even though the Jacobian is unusable.
            rep.evaluations += static_cast<std::size_t>(x.size());
            ctx.jacobian_evaluations += static_cast<std::size_t>(x.size());
            ++rep.replaced;
            continue;
        }
        const Vector dx = pullback(jac, dy.row(j).transpose());
        const Vector x_new = x + dx;
        if (!dx.allFinite() || !f.bounds().contains(x_new)) {
            ++rep.replaced;
            continue;
        }
        const Vector y_new = f.evaluate(x_new);
        ++rep.evaluations;
        if (!y_new.allFinite()) {
            ++rep.replaced;
            continue;
        }
        ctx.archive.add(x_new, y_new);
        next.xs.row(j) = x_new.transpose();
        next.ys.row(j) = y_new.transpose();
    }
    ctx.evaluations += rep.evaluations;
    next.refresh_dominance();
    if (report) *report = rep;
    return next;
}

} // namespace

Population flow_step_at(const ObjectiveProblem& f, const Population& pop, const FlowConfig& cfg,
                        FlowContext& ctx, double t, StepReport* report) {
    switch (cfg.driver) {
    case FlowDriver::MultiObjective:
        return advance(f, pop, cfg, ctx, t, FlowDriver::MultiObjective, cfg.lambda_w, cfg.lambda_f, report);
    case FlowDriver::Spread:
        return advance(f, pop, cfg, ctx, t, FlowDriver::Spread, 1.0, 0.0, report);
    case FlowDriver::Weighting:
        break;
    }
    return advance(f, pop, cfg, ctx, t, FlowDriver::Weighting, 1.0, 0.0, report);
}

Population flow_step(const ObjectiveProblem& f, const Population& pop, const FlowConfig& cfg,
                     FlowContext& ctx, StepReport* report) {
    if (pop.size() < 2) return pop;
    return advance(f, pop, cfg, ctx, flow_scale(pop, cfg), FlowDriver::Weighting, 1.0, 0.0, report);
}

Population mowgf_step(const ObjectiveProblem& f, const Population& pop, const FlowConfig& cfg,
                      FlowContext& ctx, StepReport* report) {
    if (pop.size() < 2) return pop;
    return advance(f, pop, cfg, ctx, flow_scale(pop, cfg), FlowDriver::MultiObjective, cfg.lambda_w,
                   cfg.lambda_f, report);
}

Population spread_vector_flow_step(const ObjectiveProblem& f, const Population& pop,
                                   const FlowConfig& cfg, FlowContext& ctx, StepReport* report) {
    if (pop.size() < 2) return pop;
    return advance(f, pop, cfg, ctx, flow_scale(pop, cfg), FlowDriver::Spread, 1.0, 0.0, report);
}

std::pair<double, double> magnitude_at_positive_cutoff(const Matrix& ys) {
    if (ys.rows() < 2) return {0.0, ys.rows() == 1 ? 1.0 : 0.0};
    const DistanceMatrix d = distance_matrix(PointSet(ys));
    const double t = scale_report(d).t_plus;
    if (!(t > 0.0)) return {0.0, 1.0}; // t -> 0 limit
    return {t, magnitude_at(d, t)};
}

namespace {

Matrix rows_of(const Matrix& m, const std::vector<std::size_t>& idx) {
    Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(idx[r]));
    return out;
}

Matrix feasible_objectives(const Population& pop) {
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < pop.size(); ++j) {
        if (pop.feasible.empty() || pop.feasible[j]) idx.push_back(j);
    }
    return rows_of(pop.ys, idx);
}

double magnitude_or_limit(const Matrix& ys, double t) {
    if (ys.rows() == 0) return 0.0;
    if (ys.rows() == 1 || !(t > 0.0)) return 1.0;
    return magnitude_at(distance_matrix(PointSet(ys)), t);
}

TraceRow record(std::size_t step, const Population& pop, const FlowContext& ctx, const Matrix* reference) {
    TraceRow row;
    row.step = step;
    const Matrix feasible = feasible_objectives(pop);
    std::tie(row.t_plus, row.mag_feasible) = magnitude_at_positive_cutoff(feasible);
    const auto nd = pop.nondominated();
    std::tie(row.t_plus_nondom, row.mag_nondom) = magnitude_at_positive_cutoff(rows_of(pop.ys, nd));
    row.n_nondom = nd.size();
    row.ds = feasible.rows() >= 2 ? step_size(PointSet(feasible)) : 0.0;
    row.igd = reference ? igd(pop.ys, *reference) : std::numeric_limits<double>::quiet_NaN();
    row.evals = ctx.evaluations;
    row.jacobian_evals = ctx.jacobian_evaluations;
    return row;
}

} // namespace

FlowTrace run_flow(const ObjectiveProblem& f, Population initial, const FlowConfig& cfg,
                   const Matrix* reference) {
    cfg.validate();
    FlowTrace trace;
    FlowContext ctx = FlowContext::seeded(initial);
    if (initial.dom.size() != initial.size()) initial.refresh_dominance();
    Population pop = std::move(initial);
    for (std::size_t step = 0;; ++step) {
        trace.rows.push_back(record(step, pop, ctx, reference));
        trace.snapshots.push_back(pop);
        if (step == cfg.steps) break;
        const double row_t = trace.rows.back().t_plus;
        const double t = cfg.scale_policy == ScalePolicy::PositiveCutoff && row_t > 0.0 ? row_t : flow_scale(pop, cfg);
        StepReport rep;
        pop = flow_step_at(f, pop, cfg, ctx, t, &rep);
        trace.steps.push_back(rep);
    }
    return trace;
}

std::vector<QuotientRow> diversity_quotients(const FlowTrace& trace) {
    std::vector<QuotientRow> out;
    if (trace.snapshots.empty()) return out;
    const Population& first = trace.snapshots.front();
    const Matrix y0 = feasible_objectives(first);
    const Matrix y0_nd = rows_of(first.ys, first.nondominated());
    for (std::size_t s = 0; s < trace.rows.size(); ++s) {
        const TraceRow& row = trace.rows[s];
        const Population& pop = trace.snapshots[s];
        QuotientRow q;
        q.step = row.step;
        q.q_feasible = row.mag_feasible / magnitude_or_limit(y0, row.t_plus);
        q.q_nondom = row.mag_nondom / magnitude_or_limit(y0_nd, row.t_plus_nondom);
        q.nondom_fraction = pop.size() > 0 ? static_cast<double>(row.n_nondom) / static_cast<double>(pop.size()) : 0.0;
        out.push_back(q);
    }
    return out;
}

} // namespace magflow
