#include "magflow/discrete.hpp"

#include "magflow/errors.hpp"
#include "magflow/flow.hpp"
#include "magflow/magnitude.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace magflow {

namespace {

Vector nearest_neighbour_distances(const Matrix& pts) {
    const auto n = pts.rows();
    Vector out = Vector::Constant(n, std::numeric_limits<double>::infinity());
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k != j) out(j) = std::min(out(j), (pts.row(j) - pts.row(k)).norm());
        }
    }
    return out;
}

} // namespace

PerturbationModel PerturbationModel::calibrate(const Population& pop, double t) {
    if (pop.size() < 2) throw std::invalid_argument("PerturbationModel::calibrate: need two points");
    PerturbationModel model;
    model.delta = nearest_neighbour_distances(pop.xs) / 2.0;

    const Vector nn = nearest_neighbour_distances(pop.ys);
    double sum = 0.0;
    std::size_t count = 0;
    for (Eigen::Index j = 0; j < nn.size(); ++j) {
        if (nn(j) > 0.0) {
            sum += nn(j);
            ++count;
        }
    }
    if (count == 0) throw std::invalid_argument("PerturbationModel::calibrate: all objective points coincide");
    const double dd = sum / static_cast<double>(count);

    const PointSet ys(pop.ys);
    const ScaledSimilarity z = similarity(distance_matrix(ys), t);
    const GradientField g = weighting_gradient(ys, z, solve_weighting(z).w);
    const double mean_norm = g.vectors.rowwise().norm().mean();
    model.step_scale = mean_norm > 0.0 ? dd / (2.0 * mean_norm) : 0.0;
    return model;
}

Matrix basis_with_first(const Vector& a) {
    const auto n = a.size();
    Matrix h = Matrix::Identity(n, n);
    const double norm = a.norm();
    if (!(norm > 0.0)) return h;
    Vector v = a / norm;
    v(0) -= 1.0;
    const double vv = v.squaredNorm();
    if (vv < 1e-30) return h;
    h -= (2.0 / vv) * v * v.transpose();
    return h;
}

Vector PerturbationModel::sample(std::size_t j, const Vector& mu, Rng& rng) const {
    if (sampler) return sampler(j, mu, rng);
    const double dj = delta(static_cast<Eigen::Index>(j));
    Vector z(mu.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
    const double m = mu.norm();
    if (!(m > 0.0)) return std::sqrt(dj) * z;
    z(0) *= std::sqrt(m);
    z.tail(z.size() - 1) *= std::sqrt(dj);
    return mu + basis_with_first(mu) * z;
}

std::vector<std::size_t> effort(std::span<const double> grad_norms, double c) {
    if (!(c > 0.0)) throw std::invalid_argument("effort: C must be positive");
    double total = 0.0;
    for (double g : grad_norms) {
        if (!(g >= 0.0) || !std::isfinite(g)) throw std::invalid_argument("effort: norms must be finite and nonnegative");
        total += g;
    }
    if (!(total > 0.0)) throw std::invalid_argument("effort: all gradient norms are zero");
    std::vector<std::size_t> out;
    out.reserve(grad_norms.size());
    for (double g : grad_norms) out.push_back(static_cast<std::size_t>(std::ceil(c * g / total)));
    return out;
}

Population stochastic_flow_step(const ObjectiveProblem& f, const Population& pop,
                                const PerturbationModel& model, std::span<const std::size_t> candidates,
                                double t, Rng& rng, StochasticStepReport* report) {
    const auto n = pop.xs.rows();
    if (candidates.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("stochastic_flow_step: one candidate count per point");
    }
    StochasticStepReport rep;
    rep.step_lengths = Vector::Zero(n);
    Population next = pop;
    if (n < 2) {
        rep.unchanged = static_cast<std::size_t>(n);
        if (report) *report = rep;
        return next;
    }
    const PointSet ys(pop.ys);
    const ScaledSimilarity z = similarity(distance_matrix(ys), t);
    const GradientField g = weighting_gradient(ys, z, solve_weighting(z).w);

    for (Eigen::Index j = 0; j < n; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const Vector x = pop.xs.row(j).transpose();
        const Vector y = pop.ys.row(j).transpose();
        const Vector dy = model.step_scale * g.vectors.row(j).transpose();
        const Vector target = y + dy;
        Vector mu = Vector::Zero(x.size());
        if (candidates[ju] > 0 && dy.norm() > 0.0) {
            try {
                mu = pullback(jacobian(f, x, y), dy);
                rep.evaluations += static_cast<std::size_t>(x.size());
            } catch (const EvaluationError&) {
                rep.evaluations += static_cast<std::size_t>(x.size());
            }
        }
        double best = std::numeric_limits<double>::infinity();
        Vector best_x;
        Vector best_y;
        for (std::size_t c = 0; c < candidates[ju]; ++c) {
            const Vector dx = model.sample(ju, mu, rng);
            const Vector xc = x + dx;
            if (!dx.allFinite() || !f.bounds().contains(xc)) continue;
            const Vector yc = f.evaluate(xc);
            ++rep.evaluations;
            if (!yc.allFinite()) continue;
            const double dist = (yc - target).norm();
            if (dist < best) {
                best = dist;
                best_x = xc;
                best_y = yc;
            }
        }
        if (best_x.size() == 0) {
            ++rep.unchanged;
            continue;
        }
        rep.step_lengths(j) = (best_x - x).norm();
        next.xs.row(j) = best_x.transpose();
        next.ys.row(j) = best_y.transpose();
    }
    next.refresh_dominance();
    if (report) *report = rep;
    return next;
}

bool metropolis_accept(double mu, double mu_new, double beta, Rng& rng) {
    if (!(beta > 0.0)) throw std::invalid_argument("metropolis_accept: beta must be positive");
    if (mu_new >= mu) return true;
    if (std::isinf(beta)) return false;
    return rng.uniform() < std::exp(-beta * (mu - mu_new));
}

namespace {

bool contains_row(const Matrix& points, const Vector& x) {
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        if (points.row(r) == x.transpose()) return true;
    }
    return false;
}

Weighting weighting_of(const Matrix& points, double t) {
    return solve_weighting(similarity(distance_matrix(PointSet(points)), t));
}

} // namespace

MHStep mh_magnitude_step(const Matrix& points, const Proposal& proposal, double t, double beta, Rng& rng) {
    const Weighting w = weighting_of(points, t);
    Eigen::Index jstar = 0;
    w.w.minCoeff(&jstar);
    MHStep out{points, w.magnitude, false, static_cast<std::size_t>(jstar)};
    const std::optional<Vector> cand = proposal(points, out.index, rng);
    if (!cand) throw Error("mh_magnitude_step: proposal exhausted");
    if (contains_row(points, *cand)) return out;
    Matrix swapped = points;
    swapped.row(jstar) = cand->transpose();
    double mu_new;
    try {
        mu_new = weighting_of(swapped, t).magnitude;
    } catch (const IllConditioned&) {
        return out;
    }
    if (metropolis_accept(w.magnitude, mu_new, beta, rng)) {
        out.points = std::move(swapped);
        out.magnitude = mu_new;
        out.accepted = true;
    }
    return out;
}

LatticeGroundSet::LatticeGroundSet(std::size_t side) : side_(side) {
    if (side < 2) throw std::invalid_argument("LatticeGroundSet: side must be at least 2");
}

Vector LatticeGroundSet::site(std::size_t i) const {
    Vector x(2);
    x << static_cast<double>(i % side_), static_cast<double>(i / side_);
    return x;
}

std::size_t LatticeGroundSet::index_of(const Vector& x) const {
    if (x.size() != 2) return size();
    const double a = x(0);
    const double b = x(1);
    if (a < 0 || b < 0 || a != std::floor(a) || b != std::floor(b)) return size();
    const auto ia = static_cast<std::size_t>(a);
    const auto ib = static_cast<std::size_t>(b);
    if (ia >= side_ || ib >= side_) return size();
    return ib * side_ + ia;
}

Matrix LatticeGroundSet::sample(std::size_t count, Rng& rng) const {
    if (count > size()) throw std::invalid_argument("LatticeGroundSet::sample: more points than sites");
    std::vector<std::size_t> idx(size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    // partial Fisher-Yates
    for (std::size_t r = 0; r < count; ++r) std::swap(idx[r], idx[r + rng.index(size() - r)]);
    Matrix out(static_cast<Eigen::Index>(count), 2);
    for (std::size_t r = 0; r < count; ++r) out.row(static_cast<Eigen::Index>(r)) = site(idx[r]).transpose();
    return out;
}

std::vector<Vector> LatticeGroundSet::outside(const Matrix& points, std::size_t count, Rng& rng) const {
    std::vector<bool> taken(size(), false);
    for (Eigen::Index r = 0; r < points.rows(); ++r) {
        const std::size_t i = index_of(points.row(r).transpose());
        if (i < size()) taken[i] = true;
    }
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < size(); ++i) {
        if (!taken[i]) free.push_back(i);
    }
    const std::size_t k = std::min(count, free.size());
    for (std::size_t r = 0; r < k; ++r) std::swap(free[r], free[r + rng.index(free.size() - r)]);
    std::vector<Vector> out;
    out.reserve(k);
    for (std::size_t r = 0; r < k; ++r) out.push_back(site(free[r]));
    return out;
}

Proposal LatticeGroundSet::proposal() const {
    return [ground = *this](const Matrix& points, std::size_t, Rng& rng) -> std::optional<Vector> {
        auto c = ground.outside(points, 1, rng);
        if (c.empty()) return std::nullopt;
        return c.front();
    };
}

void MHConfig::validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("MHConfig: beta must be positive");
    if (selected == 0 || candidates == 0) throw std::invalid_argument("MHConfig: empty proposal");
}

MagnitudeTrace magnitude_ascent(const Matrix& initial, const LatticeGroundSet& ground, const MHConfig& cfg) {
    cfg.validate();
    MagnitudeTrace trace;
    trace.initial = initial;
    Matrix pts = initial;
    const auto n = static_cast<std::size_t>(pts.rows());
    trace.t_plus = scale_report(distance_matrix(PointSet(pts))).t_plus;
    if (!(trace.t_plus > 0.0)) throw Error("magnitude_ascent: positive cutoff is zero");
    const double t = trace.t_plus;
    Rng rng(cfg.seed, "mh");
    Rng propose = rng.split("proposal");
    Rng accept = rng.split("accept");

    Weighting w = weighting_of(pts, t);
    double mu = w.magnitude;
    trace.magnitude.push_back(mu);
    trace.accepted.push_back(0);
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        if (step > 0) w = weighting_of(pts, t);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return w.w(static_cast<Eigen::Index>(a)) < w.w(static_cast<Eigen::Index>(b));
        });
        const std::size_t sel = std::min(cfg.selected, n);
        const auto cands = ground.outside(pts, sel * cfg.candidates, propose);
        if (cands.empty()) throw Error("magnitude_ascent: proposal exhausted");
        std::size_t accepted = 0;
        for (std::size_t s = 0; s < sel; ++s) {
            const auto j = static_cast<Eigen::Index>(order[s]);
            for (std::size_t c = s * cfg.candidates; c < std::min((s + 1) * cfg.candidates, cands.size()); ++c) {
                Matrix swapped = pts;
                swapped.row(j) = cands[c].transpose();
                double mu_new;
                try {
                    mu_new = weighting_of(swapped, t).magnitude;
                } catch (const IllConditioned&) {
                    continue;
                }
                if (metropolis_accept(mu, mu_new, cfg.beta, accept)) {
                    pts = std::move(swapped);
                    mu = mu_new;
                    ++accepted;
                    break;
                }
            }
        }
        trace.magnitude.push_back(mu);
        trace.accepted.push_back(accepted);
    }
    trace.final_points = pts;
    return trace;
}

MagnitudeTrace lattice_experiment(const LatticeConfig& cfg) {
    const LatticeGroundSet ground(cfg.side);
    Rng rng(cfg.mh.seed, "lattice");
    Rng init = rng.split("initial");
    return magnitude_ascent(ground.sample(cfg.points, init), ground, cfg.mh);
}

} // namespace magflow
