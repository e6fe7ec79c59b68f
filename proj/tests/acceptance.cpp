// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any criterion fails.

#include "magflow/discrete.hpp"
#include "magflow/errors.hpp"
#include "magflow/experiments.hpp"
#include "magflow/flow.hpp"
#include "magflow/magnitude.hpp"
#include "magflow/moea.hpp"
#include "magflow/problems.hpp"

#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

using namespace magflow;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

DistanceMatrix dist(const Matrix& p) { return distance_matrix(PointSet(p)); }

Matrix random_set(std::uint64_t seed, std::size_t lo, std::size_t hi, std::size_t dim = 2) {
    const std::size_t n = lo + static_cast<std::size_t>(seed * 2654435761ULL % (hi - lo + 1));
    return oracle::random_points(n, dim, seed);
}

// A scale at or above t_plus where the weighting is positive.
double positive_scale(const DistanceMatrix& d) {
    const ScaleReport r = scale_report(d);
    return r.t_plus > 0.0 ? 1.5 * r.t_plus : r.t_d;
}

bool identity_holds(const ScaledSimilarity& z, const Weighting& w, double tol, double* worst) {
    const Vector p = w.w / w.magnitude;
    bool ok = true;
    for (double q : {0.0, 1.0, 2.0, kInfiniteOrder}) {
        const double e = rel(diversity_order_q(z, p, q), w.magnitude);
        *worst = std::max(*worst, e);
        ok = ok && e <= tol;
    }
    return ok;
}

Outcome c1_closed_form() {
    Outcome o;
    double worst = 0;
    for (double delta : {1e-3, 0.5, 1.5}) {
        const DistanceMatrix d = dist(oracle::three_point_set(delta));
        for (double t : {0.01, 0.1, 1.0, 10.0}) {
            const Weighting w = solve_weighting(similarity(d, t));
            const double w1 = static_cast<double>(oracle::three_point_w1(delta, t));
            const double w2 = static_cast<double>(oracle::three_point_w2(delta, t));
            worst = std::max({worst, rel(w.w(0), w1), rel(w.w(1), w2), rel(w.w(2), w2)});
        }
    }
    o.pass = worst <= 1e-8;
    const DistanceMatrix d = dist(oracle::three_point_set(1e-3));
    const double m1 = magnitude_at(d, 1e-2), m2 = magnitude_at(d, 10.0), m3 = magnitude_at(d, 1e4);
    o.pass = o.pass && std::abs(m1 - 1) < 0.1 && std::abs(m2 - 2) < 0.1 && std::abs(m3 - 3) < 0.1;
    o.detail = fmt("max rel err %.2e", worst) + fmt(", plateaus %.3f", m1) + fmt("/%.3f", m2) + fmt("/%.3f", m3);
    return o;
}

Outcome c2_bracket() {
    Outcome o;
    std::size_t inside = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const ScaleReport r = diagonal_cutoff(dist(random_set(seed, 3, 50)));
        if (r.lower_bound <= r.t_d && r.t_d <= r.upper_bound) ++inside;
    }
    Matrix line(3, 1);
    line << 0, 1, 3;
    const double t = diagonal_cutoff(dist(line)).t_d;
    const double err = std::abs(t - std::log((std::sqrt(5.0) + 1) / 2));
    o.pass = inside == 100 && err <= 1e-5;
    o.detail = std::to_string(inside) + "/100 inside bracket" + fmt(", line error %.2e", err);
    return o;
}

Outcome c3_zero_scale() {
    Outcome o;
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const DistanceMatrix d = dist(random_set(seed + 100, 3, 20));
        const Vector w = solve_weighting(similarity(d, 1e-6)).w;
        worst = std::max(worst, (w - zero_scale_weighting(d)).cwiseAbs().maxCoeff());
    }
    o.pass = worst <= 1e-3;
    o.detail = fmt("max-norm gap %.2e", worst);
    return o;
}

Outcome c4_identity() {
    Outcome o;
    double worst = 0;
    std::size_t ok = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const DistanceMatrix d = dist(random_set(seed + 200, 3, 30));
        const ScaledSimilarity z = similarity(d, positive_scale(d));
        const Weighting w = solve_weighting(z);
        if (w.all_positive && identity_holds(z, w, 1e-6, &worst)) ++ok;
    }
    // Simplex grid on three points.
    const DistanceMatrix d3 = dist(oracle::three_point_set(0.5));
    const ScaledSimilarity z3 = similarity(d3, positive_scale(d3));
    const Weighting w3 = solve_weighting(z3);
    const int steps = 1000;
    double best = -1;
    Vector arg(3);
    for (int a = 0; a <= steps; ++a) {
        for (int b = 0; a + b <= steps; ++b) {
            Vector p(3);
            p << a, b, steps - a - b;
            p /= steps;
            const double v = diversity_order_q(z3, p, 2.0);
            if (v > best) {
                best = v;
                arg = p;
            }
        }
    }
    const double gap = (arg - w3.w / w3.magnitude).cwiseAbs().maxCoeff();
    o.pass = ok == 50 && gap <= 1e-3 + 1e-12;
    o.detail = std::to_string(ok) + "/50 sets" + fmt(", worst rel %.2e", worst) + fmt(", grid argmax gap %.1e", gap);
    return o;
}

Outcome c5_signs() {
    Outcome o;
    std::size_t good = 0, total = 0;
    double stationary = 0;
    for (double delta : {0.25, 0.5, 0.9, 1.0, 1.1, 1.5, 1.9}) {
        const Matrix pts = oracle::three_point_set(delta);
        for (double t : {0.1, 1.0, 5.0}) {
            const PointSet ps(pts);
            const ScaledSimilarity z = similarity(distance_matrix(ps), t);
            const GradientField g = weighting_gradient(ps, z, solve_weighting(z).w);
            if (delta == 1.0) {
                stationary = std::max(stationary, g.vectors.cwiseAbs().maxCoeff());
                continue;
            }
            const Eigen::RowVector2d e1(1, 0);
            const Eigen::RowVectorXd e21 = (pts.row(0) - pts.row(1)).normalized();
            const double s1 = g.vectors.row(0).dot(e1);
            const double s2 = g.vectors.row(1).dot(e21);
            const double want = delta > 1 ? 1.0 : -1.0;
            ++total;
            if (s1 * want > 0 && s2 * want < 0) ++good;
        }
    }
    o.pass = good == total && stationary <= 1e-12;
    o.detail = std::to_string(good) + "/" + std::to_string(total) + " sign checks" + fmt(", stationary residual %.1e", stationary);
    return o;
}

Outcome c6_toy() {
    Outcome o;
    ExperimentSpec spec;
    spec.pipeline = "toy-triangle";
    spec.seed = 1;
    spec.profiles = false;
    spec.flow.steps = 10;
    const ToyResult r = run_toy(spec);
    const auto q = diversity_quotients(r.trace);
    const double q10 = q.back().q_feasible;
    const double n0 = static_cast<double>(r.trace.rows.front().n_nondom);
    double drift = 0;
    for (const auto& row : r.trace.rows) drift = std::max(drift, std::abs(static_cast<double>(row.n_nondom) - n0) / n0);
    o.pass = q10 > 1.0 && drift <= 0.10;
    // Reported only: the same quotient at a fixed larger scale.
    auto feasible = [](const Population& p) {
        std::vector<std::size_t> rows;
        for (std::size_t j = 0; j < p.size(); ++j) {
            if (p.feasible[j]) rows.push_back(j);
        }
        return distance_matrix(PointSet(p.ys)).subset(rows);
    };
    const double q50 = magnitude_at(feasible(r.trace.snapshots.back()), 50.0) /
                       magnitude_at(feasible(r.trace.snapshots.front()), 50.0);
    o.detail = "n=" + std::to_string(r.initial.size()) + fmt(", Mag(t+10;Y10)/Mag(t+10;Y0) = %.4f", q10) +
               fmt(" (at t=50: %.4f)", q50) + fmt(", max nondominated drift %.1f%%", 100 * drift);
    return o;
}

struct BenchRuns {
    std::vector<BenchmarkResult> fresh;
    std::vector<BenchmarkResult> recycled;
};

const BenchRuns& wfg2_runs() {
    static const BenchRuns runs = [] {
        BenchRuns b;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            ExperimentSpec spec;
            spec.pipeline = "benchmark";
            spec.problem = "wfg2";
            spec.ga = desk_preset();
            spec.seed = seed;
            spec.flow.steps = 10;
            b.fresh.push_back(run_benchmark(spec));
            spec.flow.jacobian_mode = JacobianMode::Recycled;
            b.recycled.push_back(run_benchmark(spec));
        }
        return b;
    }();
    return runs;
}

Outcome c7_benchmark() {
    Outcome o;
    std::vector<double> q;
    double min_fraction = 1, max_igd_ratio = 0;
    for (const auto& r : wfg2_runs().fresh) {
        q.push_back(r.quotients.back().q_feasible);
        min_fraction = std::min(min_fraction, r.quotients.back().nondom_fraction);
        max_igd_ratio = std::max(max_igd_ratio, r.trace.rows.back().igd / r.trace.rows.front().igd);
    }
    const double med = median(q);
    o.pass = med > 1.02 && min_fraction >= 0.7 && max_igd_ratio <= 1.5;
    o.detail = fmt("median quotient %.4f", med) + fmt(", min nondominated fraction %.3f", min_fraction) +
               fmt(", max IGD ratio %.3f", max_igd_ratio);
    return o;
}

Outcome c8_recycling() {
    Outcome o;
    double worst = 0;
    std::size_t fresh_total = 0, recycled_total = 0;
    const auto& runs = wfg2_runs();
    for (std::size_t s = 0; s < runs.fresh.size(); ++s) {
        const std::size_t f = runs.fresh[s].trace.rows.back().evals;
        const std::size_t r = runs.recycled[s].trace.rows.back().evals;
        fresh_total += f;
        recycled_total += r;
        worst = std::max(worst, static_cast<double>(r) / static_cast<double>(f));
    }
    o.pass = worst <= 0.15;
    o.detail = "flow evaluations " + std::to_string(recycled_total) + " vs " + std::to_string(fresh_total) +
               fmt(", worst seed ratio %.3f", worst);
    return o;
}

Outcome c9_spread() {
    Outcome o;
    std::size_t ok = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Matrix pts = random_set(seed + 300, 3, 40);
        const DistanceMatrix d = dist(pts);
        const double n = static_cast<double>(pts.rows());
        bool good = true;
        double prev = 0;
        for (int i = 0; i < 64; ++i) {
            const double t = 1e-3 * std::pow(1e7, i / 63.0);
            const double e = spread(d, t).e0;
            good = good && e >= 1 - 1e-12 && e <= n + 1e-12 && e >= prev - 1e-12;
            good = good && e <= std::exp(t * d.values().maxCoeff()) * (1 + 1e-12);
            prev = e;
        }
        const ScaleReport r = scale_report(d);
        for (double t : {std::max(r.t_plus, 1e-3 * r.t_d), r.t_d, 4 * r.t_d}) {
            good = good && spread(d, t).e0 <= magnitude_at(d, t) + 1e-9;
        }
        if (good) ++ok;
    }
    o.pass = ok == 50;
    o.detail = std::to_string(ok) + "/50 sets";
    return o;
}

Outcome c10_erosion() {
    Outcome o;
    std::size_t ok = 0, runs = 0;
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const DistanceMatrix d = dist(random_set(seed + 400, 3, 40));
        const ScaleReport r = scale_report(d);
        std::vector<double> scales{r.t_d};
        if (r.t_plus > 0.0) scales = {r.t_plus / 4, r.t_plus, r.t_d};
        for (double t : scales) {
            ++runs;
            const Erosion e = erode(d, t);
            bool good = e.iterations <= d.size() && e.weighting.all_positive && !e.retained.empty();
            if (good) good = identity_holds(similarity(d.subset(e.retained), t), e.weighting, 1e-6, &worst);
            if (good) ++ok;
        }
    }
    o.pass = ok == runs;
    o.detail = std::to_string(ok) + "/" + std::to_string(runs) + " runs" + fmt(", worst identity rel %.2e", worst);
    return o;
}

Outcome c11_discrete() {
    Outcome o;
    std::size_t good = 0;
    std::string gains;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        LatticeConfig cfg;
        cfg.mh.seed = seed;
        const MagnitudeTrace tr = lattice_experiment(cfg);
        bool monotone = true;
        for (std::size_t s = 1; s < tr.magnitude.size(); ++s) monotone = monotone && tr.magnitude[s] >= tr.magnitude[s - 1];
        const double gain = tr.magnitude.back() / tr.magnitude.front() - 1;
        if (monotone && gain >= 0.10) ++good;
        gains += (gains.empty() ? "" : " ") + fmt("%.1f%%", 100 * gain) + (monotone ? "" : "(non-monotone)");
    }
    o.pass = good >= 4;
    o.detail = std::to_string(good) + "/5 seeds, gains " + gains;
    return o;
}

Outcome c12_oracles() {
    Outcome o;
    std::size_t dom_ok = 0, sort_ok = 0, igd_ok = 0, grad_ok = 0;
    double grad_worst = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const std::size_t n = 10 * seed;
        Matrix ys = oracle::random_points(n, 2 + seed % 3, seed + 500);
        if (seed % 2 == 0) ys = (ys * 6).array().floor().matrix();
        if (dominance_counts(ys) == oracle::dominance_counts(ys)) ++dom_ok;
        if (fast_nondominated_sort(ys) == oracle::peel(ys)) ++sort_ok;
        const Matrix ref = oracle::random_points(50, ys.cols(), seed + 600);
        if (rel(igd(ys, ref), oracle::igd(ys, ref)) <= 1e-12) ++igd_ok;

        const Matrix pts = oracle::random_points(2 + seed % 4, 2 + seed % 2, seed + 700);
        const double t = 0.5 + static_cast<double>(seed % 5);
        const PointSet ps(pts);
        const ScaledSimilarity z = similarity(distance_matrix(ps), t);
        const GradientField g = weighting_gradient(ps, z, solve_weighting(z).w);
        const auto ref_g = oracle::gradient(pts, t);
        double err = 0;
        for (Eigen::Index j = 0; j < g.vectors.rows(); ++j) {
            for (Eigen::Index c = 0; c < g.vectors.cols(); ++c) {
                err = std::max(err, std::abs(g.vectors(j, c) - static_cast<double>(ref_g[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)])));
            }
        }
        grad_worst = std::max(grad_worst, err);
        if (err <= 1e-10) ++grad_ok;
    }
    o.pass = dom_ok == 20 && sort_ok == 20 && igd_ok == 20 && grad_ok == 20;
    o.detail = "dominance " + std::to_string(dom_ok) + "/20, sorting " + std::to_string(sort_ok) + "/20, IGD " +
               std::to_string(igd_ok) + "/20, gradient " + std::to_string(grad_ok) + "/20" + fmt(" (worst %.1e)", grad_worst);
    return o;
}

} // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_seconds;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"closed-form weighting", 1, c1_closed_form},
        {"diagonal cutoff bracket", 5, c2_bracket},
        {"zero-scale weighting", 1, c3_zero_scale},
        {"diversity-magnitude identity", 30, c4_identity},
        {"three-point flow signs", 1, c5_signs},
        {"toy triangle pipeline", 120, c6_toy},
        {"WFG2 benchmark pipeline", 600, c7_benchmark},
        {"Jacobian recycling", 600, c8_recycling},
        {"spread bounds", 10, c9_spread},
        {"erosion", 30, c10_erosion},
        {"lattice Metropolis-Hastings", 300, c11_discrete},
        {"oracle equivalence", 60, c12_oracles},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& c = criteria[i];
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.limit_seconds;
        const bool pass = out.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("%s C%zu %s: %s [%.2fs / %.0fs]\n", pass ? "PASS" : "FAIL", i + 1, c.name, out.detail.c_str(), secs,
                    c.limit_seconds);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
