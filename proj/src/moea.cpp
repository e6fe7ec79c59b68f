#include "magflow/moea.hpp"

#include "magflow/problems.hpp"
#include "magflow/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace magflow {

void GAConfig::validate() const {
    if (population < 4 || population % 2 != 0) {
        throw std::invalid_argument("GAConfig: population must be even and at least 4");
    }
    if (max_evaluations < population) throw std::invalid_argument("GAConfig: budget smaller than population");
    if (!(crossover_eta >= 0.0) || !(mutation_eta >= 0.0)) throw std::invalid_argument("GAConfig: negative index");
    if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0)) {
        throw std::invalid_argument("GAConfig: crossover probability outside [0, 1]");
    }
    if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
        throw std::invalid_argument("GAConfig: mutation rate outside [0, 1]");
    }
}

std::vector<std::vector<std::size_t>> fast_nondominated_sort(const Matrix& ys) {
    const auto n = static_cast<std::size_t>(ys.rows());
    std::vector<std::vector<std::size_t>> dominated_by(n);
    std::vector<int> count(n, 0);
    std::vector<std::vector<std::size_t>> fronts(1);
    for (std::size_t p = 0; p < n; ++p) {
        const Vector yp = ys.row(static_cast<Eigen::Index>(p)).transpose();
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            const Vector yq = ys.row(static_cast<Eigen::Index>(q)).transpose();
            if (dominates(yp, yq)) {
                dominated_by[p].push_back(q);
            } else if (dominates(yq, yp)) {
                ++count[p];
            }
        }
        if (count[p] == 0) fronts[0].push_back(p);
    }
    if (n == 0) return {};
    for (std::size_t i = 0; !fronts[i].empty(); ++i) {
        std::vector<std::size_t> next;
        for (std::size_t p : fronts[i]) {
            for (std::size_t q : dominated_by[p]) {
                if (--count[q] == 0) next.push_back(q);
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();
    return fronts;
}

Vector crowding_distance(const Matrix& front) {
    const auto n = front.rows();
    Vector dist = Vector::Zero(n);
    if (n == 0) return dist;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index l = 0; l < front.cols(); ++l) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return front(a, l) < front(b, l); });
        dist(order.front()) = inf;
        dist(order.back()) = inf;
        const double range = front(order.back(), l) - front(order.front(), l);
        if (!(range > 0.0)) continue;
        for (std::size_t r = 1; r + 1 < order.size(); ++r) {
            dist(order[r]) += (front(order[r + 1], l) - front(order[r - 1], l)) / range;
        }
    }
    return dist;
}

namespace {

struct Ranked {
    std::vector<int> rank;
    std::vector<double> crowd;
};

// Feasible points are sorted; failed evaluations form one last front.
Ranked rank_population(const Matrix& ys, const std::vector<bool>& ok, std::vector<std::vector<std::size_t>>* fronts_out) {
    const auto n = static_cast<std::size_t>(ys.rows());
    std::vector<std::size_t> good;
    std::vector<std::size_t> bad;
    for (std::size_t j = 0; j < n; ++j) (ok[j] ? good : bad).push_back(j);
    Matrix gy(static_cast<Eigen::Index>(good.size()), ys.cols());
    for (std::size_t r = 0; r < good.size(); ++r) gy.row(static_cast<Eigen::Index>(r)) = ys.row(static_cast<Eigen::Index>(good[r]));

    std::vector<std::vector<std::size_t>> fronts;
    for (auto& fr : fast_nondominated_sort(gy)) {
        for (auto& i : fr) i = good[i];
        fronts.push_back(std::move(fr));
    }
    if (!bad.empty()) fronts.push_back(bad);

    Ranked out{std::vector<int>(n, 0), std::vector<double>(n, 0.0)};
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        const auto& fr = fronts[f];
        Matrix fy(static_cast<Eigen::Index>(fr.size()), ys.cols());
        for (std::size_t r = 0; r < fr.size(); ++r) fy.row(static_cast<Eigen::Index>(r)) = ys.row(static_cast<Eigen::Index>(fr[r]));
        const bool failed = !bad.empty() && f + 1 == fronts.size();
        const Vector cd = failed ? Vector::Zero(static_cast<Eigen::Index>(fr.size())) : crowding_distance(fy);
        for (std::size_t r = 0; r < fr.size(); ++r) {
            out.rank[fr[r]] = static_cast<int>(f);
            out.crowd[fr[r]] = cd(static_cast<Eigen::Index>(r));
        }
    }
    if (fronts_out) *fronts_out = std::move(fronts);
    return out;
}

bool better(const Ranked& r, std::size_t a, std::size_t b) {
    if (r.rank[a] != r.rank[b]) return r.rank[a] < r.rank[b];
    return r.crowd[a] > r.crowd[b];
}

// Bounded SBX: the spread factor is drawn so that both children stay inside the box.
void sbx(Vector& c1, Vector& c2, const Bounds& b, double eta, Rng& rng) {
    for (Eigen::Index i = 0; i < c1.size(); ++i) {
        if (rng.uniform() > 0.5) continue;
        const double y1 = std::min(c1(i), c2(i));
        const double y2 = std::max(c1(i), c2(i));
        if (y2 - y1 < 1e-14) continue;
        const double lo = b.lower(i);
        const double hi = b.upper(i);
        const double u = rng.uniform();
        auto child = [&](double bound_gap) {
            const double beta = 1.0 + 2.0 * bound_gap / (y2 - y1);
            const double alpha = 2.0 - std::pow(beta, -(eta + 1.0));
            const double betaq = u <= 1.0 / alpha ? std::pow(u * alpha, 1.0 / (eta + 1.0))
                                                  : std::pow(1.0 / (2.0 - u * alpha), 1.0 / (eta + 1.0));
            return betaq;
        };
        const double lowq = child(y1 - lo);
        const double highq = child(hi - y2);
        double a = std::clamp(0.5 * ((y1 + y2) - lowq * (y2 - y1)), lo, hi);
        double c = std::clamp(0.5 * ((y1 + y2) + highq * (y2 - y1)), lo, hi);
        if (rng.uniform() < 0.5) std::swap(a, c);
        c1(i) = a;
        c2(i) = c;
    }
}

void polynomial_mutation(Vector& x, const Bounds& b, double eta, double rate, Rng& rng) {
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (rng.uniform() >= rate) continue;
        const double lo = b.lower(i);
        const double hi = b.upper(i);
        const double span = hi - lo;
        if (!(span > 0.0)) continue;
        const double d1 = (x(i) - lo) / span;
        const double d2 = (hi - x(i)) / span;
        const double u = rng.uniform();
        const double p = 1.0 / (eta + 1.0);
        double dq;
        if (u < 0.5) {
            const double v = 2.0 * u + (1.0 - 2.0 * u) * std::pow(1.0 - d1, eta + 1.0);
            dq = std::pow(v, p) - 1.0;
        } else {
            const double v = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * std::pow(1.0 - d2, eta + 1.0);
            dq = 1.0 - std::pow(v, p);
        }
        x(i) = std::clamp(x(i) + dq * span, lo, hi);
    }
}

} // namespace

GAResult nsga2_run(const ObjectiveProblem& f, const GAConfig& cfg) {
    cfg.validate();
    const auto M = static_cast<Eigen::Index>(f.solution_dim());
    const auto m = static_cast<Eigen::Index>(f.objective_dim());
    const auto n = static_cast<Eigen::Index>(cfg.population);
    const double rate = cfg.mutation_rate > 0.0 ? cfg.mutation_rate : 1.0 / static_cast<double>(M);
    const Bounds& b = f.bounds();
    Rng root(cfg.seed, "nsga2");
    Rng init = root.split("init");
    Rng select = root.split("selection");
    Rng vary = root.split("variation");

    GAResult res;
    Matrix xs(n, M);
    Matrix ys(n, m);
    std::vector<bool> ok(static_cast<std::size_t>(n));
    auto eval_into = [&](Matrix& X, Matrix& Y, std::vector<bool>& good, Eigen::Index row, const Vector& x) {
        X.row(row) = x.transpose();
        const Vector y = f.evaluate(x);
        Y.row(row) = y.transpose();
        good[static_cast<std::size_t>(row)] = y.allFinite();
        ++res.evaluations;
    };
    for (Eigen::Index j = 0; j < n; ++j) eval_into(xs, ys, ok, j, b.clamp(f.random_solution(init)));

    Ranked ranked = rank_population(ys, ok, nullptr);
    while (res.evaluations < cfg.max_evaluations) {
        const auto remaining = static_cast<Eigen::Index>(cfg.max_evaluations - res.evaluations);
        const Eigen::Index k = std::min(n, remaining);

        auto tournament = [&]() {
            const std::size_t a = select.index(static_cast<std::size_t>(n));
            const std::size_t c = select.index(static_cast<std::size_t>(n));
            return better(ranked, c, a) ? c : a;
        };
        Matrix cx(k, M);
        Matrix cy(k, m);
        std::vector<bool> cok(static_cast<std::size_t>(k));
        for (Eigen::Index r = 0; r < k; r += 2) {
            Vector c1 = xs.row(static_cast<Eigen::Index>(tournament())).transpose();
            Vector c2 = xs.row(static_cast<Eigen::Index>(tournament())).transpose();
            if (vary.uniform() < cfg.crossover_probability) sbx(c1, c2, b, cfg.crossover_eta, vary);
            polynomial_mutation(c1, b, cfg.mutation_eta, rate, vary);
            polynomial_mutation(c2, b, cfg.mutation_eta, rate, vary);
            eval_into(cx, cy, cok, r, c1);
            if (r + 1 < k) eval_into(cx, cy, cok, r + 1, c2);
        }

        Matrix ux(n + k, M);
        Matrix uy(n + k, m);
        ux << xs, cx;
        uy << ys, cy;
        std::vector<bool> uok(ok);
        uok.insert(uok.end(), cok.begin(), cok.end());

        std::vector<std::vector<std::size_t>> fronts;
        const Ranked ur = rank_population(uy, uok, &fronts);
        std::vector<std::size_t> chosen;
        for (const auto& fr : fronts) {
            if (chosen.size() + fr.size() <= static_cast<std::size_t>(n)) {
                chosen.insert(chosen.end(), fr.begin(), fr.end());
                continue;
            }
            std::vector<std::size_t> last(fr);
            std::stable_sort(last.begin(), last.end(),
                             [&](std::size_t a, std::size_t c) { return ur.crowd[a] > ur.crowd[c]; });
            last.resize(static_cast<std::size_t>(n) - chosen.size());
            chosen.insert(chosen.end(), last.begin(), last.end());
            break;
        }
        for (std::size_t r = 0; r < chosen.size(); ++r) {
            const auto src = static_cast<Eigen::Index>(chosen[r]);
            xs.row(static_cast<Eigen::Index>(r)) = ux.row(src);
            ys.row(static_cast<Eigen::Index>(r)) = uy.row(src);
            ok[r] = uok[chosen[r]];
        }
        ranked = rank_population(ys, ok, nullptr);
        ++res.generations;
    }

    res.population.xs = xs;
    res.population.ys = ys;
    res.population.feasible = ok;
    res.population.refresh_dominance();
    return res;
}

} // namespace magflow
