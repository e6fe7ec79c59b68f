#include "magflow/problems.hpp"

#include "magflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace magflow {

// ---------------------------------------------------------------------------
// ObjectiveProblem, Population

bool Bounds::contains(const Vector& x) const {
    if (x.size() != lower.size()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (!(x(i) >= lower(i) && x(i) <= upper(i))) return false;
    }
    return true;
}

Vector Bounds::clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

ObjectiveProblem::ObjectiveProblem(std::string name, std::size_t solution_dim,
                                   std::size_t objective_dim, Bounds bounds, Evaluator evaluate,
                                   FrontSampler front, SolutionSampler initial)
    : name_(std::move(name)), solution_dim_(solution_dim), objective_dim_(objective_dim),
      bounds_(std::move(bounds)), evaluate_(std::move(evaluate)), front_(std::move(front)),
      initial_(std::move(initial)) {
    if (static_cast<std::size_t>(bounds_.lower.size()) != solution_dim_ ||
        static_cast<std::size_t>(bounds_.upper.size()) != solution_dim_) {
        throw std::invalid_argument("ObjectiveProblem: bounds do not match solution dimension");
    }
}

Vector ObjectiveProblem::evaluate(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != solution_dim_) {
        throw std::invalid_argument("ObjectiveProblem::evaluate: dimension mismatch");
    }
    return evaluate_(x);
}

Matrix ObjectiveProblem::pareto_front(std::size_t count, std::uint64_t seed) const {
    Rng rng(seed, "pareto_front/" + name_);
    return front_(count, rng);
}

Vector ObjectiveProblem::random_solution(Rng& rng) const {
    if (initial_) return initial_(rng);
    Vector x(static_cast<Eigen::Index>(solution_dim_));
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(bounds_.lower(i), bounds_.upper(i));
    return x;
}

Population Population::evaluate(const ObjectiveProblem& f, Matrix xs) {
    Population pop;
    const auto n = xs.rows();
    pop.ys.resize(n, static_cast<Eigen::Index>(f.objective_dim()));
    pop.feasible.assign(static_cast<std::size_t>(n), true);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Vector x = xs.row(j).transpose();
        const Vector y = f.evaluate(x);
        pop.ys.row(j) = y.transpose();
        pop.feasible[static_cast<std::size_t>(j)] = f.bounds().contains(x) && y.allFinite();
    }
    pop.xs = std::move(xs);
    pop.refresh_dominance();
    return pop;
}

void Population::refresh_dominance() { dom = dominance_counts(ys); }

std::vector<std::size_t> Population::nondominated() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < dom.size(); ++j) {
        if (dom[j] == 0) out.push_back(j);
    }
    return out;
}

std::size_t Population::nondominated_count() const {
    return static_cast<std::size_t>(std::count(dom.begin(), dom.end(), 0));
}

// ---------------------------------------------------------------------------
// Dominance, filtering, IGD

bool dominates(const Vector& a, const Vector& b) {
    bool strict = false;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a(i) > b(i)) return false;
        if (a(i) < b(i)) strict = true;
    }
    return strict;
}

namespace {

bool row_dominates(const Matrix& ys, Eigen::Index a, Eigen::Index b) {
    bool strict = false;
    for (Eigen::Index i = 0; i < ys.cols(); ++i) {
        if (ys(a, i) > ys(b, i)) return false;
        if (ys(a, i) < ys(b, i)) strict = true;
    }
    return strict;
}

// Mutually nondominated rows of `candidates`, thinned to at most `count` by even stride.
Matrix nondominated_subsample(const Matrix& candidates, std::size_t count) {
    const auto dom = dominance_counts(candidates);
    std::vector<Eigen::Index> keep;
    for (std::size_t j = 0; j < dom.size(); ++j) {
        if (dom[j] == 0) keep.push_back(static_cast<Eigen::Index>(j));
    }
    const std::size_t out_n = std::min(count, keep.size());
    Matrix out(static_cast<Eigen::Index>(out_n), candidates.cols());
    for (std::size_t r = 0; r < out_n; ++r) {
        out.row(static_cast<Eigen::Index>(r)) = candidates.row(keep[r * keep.size() / out_n]);
    }
    return out;
}

} // namespace

std::vector<int> dominance_counts(const Matrix& ys) {
    const auto n = ys.rows();
    std::vector<int> dom(static_cast<std::size_t>(n), 0);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = j + 1; k < n; ++k) {
            if (row_dominates(ys, k, j)) {
                ++dom[static_cast<std::size_t>(j)];
            } else if (row_dominates(ys, j, k)) {
                ++dom[static_cast<std::size_t>(k)];
            }
        }
    }
    return dom;
}

std::vector<std::size_t> delta_dominance_filter(const Matrix& ys, double delta) {
    if (std::isnan(delta) || delta < 0.0) throw std::invalid_argument("delta_dominance_filter: delta must be >= 0");
    const auto n = ys.rows();
    std::vector<std::size_t> keep;
    for (Eigen::Index j = 0; j < n; ++j) {
        bool dropped = false;
        for (Eigen::Index k = 0; k < n && !dropped; ++k) {
            if (k == j) continue;
            bool all = true;
            for (Eigen::Index i = 0; i < ys.cols(); ++i) {
                if (!(ys(k, i) + delta < ys(j, i))) {
                    all = false;
                    break;
                }
            }
            if (all) dropped = true;
        }
        if (!dropped) keep.push_back(static_cast<std::size_t>(j));
    }
    return keep;
}

double igd(const Matrix& xs, const Matrix& reference) {
    if (xs.rows() == 0 || reference.rows() == 0) throw std::invalid_argument("igd: empty point set");
    if (xs.cols() != reference.cols()) throw std::invalid_argument("igd: dimension mismatch");
    double total = 0.0;
    for (Eigen::Index r = 0; r < reference.rows(); ++r) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < xs.rows(); ++j) {
            best = std::min(best, (xs.row(j) - reference.row(r)).squaredNorm());
        }
        total += std::sqrt(best);
    }
    return total / static_cast<double>(reference.rows());
}

// ---------------------------------------------------------------------------
// Polygon toys

ObjectiveProblem polygon_problem(std::size_t k) {
    if (k < 3) throw std::invalid_argument("polygon_problem: need at least 3 vertices");
    Matrix vertices(static_cast<Eigen::Index>(k), 2);
    for (std::size_t i = 0; i < k; ++i) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
        vertices(static_cast<Eigen::Index>(i), 0) = std::cos(angle);
        vertices(static_cast<Eigen::Index>(i), 1) = std::sin(angle);
    }
    auto evaluate = [vertices](const Vector& x) {
        Vector y(vertices.rows());
        for (Eigen::Index i = 0; i < vertices.rows(); ++i) {
            y(i) = (x - vertices.row(i).transpose()).norm();
        }
        return y;
    };
    // Uniform in the convex hull: pick one of k congruent fan triangles, then a uniform
    // point inside it.
    auto front = [vertices, evaluate, k](std::size_t count, Rng& rng) {
        Matrix out(static_cast<Eigen::Index>(count), vertices.rows());
        for (std::size_t r = 0; r < count; ++r) {
            const auto i = static_cast<Eigen::Index>(rng.index(k));
            const Eigen::Index i1 = (i + 1) % vertices.rows();
            double a = rng.uniform();
            double b = rng.uniform();
            if (a + b > 1.0) {
                a = 1.0 - a;
                b = 1.0 - b;
            }
            const Vector x = a * vertices.row(i).transpose() + b * vertices.row(i1).transpose();
            out.row(static_cast<Eigen::Index>(r)) = evaluate(x).transpose();
        }
        return out;
    };
    constexpr double kRadius = 1.25;
    auto initial = [](Rng& rng) {
        const double r = kRadius * std::sqrt(rng.uniform());
        const double angle = 2.0 * std::numbers::pi * rng.uniform();
        Vector x(2);
        x << r * std::cos(angle), r * std::sin(angle);
        return x;
    };
    Bounds bounds{Vector::Constant(2, -kRadius), Vector::Constant(2, kRadius)};
    const std::string name = k == 3 ? "tri" : k == 12 ? "dodeca" : "polygon" + std::to_string(k);
    return ObjectiveProblem(name, 2, k, std::move(bounds), evaluate, front, initial);
}

// ---------------------------------------------------------------------------
// DTLZ

ObjectiveProblem dtlz_problem(int which, std::size_t solution_dim, std::size_t objective_dim) {
    if (which != 4 && which != 7) throw std::invalid_argument("dtlz_problem: only DTLZ4 and DTLZ7 are supported");
    if (objective_dim < 2 || solution_dim < objective_dim) {
        throw std::invalid_argument("dtlz_problem: need M >= m >= 2");
    }
    const auto M = static_cast<Eigen::Index>(solution_dim);
    const auto m = static_cast<Eigen::Index>(objective_dim);
    Bounds bounds{Vector::Zero(M), Vector::Ones(M)};
    constexpr double kHalfPi = std::numbers::pi / 2.0;

    if (which == 4) {
        constexpr double kAlpha = 100.0;
        auto evaluate = [m, M](const Vector& x) {
            double g = 0.0;
            for (Eigen::Index i = m - 1; i < M; ++i) g += (x(i) - 0.5) * (x(i) - 0.5);
            Vector y(m);
            for (Eigen::Index obj = 0; obj < m; ++obj) {
                double v = 1.0 + g;
                for (Eigen::Index i = 0; i < m - 1 - obj; ++i) v *= std::cos(std::pow(x(i), kAlpha) * kHalfPi);
                if (obj > 0) v *= std::sin(std::pow(x(m - 1 - obj), kAlpha) * kHalfPi);
                y(obj) = v;
            }
            return y;
        };
        // Front: positive orthant of the unit sphere.
        auto front = [m](std::size_t count, Rng& rng) {
            Matrix out(static_cast<Eigen::Index>(count), m);
            for (std::size_t r = 0; r < count; ++r) {
                Vector v(m);
                for (Eigen::Index i = 0; i < m; ++i) v(i) = std::abs(rng.normal());
                out.row(static_cast<Eigen::Index>(r)) = v.normalized().transpose();
            }
            return out;
        };
        return ObjectiveProblem("dtlz4", solution_dim, objective_dim, std::move(bounds), evaluate, front);
    }

    auto evaluate = [m, M](const Vector& x) {
        const auto k = static_cast<double>(M - m + 1);
        double g = 0.0;
        for (Eigen::Index i = m - 1; i < M; ++i) g += x(i);
        g = 1.0 + 9.0 / k * g;
        Vector y(m);
        double h = static_cast<double>(m);
        for (Eigen::Index i = 0; i < m - 1; ++i) {
            y(i) = x(i);
            h -= y(i) / (1.0 + g) * (1.0 + std::sin(3.0 * std::numbers::pi * y(i)));
        }
        y(m - 1) = (1.0 + g) * h;
        return y;
    };
    // h is separable, so a point is Pareto optimal exactly when every x_i is a running record of
    // phi(x) = x (1 + sin 3 pi x): the set [0, a] u [b, c] with a, c the two local maxima and
    // phi(b) = phi(a).
    const auto slope = [](double x) {
        const double a = 3.0 * std::numbers::pi * x;
        return 1.0 + std::sin(a) + a * std::cos(a);
    };
    const auto phi = [](double x) { return x * (1.0 + std::sin(3.0 * std::numbers::pi * x)); };
    const auto bisect = [](auto&& fn, double lo, double hi) {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (fn(lo) > 0.0) == (fn(mid) > 0.0) ? lo = mid : hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    const double first_peak = bisect(slope, 0.15, 1.0 / 3.0);
    const double second_peak = bisect(slope, 0.75, 0.95);
    const double reentry = bisect([&](double x) { return phi(x) - phi(first_peak); }, 0.5, second_peak);
    const auto optimal = [=](double x) { return x <= first_peak || (x >= reentry && x <= second_peak); };

    // Uniform in surface area: rejection on the area element of y_m over the optimal boxes.
    auto front = [m, M, evaluate, optimal](std::size_t count, Rng& rng) {
        const double slope_bound = 2.0 + 3.0 * std::numbers::pi;
        const double element_bound = std::sqrt(1.0 + static_cast<double>(m - 1) * slope_bound * slope_bound);
        Matrix out(static_cast<Eigen::Index>(count), m);
        for (std::size_t r = 0; r < count;) {
            Vector x = Vector::Zero(M); // tail at zero gives g = 1
            double grad2 = 0.0;
            bool keep = true;
            for (Eigen::Index i = 0; i < m - 1 && keep; ++i) {
                x(i) = rng.uniform();
                keep = optimal(x(i));
                const double a = 3.0 * std::numbers::pi * x(i);
                const double slope = 1.0 + std::sin(a) + a * std::cos(a);
                grad2 += slope * slope;
            }
            if (!keep || rng.uniform() * element_bound > std::sqrt(1.0 + grad2)) continue;
            out.row(static_cast<Eigen::Index>(r++)) = evaluate(x).transpose();
        }
        return out;
    };
    return ObjectiveProblem("dtlz7", solution_dim, objective_dim, std::move(bounds), evaluate, front);
}

ObjectiveProblem identity_problem(std::size_t dim, double lo, double hi) {
    if (dim == 0 || !(lo < hi)) throw std::invalid_argument("identity_problem: empty box");
    const auto d = static_cast<Eigen::Index>(dim);
    Bounds bounds{Vector::Constant(d, lo), Vector::Constant(d, hi)};
    auto front = [d, lo](std::size_t count, Rng&) {
        return Matrix(Matrix::Constant(count > 0 ? 1 : 0, d, lo));
    };
    return ObjectiveProblem("identity", dim, dim, std::move(bounds), [](const Vector& x) { return x; }, front);
}

// ---------------------------------------------------------------------------
// WFG

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

double s_linear(double y, double a) { return clamp01(std::abs(y - a) / std::abs(std::floor(a - y) + a)); }

double r_nonsep(std::span<const double> y, std::size_t a) {
    const std::size_t n = y.size();
    double num = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        num += y[j];
        for (std::size_t k = 0; k + 2 <= a; ++k) num += std::abs(y[j] - y[(j + k + 1) % n]);
    }
    const double half = std::ceil(static_cast<double>(a) / 2.0);
    const double den = static_cast<double>(n) / static_cast<double>(a) * half *
                       (1.0 + 2.0 * static_cast<double>(a) - 2.0 * half);
    return clamp01(num / den);
}

double mean(std::span<const double> y) {
    double s = 0.0;
    for (double v : y) s += v;
    return s / static_cast<double>(y.size());
}

} // namespace

ObjectiveProblem wfg_problem(int which, std::size_t solution_dim, std::size_t objective_dim,
                             std::size_t position_params) {
    if (which != 2 && which != 3) throw std::invalid_argument("wfg_problem: only WFG2 and WFG3 are supported");
    const std::size_t m = objective_dim;
    const std::size_t k = position_params;
    if (m < 2 || k < 1 || k % (m - 1) != 0 || solution_dim <= k || (solution_dim - k) % 2 != 0) {
        throw std::invalid_argument("wfg_problem: need k a multiple of m-1 and an even number of distance parameters");
    }
    const std::size_t n = solution_dim;
    const std::size_t l = n - k;
    const bool degenerate = which == 3;
    constexpr double kHalfPi = std::numbers::pi / 2.0;

    Vector upper(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) upper(static_cast<Eigen::Index>(i)) = 2.0 * static_cast<double>(i + 1);
    Bounds bounds{Vector::Zero(static_cast<Eigen::Index>(n)), upper};

    auto evaluate = [=](const Vector& z) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = clamp01(z(static_cast<Eigen::Index>(i)) / (2.0 * static_cast<double>(i + 1)));
        // t1: shift distance parameters.
        for (std::size_t i = k; i < n; ++i) y[i] = s_linear(y[i], 0.35);
        // t2: non-separable reduction of distance parameter pairs.
        std::vector<double> t2(k + l / 2);
        for (std::size_t i = 0; i < k; ++i) t2[i] = y[i];
        for (std::size_t i = 0; i < l / 2; ++i) {
            const double pair[2] = {y[k + 2 * i], y[k + 2 * i + 1]};
            t2[k + i] = r_nonsep(pair, 2);
        }
        // t3: weighted sums (unit weights) into m values.
        std::vector<double> t(m);
        const std::size_t group = k / (m - 1);
        const std::span<const double> all(t2);
        for (std::size_t i = 0; i + 1 < m; ++i) t[i] = mean(all.subspan(i * group, group));
        t[m - 1] = mean(all.subspan(k, l / 2));

        std::vector<double> x(m);
        x[m - 1] = t[m - 1];
        for (std::size_t i = 0; i + 1 < m; ++i) {
            const double a = degenerate && i > 0 ? 0.0 : 1.0;
            x[i] = clamp01(std::max(t[m - 1], a) * (t[i] - 0.5) + 0.5);
        }

        Vector f(static_cast<Eigen::Index>(m));
        for (std::size_t obj = 0; obj < m; ++obj) {
            double h = 1.0;
            if (degenerate) {
                if (obj + 1 == m) {
                    h = 1.0 - x[0];
                } else {
                    for (std::size_t j = 0; j + 1 + obj < m; ++j) h *= x[j];
                    if (obj > 0) h *= 1.0 - x[m - 1 - obj];
                }
            } else {
                if (obj + 1 == m) {
                    const double c = std::cos(5.0 * std::numbers::pi * x[0]);
                    h = 1.0 - x[0] * c * c;
                } else {
                    for (std::size_t j = 0; j + 1 + obj < m; ++j) h *= 1.0 - std::cos(x[j] * kHalfPi);
                    if (obj > 0) h *= 1.0 - std::sin(x[m - 1 - obj] * kHalfPi);
                }
            }
            f(static_cast<Eigen::Index>(obj)) = x[m - 1] + 2.0 * static_cast<double>(obj + 1) * h;
        }
        return f;
    };

    // Pareto set: distance parameters at 0.35 of their range. Position parameters share one
    // uniform value per group so that each reduced shape parameter is itself uniform.
    auto front = [=](std::size_t count, Rng& rng) {
        const std::size_t pool = 4 * count;
        const std::size_t group = k / (m - 1);
        Matrix cand(static_cast<Eigen::Index>(pool), static_cast<Eigen::Index>(m));
        for (std::size_t r = 0; r < pool; ++r) {
            Vector z(static_cast<Eigen::Index>(n));
            double u = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double range = 2.0 * static_cast<double>(i + 1);
                if (i < k && i % group == 0) u = rng.uniform();
                z(static_cast<Eigen::Index>(i)) = i < k ? u * range : 0.35 * range;
            }
            cand.row(static_cast<Eigen::Index>(r)) = evaluate(z).transpose();
        }
        return nondominated_subsample(cand, count);
    };
    return ObjectiveProblem(degenerate ? "wfg3" : "wfg2", n, m, std::move(bounds), evaluate, front);
}

const std::vector<std::string>& problem_names() {
    static const std::vector<std::string> names{"tri", "dodeca", "dtlz4", "dtlz7", "wfg2", "wfg3"};
    return names;
}

ObjectiveProblem make_problem(const std::string& name) {
    if (name == "tri") return polygon_problem(3);
    if (name == "dodeca") return polygon_problem(12);
    if (name == "dtlz4") return dtlz_problem(4);
    if (name == "dtlz7") return dtlz_problem(7);
    if (name == "wfg2") return wfg_problem(2);
    if (name == "wfg3") return wfg_problem(3);
    throw std::invalid_argument("unknown problem '" + name + "'");
}

} // namespace magflow
