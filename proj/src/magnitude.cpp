#include "magflow/magnitude.hpp"

#include "magflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace magflow {

namespace {

// Factorization of a similarity matrix with a diagonal-ratio condition estimate.
class SimilaritySolver {
public:
    explicit SimilaritySolver(const Matrix& z) : z_(z) {
        llt_.compute(z);
        if (llt_.info() == Eigen::Success) {
            const auto diag = llt_.matrixLLT().diagonal().cwiseAbs();
            const double ratio = diag.maxCoeff() / diag.minCoeff();
            condition_ = ratio * ratio;
            use_llt_ = true;
        } else {
            lu_.compute(z);
            const auto diag = lu_.matrixLU().diagonal().cwiseAbs();
            const double lo = diag.minCoeff();
            condition_ = lo > 0.0 ? diag.maxCoeff() / lo : std::numeric_limits<double>::infinity();
        }
        if (!(condition_ <= kMaxCondition)) {
            throw IllConditioned("similarity matrix is ill-conditioned (condition estimate " +
                                     std::to_string(condition_) + ")",
                                 condition_);
        }
    }

    // Solve with one step of iterative refinement if the residual bound is not met.
    [[nodiscard]] Vector solve(const Vector& rhs, bool transpose = false) const {
        const auto n = static_cast<double>(z_.rows());
        Vector x = apply(rhs, transpose);
        Vector r = rhs - product(x, transpose);
        if (r.cwiseAbs().maxCoeff() > 1e-8 * n) {
            x += apply(r, transpose);
            r = rhs - product(x, transpose);
        }
        if (!x.allFinite() || r.cwiseAbs().maxCoeff() > 1e-8 * n) {
            throw IllConditioned("weighting residual exceeds tolerance", condition_);
        }
        return x;
    }

    [[nodiscard]] double condition() const noexcept { return condition_; }

private:
    [[nodiscard]] Vector apply(const Vector& rhs, bool transpose) const {
        if (use_llt_) return llt_.solve(rhs); // symmetric
        return transpose ? Vector(lu_.transpose().solve(rhs)) : Vector(lu_.solve(rhs));
    }
    [[nodiscard]] Vector product(const Vector& x, bool transpose) const {
        return transpose ? Vector(z_.transpose() * x) : Vector(z_ * x);
    }

    const Matrix& z_;
    Eigen::LLT<Matrix> llt_;
    Eigen::PartialPivLU<Matrix> lu_;
    bool use_llt_ = false;
    double condition_ = 1.0;
};

void require_probability(const Vector& p, std::size_t n) {
    if (static_cast<std::size_t>(p.size()) != n) {
        throw std::invalid_argument("probability vector has wrong length");
    }
    if (!p.allFinite() || p.minCoeff() < 0.0) {
        throw std::invalid_argument("probability vector has a negative or non-finite entry");
    }
    if (std::abs(p.sum() - 1.0) > 1e-8) {
        throw std::invalid_argument("probability vector does not sum to 1");
    }
}

bool weighting_positive_at(const DistanceMatrix& d, double t) {
    try {
        return solve_weighting(similarity(d, t)).all_positive;
    } catch (const Error&) {
        return false;
    }
}

bool zero_scale_positive(const DistanceMatrix& d) {
    try {
        return (zero_scale_weighting(d).array() > kPositivityTolerance).all();
    } catch (const Error&) {
        return false;
    }
}

} // namespace

Weighting solve_weighting(const ScaledSimilarity& z) {
    const auto n = z.values().rows();
    SimilaritySolver solver(z.values());
    Weighting out;
    out.w = solver.solve(Vector::Ones(n));
    out.t = z.scale();
    out.magnitude = out.w.sum();
    out.all_positive = out.w.minCoeff() > kPositivityTolerance;
    out.condition = solver.condition();
    return out;
}

Vector solve_coweighting(const ScaledSimilarity& z) {
    SimilaritySolver solver(z.values());
    return solver.solve(Vector::Ones(z.values().rows()), /*transpose=*/true);
}

double magnitude_of(const ScaledSimilarity& z) { return solve_weighting(z).magnitude; }

double magnitude_at(const DistanceMatrix& d, double t) { return magnitude_of(similarity(d, t)); }

MagnitudeProfile magnitude_profile(const DistanceMatrix& d, double t_min, double t_max,
                                   std::size_t count) {
    if (!(t_min > 0.0) || !(t_max > t_min) || !std::isfinite(t_max)) {
        throw std::invalid_argument("magnitude_profile: need 0 < t_min < t_max");
    }
    if (count < 2) throw std::invalid_argument("magnitude_profile: need at least two samples");
    MagnitudeProfile profile;
    const double log_lo = std::log(t_min);
    const double step = (std::log(t_max) - log_lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = i + 1 == count ? t_max : std::exp(log_lo + step * static_cast<double>(i));
        try {
            const double mag = magnitude_at(d, t);
            if (std::isfinite(mag)) {
                profile.samples.push_back({t, mag});
                continue;
            }
        } catch (const Error&) {
        }
        profile.gaps.push_back(t);
    }
    return profile;
}

MagnitudeProfile magnitude_profile(const DistanceMatrix& d) {
    const auto n = d.size();
    if (n < 2) return magnitude_profile(d, 1e-2, 1e2, 64);
    const ScaleReport scales = scale_report(d);
    double hi = 10.0 * scales.t_d;
    double lo = scales.t_plus / 10.0;
    if (!(hi > 0.0)) hi = 100.0 / d.min_off_diagonal();
    if (!(lo > 0.0)) lo = hi * 1e-5;
    return magnitude_profile(d, lo, hi, 64);
}

ScaleReport diagonal_cutoff(const DistanceMatrix& d, double tol) {
    const auto n = d.size();
    if (n < 2) throw std::invalid_argument("diagonal_cutoff: need at least two points");
    if (!(tol > 0.0)) throw std::invalid_argument("diagonal_cutoff: tolerance must be positive");
    const Matrix& dv = d.values();
    const auto nn = static_cast<Eigen::Index>(n);

    double min_row_max = std::numeric_limits<double>::infinity();
    double min_off = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < nn; ++j) {
        double row_max = 0.0;
        for (Eigen::Index k = 0; k < nn; ++k) {
            if (k == j) continue;
            if (dv(j, k) == 0.0) {
                throw SingularPair(static_cast<std::size_t>(std::min(j, k)),
                                   static_cast<std::size_t>(std::max(j, k)));
            }
            row_max = std::max(row_max, dv(j, k));
            min_off = std::min(min_off, dv(j, k));
        }
        min_row_max = std::min(min_row_max, row_max);
    }

    ScaleReport report;
    const double log_n1 = std::log(static_cast<double>(n - 1));
    report.lower_bound = log_n1 / min_row_max;
    report.upper_bound = log_n1 / min_off;

    // Largest off-diagonal row sum minus one; decreasing in t.
    const auto excess = [&](double t) {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < nn; ++j) {
            double s = 0.0;
            for (Eigen::Index k = 0; k < nn; ++k) {
                if (k != j) s += std::exp(-t * dv(j, k));
            }
            worst = std::max(worst, s);
        }
        return worst - 1.0;
    };

    double lo = report.lower_bound;
    double hi = report.upper_bound;
    while (hi - lo > tol * hi) {
        const double mid = 0.5 * (lo + hi);
        if (excess(mid) >= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    report.t_d = hi;
    return report;
}

ScaleReport positive_cutoff(const DistanceMatrix& d, ScaleReport report, double tol) {
    const auto n = d.size();
    if (n <= 2) {
        // One point: w = 1. Two points: w = 1 / (1 + e^{-td}) > 0 for every t.
        report.t_plus = 0.0;
        return report;
    }
    const double t_d = report.t_d;
    if (!weighting_positive_at(d, t_d)) {
        throw Error("positive_cutoff: weighting not positive at the diagonal cutoff");
    }

    const double floor = t_d * 1e-12;
    double hi = t_d;
    double lo = 0.5 * t_d;
    bool solvable = true;
    while (lo > floor) {
        try {
            if (!solve_weighting(similarity(d, lo)).all_positive) break;
        } catch (const Error&) {
            solvable = false;
            break;
        }
        hi = lo;
        lo *= 0.5;
    }
    // Positive down to where Z becomes numerically singular: defer to the zero-scale limit.
    if (!solvable && zero_scale_positive(d)) lo = 0.0;
    if (lo <= floor) {
        report.t_plus = 0.0;
        return report;
    }

    constexpr int kProbes = 32;
    constexpr int kMaxRounds = 16;
    for (int round = 0; round < kMaxRounds; ++round) {
        while (hi - lo > tol * hi) {
            const double mid = 0.5 * (lo + hi);
            if (weighting_positive_at(d, mid)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // Validate on a log grid in (hi, t_d]; restart above the highest failing probe.
        const double ratio = std::log(t_d / hi);
        int last_fail = -1;
        std::vector<double> probes(kProbes + 1);
        probes[0] = hi;
        for (int i = 1; i <= kProbes; ++i) {
            probes[static_cast<std::size_t>(i)] =
                i == kProbes ? t_d : hi * std::exp(ratio * i / kProbes);
            if (!weighting_positive_at(d, probes[static_cast<std::size_t>(i)])) last_fail = i;
        }
        if (last_fail < 0) {
            report.t_plus = hi;
            return report;
        }
        lo = probes[static_cast<std::size_t>(last_fail)];
        hi = probes[static_cast<std::size_t>(last_fail + 1)];
    }
    throw Error("positive_cutoff: positivity is not monotone below the diagonal cutoff");
}

ScaleReport scale_report(const DistanceMatrix& d, double tol) {
    return positive_cutoff(d, diagonal_cutoff(d, tol), tol);
}

Vector zero_scale_weighting(const DistanceMatrix& d) {
    const Matrix& dv = d.values();
    Eigen::PartialPivLU<Matrix> lu(dv);
    const auto diag = lu.matrixLU().diagonal().cwiseAbs();
    const double lo = diag.minCoeff();
    const double cond = lo > 0.0 ? diag.maxCoeff() / lo : std::numeric_limits<double>::infinity();
    if (!(cond < kMaxCondition)) {
        throw IllConditioned("zero_scale_weighting: distance matrix is singular", cond);
    }
    const Vector v = lu.solve(Vector::Ones(dv.rows()));
    const double total = v.sum();
    if (total == 0.0 || !std::isfinite(total)) {
        throw IllConditioned("zero_scale_weighting: 1^T d^{-1} 1 vanishes", cond);
    }
    return v / total;
}

double diversity_order_q(const ScaledSimilarity& z, const Vector& p, double q) {
    if (std::isnan(q) || q < 0.0) throw std::invalid_argument("diversity_order_q: order must be >= 0");
    require_probability(p, z.size());
    const Vector zp = z.values() * p;

    if (std::isinf(q)) {
        double worst = 0.0;
        for (Eigen::Index j = 0; j < p.size(); ++j) {
            if (p(j) > 0.0) worst = std::max(worst, zp(j));
        }
        return 1.0 / worst;
    }
    if (q == 1.0) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < p.size(); ++j) {
            if (p(j) > 0.0) s += p(j) * std::log(zp(j));
        }
        return std::exp(-s);
    }
    double s = 0.0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        if (p(j) > 0.0) s += p(j) * std::pow(zp(j), q - 1.0);
    }
    return std::exp(std::log(s) / (1.0 - q));
}

DiversityDistribution maximizing_distribution(const ScaledSimilarity& z) {
    const Weighting w = solve_weighting(z);
    if (!w.all_positive) throw Error("maximizing_distribution: weighting is not positive");
    DiversityDistribution out;
    out.p = w.w / w.magnitude;
    for (const double q : {0.0, 1.0, 2.0, kInfiniteOrder}) {
        const double div = diversity_order_q(z, out.p, q);
        if (std::abs(div - w.magnitude) > 1e-6 * w.magnitude) {
            throw Error("maximizing_distribution: diversity depends on q");
        }
        out.q_checked.push_back(q);
    }
    return out;
}

Spread spread(const DistanceMatrix& d, double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("spread: scale must be positive");
    Spread out;
    out.a = (-t * d.values().array()).exp().matrix().rowwise().sum().cwiseInverse();
    out.e0 = out.a.sum();
    return out;
}

Erosion erode(const DistanceMatrix& d, double t) {
    const auto n = d.size();
    Erosion out;
    out.retained.resize(n);
    for (std::size_t j = 0; j < n; ++j) out.retained[j] = j;
    for (std::size_t iter = 1; iter <= n; ++iter) {
        out.iterations = iter;
        out.weighting = solve_weighting(similarity(d.subset(out.retained), t));
        if (out.weighting.all_positive) return out;
        std::vector<std::size_t> keep;
        for (std::size_t r = 0; r < out.retained.size(); ++r) {
            if (out.weighting.w(static_cast<Eigen::Index>(r)) > kPositivityTolerance) {
                keep.push_back(out.retained[r]);
            }
        }
        if (keep.empty()) throw Error("erode: every point was eroded");
        out.retained = std::move(keep);
    }
    throw Error("erode: no positive weighting within n iterations");
}

} // namespace magflow
