#pragma once

#include "magflow/geometry.hpp"

#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

namespace magflow {

/// A weighting component counts as positive only above this absolute threshold.
inline constexpr double kPositivityTolerance = 1e-10;
/// Solves whose condition estimate exceeds this are rejected as ill-conditioned.
inline constexpr double kMaxCondition = 1e12;
inline constexpr double kInfiniteOrder = std::numeric_limits<double>::infinity();

/// Solution of Z w = 1.
struct Weighting {
    Vector w;
    double t = 0.0;
    double magnitude = 0.0;
    bool all_positive = false;
    double condition = 1.0; // factorization diagonal-ratio estimate
};

struct MagnitudeSample {
    double t;
    double magnitude;
};

/// Magnitude function sampled on a log-spaced grid. Scales whose solve failed are listed
/// in `gaps` and omitted from `samples`.
struct MagnitudeProfile {
    std::vector<MagnitudeSample> samples;
    std::vector<double> gaps;
};

struct ScaleReport {
    double t_d = 0.0;
    double t_plus = 0.0;
    double lower_bound = 0.0;
    double upper_bound = 0.0;
};

struct DiversityDistribution {
    Vector p;
    std::vector<double> q_checked;
};

struct Spread {
    double e0 = 0.0;
    Vector a;
};

struct Erosion {
    std::vector<std::size_t> retained;
    Weighting weighting;
    std::size_t iterations = 0;
};

/// Cholesky first, pivoted LU as fallback. Throws IllConditioned when the condition
/// estimate exceeds kMaxCondition or the residual bound 1e-8 * n cannot be met.
Weighting solve_weighting(const ScaledSimilarity& z);

/// Solution of v Z = 1 (row vector), returned as a column.
Vector solve_coweighting(const ScaledSimilarity& z);

double magnitude_of(const ScaledSimilarity& z);

/// Convenience: magnitude of exp[-t d].
double magnitude_at(const DistanceMatrix& d, double t);

MagnitudeProfile magnitude_profile(const DistanceMatrix& d, double t_min, double t_max,
                                   std::size_t count);

/// Default grid: 64 samples over [t_plus / 10, 10 t_d] (n >= 3 with distinct points).
MagnitudeProfile magnitude_profile(const DistanceMatrix& d);

/// Diagonal cutoff by bisection inside a closed-form bracket. Fills t_d and the bracket.
/// Throws SingularPair on a zero off-diagonal distance.
ScaleReport diagonal_cutoff(const DistanceMatrix& d, double tol = 1e-6);

/// Smallest scale above which the weighting stays entrywise positive. Requires a report
/// produced by diagonal_cutoff; returns it with t_plus filled in. t_plus is 0 when the
/// weighting is positive down to numerical singularity and the zero-scale limit is positive.
ScaleReport positive_cutoff(const DistanceMatrix& d, ScaleReport report, double tol = 1e-6);

/// diagonal_cutoff followed by positive_cutoff.
ScaleReport scale_report(const DistanceMatrix& d, double tol = 1e-6);

/// Limit of w(t) as t -> 0: d^{-1} 1 / (1^T d^{-1} 1).
Vector zero_scale_weighting(const DistanceMatrix& d);

/// Exponential of the similarity-sensitive Renyi-type entropy of order q in [0, inf].
double diversity_order_q(const ScaledSimilarity& z, const Vector& p, double q);

/// p = w / sum(w) for a positive weighting, with the q-independence of its diversity
/// verified over {0, 1, 2, inf}. Throws Error if the weighting is not positive.
DiversityDistribution maximizing_distribution(const ScaledSimilarity& z);

/// a_j = 1 / sum_k exp(-t d_jk) (self term included); e0 = sum_j a_j.
Spread spread(const DistanceMatrix& d, double t);

/// Repeatedly drops indices whose weighting component is not positive, re-solving on the
/// remainder, until the weighting is positive.
Erosion erode(const DistanceMatrix& d, double t);

} // namespace magflow
