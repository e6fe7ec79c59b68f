#pragma once

#include "magflow/geometry.hpp"
#include "magflow/problem.hpp"
#include "magflow/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace magflow {

/// Random perturbations delta x ~ N(mu, Sigma) with Sigma = diag(|mu|, delta_j, ..., delta_j)
/// in an orthonormal basis whose first vector is mu (isotropic delta_j when mu = 0).
struct PerturbationModel {
    /// Draws a perturbation for point j given its mean direction mu.
    using Sampler = std::function<Vector(std::size_t j, const Vector& mu, Rng& rng)>;

    Vector delta;            // delta_j = min_{k != j} |x_j - x_k| / 2, solution space
    double step_scale = 0.0; // delta s
    Sampler sampler;         // empty: the Gaussian above

    /// delta_j from the solution points; delta s = delta d / (2 <|grad w|>) with delta d the
    /// mean nearest-neighbour distance among the objective points (zeros excluded) and the
    /// gradient taken at scale t.
    static PerturbationModel calibrate(const Population& pop, double t);

    [[nodiscard]] Vector sample(std::size_t j, const Vector& mu, Rng& rng) const;
};

/// Orthonormal basis (columns) with first column a / |a|, by Householder reflection.
Matrix basis_with_first(const Vector& a);

/// E_j = ceil(C |g_j| / sum_k |g_k|). Throws std::invalid_argument when every norm is zero.
std::vector<std::size_t> effort(std::span<const double> grad_norms, double c);

struct StochasticStepReport {
    Vector step_lengths; // |delta x| applied per point, 0 when unchanged
    std::size_t evaluations = 0;
    std::size_t unchanged = 0;
};

/// One stochastic pullback step at scale t: each point j draws candidates[j] perturbations,
/// keeps the one whose image is closest to f(x_j) + delta s (grad w)_j, and moves there.
/// Candidates out of bounds or evaluating non-finite are discarded; a point with no valid
/// candidate (or zero candidates) stays put.
Population stochastic_flow_step(const ObjectiveProblem& f, const Population& pop,
                                const PerturbationModel& model, std::span<const std::size_t> candidates,
                                double t, Rng& rng, StochasticStepReport* report = nullptr);

inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

/// Accept if mu_new >= mu, else with probability exp(-beta (mu - mu_new)).
bool metropolis_accept(double mu, double mu_new, double beta, Rng& rng);

/// Proposal for replacing point j of `points`; nullopt when no candidate remains.
using Proposal = std::function<std::optional<Vector>(const Matrix& points, std::size_t j, Rng& rng)>;

struct MHStep {
    Matrix points;
    double magnitude = 0.0; // after the step
    bool accepted = false;
    std::size_t index = 0;  // the replaced (or considered) point
};

/// Metropolis-Hastings step on the magnitude at the fixed scale t: the least-weight point
/// (lowest index on ties) is offered a proposal. Proposals already in the set are rejected.
/// Throws Error when the proposal is exhausted.
MHStep mh_magnitude_step(const Matrix& points, const Proposal& proposal, double t, double beta, Rng& rng);

/// Integer lattice sites {0, ..., side-1}^2 as a finite ground set.
class LatticeGroundSet {
public:
    explicit LatticeGroundSet(std::size_t side);

    [[nodiscard]] std::size_t size() const noexcept { return side_ * side_; }
    [[nodiscard]] Vector site(std::size_t i) const;
    [[nodiscard]] std::size_t index_of(const Vector& x) const; // size() when not a site

    /// `count` distinct sites, uniformly without replacement.
    [[nodiscard]] Matrix sample(std::size_t count, Rng& rng) const;

    /// `count` distinct sites not occupied by `points`; fewer if the ground set runs out.
    [[nodiscard]] std::vector<Vector> outside(const Matrix& points, std::size_t count, Rng& rng) const;

    /// Proposal drawing a single unoccupied site.
    [[nodiscard]] Proposal proposal() const;

private:
    std::size_t side_;
};

struct MHConfig {
    double beta = kInfiniteBeta;
    std::size_t steps = 200;
    std::size_t selected = 10;   // least-weight points considered per step
    std::size_t candidates = 10; // candidates per selected point
    std::uint64_t seed = 1;

    void validate() const;
};

struct LatticeConfig {
    std::size_t side = 30;   // lattice is side x side
    std::size_t points = 100;
    MHConfig mh;
};

struct MagnitudeTrace {
    double t_plus = 0.0;                 // fixed for the whole run
    std::vector<double> magnitude;       // steps + 1 entries
    std::vector<std::size_t> accepted;   // swaps per step, first entry 0
    Matrix initial;
    Matrix final_points;
};

/// Each step: take the `selected` least-weight points at the original t_plus, draw
/// `selected * candidates` distinct unoccupied sites, and for each selected point in
/// ascending weight order substitute the first of its candidates that does not decrease
/// the magnitude (or passes the Metropolis test for finite beta).
MagnitudeTrace lattice_experiment(const LatticeConfig& cfg);

/// Same loop on arbitrary starting points and ground set.
MagnitudeTrace magnitude_ascent(const Matrix& initial, const LatticeGroundSet& ground, const MHConfig& cfg);

} // namespace magflow
