#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace magflow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class ObjectiveProblem;

/// Finite point set in R^m, one point per row. Non-finite coordinates are rejected.
class PointSet {
public:
    explicit PointSet(Matrix coords);
    static PointSet from_rows(const std::vector<std::vector<double>>& rows);

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(coords_.rows()); }
    [[nodiscard]] std::size_t dim() const noexcept { return static_cast<std::size_t>(coords_.cols()); }
    [[nodiscard]] const Matrix& coords() const noexcept { return coords_; }
    [[nodiscard]] Vector point(std::size_t j) const { return coords_.row(static_cast<Eigen::Index>(j)).transpose(); }
    [[nodiscard]] PointSet subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const PointSet& a, const PointSet& b) { return a.coords_ == b.coords_; }

private:
    Matrix coords_;
};

/// Symmetric, nonnegative, zero-diagonal matrix of pairwise distances.
class DistanceMatrix {
public:
    /// Validates an externally supplied matrix (symmetry and diagonal checked exactly).
    static DistanceMatrix from_matrix(Matrix d);

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(d_.rows()); }
    [[nodiscard]] const Matrix& values() const noexcept { return d_; }
    [[nodiscard]] double operator()(std::size_t j, std::size_t k) const {
        return d_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
    }
    [[nodiscard]] DistanceMatrix subset(std::span<const std::size_t> indices) const;

    /// Smallest off-diagonal entry (+inf for n = 1).
    [[nodiscard]] double min_off_diagonal() const;

private:
    explicit DistanceMatrix(Matrix d) : d_(std::move(d)) {}
    friend DistanceMatrix distance_matrix(const PointSet&);
    Matrix d_;
};

/// Z = exp[-t d] taken entrywise.
class ScaledSimilarity {
public:
    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(z_.rows()); }
    [[nodiscard]] const Matrix& values() const noexcept { return z_; }
    [[nodiscard]] double scale() const noexcept { return t_; }
    [[nodiscard]] double operator()(std::size_t j, std::size_t k) const {
        return z_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
    }

private:
    ScaledSimilarity(Matrix z, double t) : z_(std::move(z)), t_(t) {}
    friend ScaledSimilarity similarity(const DistanceMatrix&, double);
    Matrix z_;
    double t_;
};

DistanceMatrix distance_matrix(const PointSet& ps);

/// Throws std::invalid_argument unless t is positive and finite.
ScaledSimilarity similarity(const DistanceMatrix& d, double t);

/// Distances between the images f(x_j). Throws EvaluationError listing every point whose
/// objective value is non-finite.
DistanceMatrix pullback_metric(const ObjectiveProblem& f, const PointSet& xs);

} // namespace magflow
