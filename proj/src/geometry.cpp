#include "magflow/geometry.hpp"

#include "magflow/errors.hpp"
#include "magflow/problem.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace magflow {

PointSet::PointSet(Matrix coords) : coords_(std::move(coords)) {
    if (coords_.rows() < 1 || coords_.cols() < 1) {
        throw std::invalid_argument("PointSet: need at least one point of positive dimension");
    }
    if (!coords_.allFinite()) {
        throw std::invalid_argument("PointSet: non-finite coordinate");
    }
}

PointSet PointSet::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) {
        throw std::invalid_argument("PointSet: need at least one point of positive dimension");
    }
    const auto m = rows.front().size();
    Matrix c(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
    for (std::size_t j = 0; j < rows.size(); ++j) {
        if (rows[j].size() != m) {
            throw std::invalid_argument("PointSet: row " + std::to_string(j) + " has dimension " +
                                        std::to_string(rows[j].size()) + ", expected " +
                                        std::to_string(m));
        }
        for (std::size_t i = 0; i < m; ++i) {
            c(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = rows[j][i];
        }
    }
    return PointSet(std::move(c));
}

PointSet PointSet::subset(std::span<const std::size_t> indices) const {
    Matrix c(static_cast<Eigen::Index>(indices.size()), coords_.cols());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        c.row(static_cast<Eigen::Index>(r)) = coords_.row(static_cast<Eigen::Index>(indices[r]));
    }
    return PointSet(std::move(c));
}

DistanceMatrix DistanceMatrix::from_matrix(Matrix d) {
    if (d.rows() < 1 || d.rows() != d.cols()) {
        throw std::invalid_argument("DistanceMatrix: must be square and nonempty");
    }
    const auto n = d.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (d(j, j) != 0.0) throw std::invalid_argument("DistanceMatrix: nonzero diagonal");
        for (Eigen::Index k = j + 1; k < n; ++k) {
            if (!std::isfinite(d(j, k)) || d(j, k) < 0.0) {
                throw std::invalid_argument("DistanceMatrix: entries must be finite and nonnegative");
            }
            if (d(j, k) != d(k, j)) throw std::invalid_argument("DistanceMatrix: not symmetric");
        }
    }
    return DistanceMatrix(std::move(d));
}

DistanceMatrix DistanceMatrix::subset(std::span<const std::size_t> indices) const {
    const auto n = static_cast<Eigen::Index>(indices.size());
    Matrix s(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            s(a, b) = d_(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(a)]),
                         static_cast<Eigen::Index>(indices[static_cast<std::size_t>(b)]));
        }
    }
    return DistanceMatrix(std::move(s));
}

double DistanceMatrix::min_off_diagonal() const {
    double best = std::numeric_limits<double>::infinity();
    const auto n = d_.rows();
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = j + 1; k < n; ++k) best = std::min(best, d_(j, k));
    }
    return best;
}

DistanceMatrix distance_matrix(const PointSet& ps) {
    const auto& x = ps.coords();
    const auto n = x.rows();
    Matrix d = Matrix::Zero(n, n);
    // Upper triangle once, mirrored, so d is exactly symmetric.
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index k = j + 1; k < n; ++k) {
            const double v = (x.row(j) - x.row(k)).norm();
            d(j, k) = v;
            d(k, j) = v;
        }
    }
    return DistanceMatrix(std::move(d));
}

ScaledSimilarity similarity(const DistanceMatrix& d, double t) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw std::invalid_argument("similarity: scale must be positive and finite");
    }
    Matrix z = (-t * d.values().array()).exp().matrix();
    z.diagonal().setOnes();
    return ScaledSimilarity(std::move(z), t);
}

DistanceMatrix pullback_metric(const ObjectiveProblem& f, const PointSet& xs) {
    if (xs.dim() != f.solution_dim()) {
        throw std::invalid_argument("pullback_metric: solution dimension mismatch");
    }
    Matrix ys(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(f.objective_dim()));
    std::vector<std::size_t> bad;
    for (std::size_t j = 0; j < xs.size(); ++j) {
        if (!f.bounds().contains(xs.point(j))) {
            throw std::invalid_argument("pullback_metric: point " + std::to_string(j) + " out of bounds");
        }
        const Vector y = f.evaluate(xs.point(j));
        if (!y.allFinite()) bad.push_back(j);
        ys.row(static_cast<Eigen::Index>(j)) = y.transpose();
    }
    if (!bad.empty()) {
        throw EvaluationError("pullback_metric: non-finite objective values", std::move(bad));
    }
    return distance_matrix(PointSet(std::move(ys)));
}

} // namespace magflow
