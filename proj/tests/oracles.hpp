#pragma once

// Independent reference implementations used by the tests. Nothing here calls into the
// library's solvers; only plain data types are shared.

#include "magflow/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace oracle {

using ld = long double;
using Mat = std::vector<std::vector<ld>>;

inline Mat distances(const magflow::Matrix& pts) {
    const auto n = static_cast<std::size_t>(pts.rows());
    Mat d(n, std::vector<ld>(n, 0));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            ld s = 0;
            for (Eigen::Index c = 0; c < pts.cols(); ++c) {
                const ld diff = static_cast<ld>(pts(static_cast<Eigen::Index>(j), c)) - pts(static_cast<Eigen::Index>(k), c);
                s += diff * diff;
            }
            d[j][k] = std::sqrt(s);
        }
    }
    return d;
}

// Gauss-Jordan with partial pivoting in extended precision.
inline std::vector<ld> solve(Mat a, std::vector<ld> b) {
    const std::size_t n = b.size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t p = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
        }
        std::swap(a[c], a[p]);
        std::swap(b[c], b[p]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const ld f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t r = 0; r < n; ++r) b[r] /= a[r][r];
    return b;
}

inline Mat similarity(const Mat& d, ld t) {
    Mat z = d;
    for (auto& row : z) {
        for (auto& v : row) v = std::exp(-t * v);
    }
    return z;
}

inline std::vector<ld> weighting(const Mat& d, ld t) {
    return solve(similarity(d, t), std::vector<ld>(d.size(), 1));
}

inline ld magnitude(const Mat& d, ld t) {
    const auto w = weighting(d, t);
    return std::accumulate(w.begin(), w.end(), ld{0});
}

// Neighbour-difference gradient summed term by term in extended precision.
inline std::vector<std::vector<ld>> gradient(const magflow::Matrix& pts, ld t) {
    const auto d = distances(pts);
    const auto w = weighting(d, t);
    const std::size_t n = d.size();
    const auto m = static_cast<std::size_t>(pts.cols());
    std::vector<std::vector<ld>> g(n, std::vector<ld>(m, 0));
    for (std::size_t j = 0; j < n; ++j) {
        ld norm = 0;
        for (std::size_t k = 0; k < n; ++k) {
            if (k != j) norm += std::exp(-t * d[j][k]);
        }
        for (std::size_t k = 0; k < n; ++k) {
            if (k == j) continue;
            const ld coeff = std::exp(-t * d[j][k]) / norm * (w[k] - w[j]) / d[j][k];
            for (std::size_t c = 0; c < m; ++c) {
                const ld e = (static_cast<ld>(pts(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c))) -
                              pts(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c))) / d[j][k];
                g[j][c] += coeff * e;
            }
        }
    }
    return g;
}

inline bool dominates(const magflow::Matrix& ys, Eigen::Index a, Eigen::Index b) {
    bool all_le = true;
    bool any_lt = false;
    for (Eigen::Index c = 0; c < ys.cols(); ++c) {
        all_le = all_le && ys(a, c) <= ys(b, c);
        any_lt = any_lt || ys(a, c) < ys(b, c);
    }
    return all_le && any_lt;
}

inline std::vector<int> dominance_counts(const magflow::Matrix& ys) {
    std::vector<int> out(static_cast<std::size_t>(ys.rows()), 0);
    for (Eigen::Index j = 0; j < ys.rows(); ++j) {
        for (Eigen::Index k = 0; k < ys.rows(); ++k) {
            if (k != j && dominates(ys, k, j)) ++out[static_cast<std::size_t>(j)];
        }
    }
    return out;
}

// Repeatedly strip the nondominated layer of what remains.
inline std::vector<std::vector<std::size_t>> peel(const magflow::Matrix& ys) {
    std::vector<bool> gone(static_cast<std::size_t>(ys.rows()), false);
    std::vector<std::vector<std::size_t>> fronts;
    std::size_t left = gone.size();
    while (left > 0) {
        std::vector<std::size_t> front;
        for (Eigen::Index j = 0; j < ys.rows(); ++j) {
            if (gone[static_cast<std::size_t>(j)]) continue;
            bool dominated = false;
            for (Eigen::Index k = 0; k < ys.rows() && !dominated; ++k) {
                dominated = !gone[static_cast<std::size_t>(k)] && dominates(ys, k, j);
            }
            if (!dominated) front.push_back(static_cast<std::size_t>(j));
        }
        for (auto j : front) gone[j] = true;
        left -= front.size();
        fronts.push_back(front);
    }
    return fronts;
}

inline double igd(const magflow::Matrix& xs, const magflow::Matrix& ref) {
    double total = 0;
    for (Eigen::Index r = 0; r < ref.rows(); ++r) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < xs.rows(); ++j) {
            double s = 0;
            for (Eigen::Index c = 0; c < xs.cols(); ++c) s += (xs(j, c) - ref(r, c)) * (xs(j, c) - ref(r, c));
            best = std::min(best, std::sqrt(s));
        }
        total += best;
    }
    return total / static_cast<double>(ref.rows());
}

// Closed forms for the three-point space d12 = d13 = 1, d23 = delta.
inline ld three_point_w1(ld delta, ld t) {
    const ld den = std::exp((delta + 2) * t) - 2 * std::exp(delta * t) + std::exp(2 * t);
    return (std::exp((delta + 2) * t) - 2 * std::exp((delta + 1) * t) + std::exp(2 * t)) / den;
}
inline ld three_point_w2(ld delta, ld t) {
    const ld den = std::exp((delta + 2) * t) - 2 * std::exp(delta * t) + std::exp(2 * t);
    return (std::exp((delta + 2) * t) - std::exp((delta + 1) * t)) / den;
}

// x1 at the origin, x2 and x3 mirrored about the first axis at unit distance from x1.
inline magflow::Matrix three_point_set(double delta) {
    const double h = std::sqrt(4.0 - delta * delta) / 2.0;
    magflow::Matrix p(3, 2);
    p << 0.0, 0.0, h, delta / 2.0, h, -delta / 2.0;
    return p;
}

inline magflow::Matrix random_points(std::size_t n, std::size_t dim, std::uint64_t seed, double scale = 1.0) {
    std::uint64_t s = seed * 0x9E3779B97F4A7C15ULL + 1;
    auto next = [&]() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        return static_cast<double>(s >> 11) * 0x1.0p-53;
    };
    magflow::Matrix p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    for (Eigen::Index j = 0; j < p.rows(); ++j) {
        for (Eigen::Index c = 0; c < p.cols(); ++c) p(j, c) = scale * next();
    }
    return p;
}

} // namespace oracle
