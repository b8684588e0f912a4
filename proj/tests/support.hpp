#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Core>

#include "covstream/numeric.hpp"

namespace covstream::testing {

inline Eigen::MatrixXd random_normal(int rows, int cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n;
    Eigen::MatrixXd m(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            m(i, j) = n(rng);
        }
    }
    return m;
}

/// Split weight straight from its three-branch definition (1-based).
inline double naive_split_weight(int t, int i, int j, int n, int m) {
    if (i <= t && j <= t) {
        return double(n - t - m) / double(t - m - 1);
    }
    if (i > t && j > t) {
        return double(t - m) / double(n - t - m - 1);
    }
    return -double(t - m) * double(n - t - m) / (double(t) * double(n - t) - 0.5 * m * (m + 1));
}

/// Triple loop over t, i, j.
inline Eigen::MatrixXd naive_weights(int n, int m) {
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            if (std::abs(i - j) < m + 1) {
                continue;
            }
            double s = 0.0;
            for (int t = m + 2; t <= n - m - 2; ++t) {
                s += naive_split_weight(t, i, j, n, m);
            }
            w(i - 1, j - 1) = s;
        }
    }
    return w;
}

/// Pairwise double loop with fresh inner products.
inline double naive_statistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& w) {
    const auto n = x.cols();
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double d = 0.0;
            for (Eigen::Index k = 0; k < x.rows(); ++k) {
                d += (x(k, i) - mean(k)) * (x(k, j) - mean(k));
            }
            s += w(i, j) * d * d;
        }
    }
    return s / double(n * n);
}

struct MeanSe {
    double mean;
    double se;
};

template <typename Range>
MeanSe mean_se(const Range& v) {
    double s = 0.0;
    for (double x : v) {
        s += x;
    }
    const double n = static_cast<double>(v.size());
    const double m = s / n;
    double ss = 0.0;
    for (double x : v) {
        ss += (x - m) * (x - m);
    }
    return {m, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

}  // namespace covstream::testing
