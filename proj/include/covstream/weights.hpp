#pragma once

#include <Eigen/Core>

namespace covstream {

/// Weight attached to the pair (i, j) when the sequence of length n is split
/// after position t into {1..t} and {t+1..n}. Indices are 1-based, matching
/// the split-point convention used throughout the library.
///
/// Pairs inside the left block get (n-t-M)/(t-M-1), pairs inside the right
/// block get (t-M)/(n-t-M-1), and pairs that straddle the split get
/// -(t-M)(n-t-M) / (t(n-t) - M(M+1)/2).
///
/// Throws PreconditionError unless M+2 <= t <= n-M-2 and 1 <= i,j <= n.
double profile_weight(int t, int i, int j, int n, int dep_order);

/// Smallest sequence length for which the split range M+2..n-M-2 is non-empty.
constexpr int min_plan_length(int dep_order) noexcept { return 2 * dep_order + 5; }

/// Accumulated pair weights W_M(i,j) for one sequence length and dependence
/// order. Immutable after construction and safe to share between threads.
///
/// Invariants: symmetric; zero on the band |i-j| <= M; entries sum to zero.
class WeightPlan {
public:
    int length() const noexcept { return length_; }
    int dep_order() const noexcept { return dep_order_; }

    /// Dense length x length matrix, 0-based storage of the 1-based W(i,j).
    const Eigen::MatrixXd& weights() const noexcept { return weights_; }

    /// W(i,j) with 1-based indices; zero outside 1..length.
    double at(int i, int j) const noexcept {
        if (i < 1 || j < 1 || i > length_ || j > length_) {
            return 0.0;
        }
        return weights_(i - 1, j - 1);
    }

    /// Per-split weights A_t(i,j) I(|i-j| >= M+1) as a dense matrix.
    /// Materialized on demand; t must lie in M+2..length-M-2.
    Eigen::MatrixXd profile_matrix(int t) const;

    /// Always true: per-split matrices can be built from (length, M) alone.
    static constexpr bool profile_weights_available() noexcept { return true; }

    /// Sum over all pairs of W(i,j)^2.
    double sum_squares() const noexcept { return sum_squares_; }

private:
    friend WeightPlan build_weight_plan(int length, int dep_order);
    WeightPlan(int length, int dep_order, Eigen::MatrixXd weights);

    int length_;
    int dep_order_;
    Eigen::MatrixXd weights_;
    double sum_squares_;
};

/// Builds W_M for the given length in O(length^2) using prefix sums over the
/// split point. Throws ConfigError when length < 2M+5.
WeightPlan build_weight_plan(int length, int dep_order);

}  // namespace covstream
