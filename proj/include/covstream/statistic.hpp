#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "covstream/weights.hpp"

namespace covstream {

/// A block of observations, one column per time point (p rows).
using Observations = Eigen::MatrixXd;
using ObservationsRef = Eigen::Ref<const Eigen::MatrixXd>;
using VectorRef = Eigen::Ref<const Eigen::VectorXd>;

/// Squared centered inner products ((x_i - mean)'(x_j - mean))^2 for every
/// pair of columns.
Eigen::MatrixXd squared_gram(ObservationsRef x, VectorRef mean);

/// (1/n^2) sum_{i,j} W(i,j) ((x_i - mean)'(x_j - mean))^2.
/// Pass a zero mean for the uncentered form. Throws InputError on a
/// dimension mismatch and ConfigError if plan.length() != x.cols().
double statistic_batch(ObservationsRef x, VectorRef mean, const WeightPlan& plan);

/// Same statistic from a precomputed squared Gram matrix.
double statistic_from_squared_gram(const Eigen::MatrixXd& gram_sq, const WeightPlan& plan);

/// Split-point statistic: the batch statistic with W replaced by
/// A_t(i,j) I(|i-j| >= M+1). Throws PreconditionError unless M+2 <= t <= n-M-2.
double profile_statistic(ObservationsRef x, VectorRef mean, int dep_order, int t);

/// Profile statistic for every admissible split t = M+2..n-M-2, in O(n^2)
/// from the squared Gram matrix. Element k holds t = M+2+k.
std::vector<double> profile_curve(const Eigen::MatrixXd& gram_sq, int dep_order);

/// Sliding window of the last H centered observations together with the
/// cache of their squared inner products. Each push computes one new row of
/// the cache; nothing else is recomputed.
///
/// Single writer: one owner mutates it; it may move between threads.
class WindowState {
public:
    WindowState(int capacity, int dim);

    int capacity() const noexcept { return capacity_; }
    int dim() const noexcept { return dim_; }
    std::int64_t count() const noexcept { return count_; }
    bool full() const noexcept { return count_ >= capacity_; }
    int size() const noexcept {
        return static_cast<int>(std::min<std::int64_t>(count_, capacity_));
    }

    /// Centers x with the frozen mean, evicts the oldest entry when full.
    /// Throws InputError on dimension mismatch or non-finite entries.
    void push(VectorRef x, VectorRef mean);

    /// Ring slot holding window position k (0 = oldest).
    int slot(int k) const noexcept {
        const int start = full() ? next_ : 0;
        return (start + k) % capacity_;
    }

    /// Squared inner product cache indexed by ring slot.
    const Eigen::MatrixXd& gram_sq() const noexcept { return gram_sq_; }

    /// Centered contents ordered oldest to newest (dim x size()).
    Eigen::MatrixXd contents() const;

private:
    int capacity_;
    int dim_;
    std::int64_t count_ = 0;
    int next_ = 0;
    Eigen::MatrixXd buffer_;   // dim x capacity, centered
    Eigen::MatrixXd gram_sq_;  // capacity x capacity, by slot
};

/// Free-function form of WindowState::push.
void window_push(WindowState& state, VectorRef x, VectorRef mean);

/// (1/H^2) sum over window positions W(a,b) gram_sq(a,b), positions ordered
/// oldest to newest. Returns nullopt while the window is not yet full.
/// Throws ConfigError if plan.length() != state.capacity().
std::optional<double> statistic_windowed(const WindowState& state, const WeightPlan& plan);

}  // namespace covstream
