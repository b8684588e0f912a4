#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "covstream/statistic.hpp"
#include "covstream/weights.hpp"

namespace covstream {

/// Estimates of tr{C(h1) C(h2)} for h1, h2 in -M..M, where
/// C(h) = E[(X_s - mu)(X_{s+h} - mu)'].
class TraceTable {
public:
    TraceTable() = default;
    explicit TraceTable(int dep_order);

    int dep_order() const noexcept { return dep_order_; }
    double at(int h1, int h2) const;
    void set(int h1, int h2, double value);

    bool operator==(const TraceTable&) const = default;

private:
    int index(int h1, int h2) const;

    int dep_order_ = 0;
    std::vector<double> entries_{0.0};
};

/// Training-sample Gram matrix of centered observations. Every trace
/// estimate reads inner products from here, so it is computed once per fit.
class TrainingGram {
public:
    TrainingGram(ObservationsRef train, VectorRef mean);

    int length() const noexcept { return static_cast<int>(gram_.rows()); }
    /// Inner product of centered observations s and t (1-based).
    double operator()(int s, int t) const noexcept { return gram_(s - 1, t - 1); }
    const Eigen::MatrixXd& matrix() const noexcept { return gram_; }

private:
    Eigen::MatrixXd gram_;
};

/// Average over admissible ordered pairs (s, t) of
/// (X_{t+h2}-mu)'(X_s-mu) * (X_{s+h1}-mu)'(X_t-mu).
///
/// A pair is admissible when all four indices lie in 1..n0 and every index of
/// {s, s+h1} is more than `separation` steps from every index of {t, t+h2}.
/// Throws InsufficientTrainingError when no pair qualifies.
double estimate_trace_cross(const TrainingGram& gram, int h1, int h2, int separation);
double estimate_trace_cross(ObservationsRef train, VectorRef mean, int h1, int h2,
                            int separation);

/// Symmetrized table for |h1|,|h2| <= M using pair separation M.
TraceTable estimate_trace_table(const TrainingGram& gram, int dep_order);

/// Ratio tr{C(h)C(-h)} / tr{C(0)C(0)} from symmetrized estimates, using pair
/// separation `separation` for both.
double dependence_ratio(const TrainingGram& gram, int h, int separation);

/// Smallest h with dependence_ratio(h) <= epsilon, minus one. Lags 1..max_order+1
/// are examined with pair separation max_order. Throws
/// DependenceTooStrongError if none qualifies.
int estimate_M(const TrainingGram& gram, double epsilon = 0.05, int max_order = 10);
int estimate_M(ObservationsRef train, VectorRef mean, double epsilon = 0.05,
               int max_order = 10);

/// sqrt( (4/L^4) sum_{i,j} sum_{h1,h2} W(i,j) W(i-h1, j+h2) tr^2{C(h1)C(h2)} )
/// for plan length L and the plan's dependence order. The raw sum is
/// returned through `raw_variance` when provided. No fallback is applied.
double null_sd_from_traces(const TraceTable& traces, const WeightPlan& plan,
                           double* raw_variance = nullptr);

/// Null standard deviation of the windowed statistic for window H. Falls back
/// to the (0,0) term alone, with a warning, when the full sum is not positive.
/// Throws NumericalError if even that is not positive.
double estimate_null_sd(const TraceTable& traces, const WeightPlan& plan);
double estimate_null_sd(ObservationsRef train, VectorRef mean, int dep_order, int window);

/// Upper alpha quantile of the standard normal.
double normal_upper_quantile(double alpha);

struct StationarityResult {
    double statistic = 0.0;
    double z_alpha = 0.0;
    bool rejected = false;

    bool operator==(const StationarityResult&) const = default;
};

/// One-sided test that the training covariance is stable: the full-length
/// statistic standardized by its estimated null sd, rejected above z_alpha.
StationarityResult stationarity_test(ObservationsRef train, VectorRef mean, int dep_order,
                                     double alpha);
StationarityResult stationarity_test(const TrainingGram& gram, const Eigen::MatrixXd& gram_sq,
                                     const TraceTable& traces, double alpha);

struct TrainingConfig {
    int window = 100;
    double alpha = 0.05;
    double epsilon = 0.05;
    int max_order = 10;
    std::optional<int> dep_order_override;
    /// Center with the training mean. When false the mean is taken as known
    /// zero and the uncentered inner products are used throughout.
    bool center = true;
    /// Number of trailing training observations retained for detector priming.
    /// Defaults to window - 1 when unset.
    std::optional<int> tail_length;
};

/// Everything monitoring needs from the training sample. Immutable once built.
struct TrainingSummary {
    int n0 = 0;
    int p = 0;
    Eigen::VectorXd mean;
    int m_hat = 0;
    TraceTable trace_table;
    int window = 0;
    double null_sd = 0.0;
    StationarityResult stationarity;
    /// Last observations of the training sample (raw, p x k, oldest first).
    Eigen::MatrixXd tail;
};

/// Sample mean, dependence order (estimated or overridden), trace table,
/// null sd for config.window and the stationarity verdict. A rejected
/// stationarity test is reported in the summary, not thrown.
TrainingSummary fit_training(ObservationsRef train, const TrainingConfig& config);

}  // namespace covstream
