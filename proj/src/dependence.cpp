#include "covstream/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <string>

#include <boost/math/distributions/normal.hpp>

#include "covstream/error.hpp"
#include "covstream/numeric.hpp"

namespace covstream {

TraceTable::TraceTable(int dep_order)
    : dep_order_(dep_order),
      entries_(static_cast<std::size_t>((2 * dep_order + 1) * (2 * dep_order + 1)), 0.0) {
    if (dep_order < 0) {
        throw ConfigError("trace table order must be non-negative");
    }
}

int TraceTable::index(int h1, int h2) const {
    if (std::abs(h1) > dep_order_ || std::abs(h2) > dep_order_) {
        throw PreconditionError("trace table lag (" + std::to_string(h1) + ", " +
                                std::to_string(h2) + ") outside +-" + std::to_string(dep_order_));
    }
    const int w = 2 * dep_order_ + 1;
    return (h1 + dep_order_) * w + (h2 + dep_order_);
}

double TraceTable::at(int h1, int h2) const { return entries_[index(h1, h2)]; }

void TraceTable::set(int h1, int h2, double value) { entries_[index(h1, h2)] = value; }

TrainingGram::TrainingGram(ObservationsRef train, VectorRef mean) {
    if (train.rows() != mean.size()) {
        throw InputError("training dimension " + std::to_string(train.rows()) +
                         " does not match mean dimension " + std::to_string(mean.size()));
    }
    const Eigen::MatrixXd y = train.colwise() - mean;
    gram_ = y.transpose() * y;
}

namespace {

int min_training_length(int h1, int h2, int separation) {
    return std::abs(h1) + std::abs(h2) + separation + 2;
}

}  // namespace

double estimate_trace_cross(const TrainingGram& gram, int h1, int h2, int separation) {
    const int n0 = gram.length();
    // s and s+h1 both in 1..n0, likewise t and t+h2
    const int s_lo = std::max(1, 1 - h1), s_hi = std::min(n0, n0 - h1);
    const int t_lo = std::max(1, 1 - h2), t_hi = std::min(n0, n0 - h2);
    CompensatedSum sum;
    long long count = 0;
    for (int t = t_lo; t <= t_hi; ++t) {
        const int t2 = t + h2;
        for (int s = s_lo; s <= s_hi; ++s) {
            const int s2 = s + h1;
            const int gap = std::min({std::abs(s - t), std::abs(s - t2), std::abs(s2 - t),
                                      std::abs(s2 - t2)});
            if (gap <= separation) {
                continue;
            }
            sum += gram(t2, s) * gram(s2, t);
            ++count;
        }
    }
    if (count == 0) {
        const int need = min_training_length(h1, h2, separation);
        throw InsufficientTrainingError(
            "no admissible index pairs for lags (" + std::to_string(h1) + ", " +
                std::to_string(h2) + ") with separation " + std::to_string(separation) +
                "; training length " + std::to_string(n0) + " is below the minimum " +
                std::to_string(need),
            need);
    }
    return sum.value() / static_cast<double>(count);
}

double estimate_trace_cross(ObservationsRef train, VectorRef mean, int h1, int h2,
                            int separation) {
    return estimate_trace_cross(TrainingGram(train, mean), h1, h2, separation);
}

TraceTable estimate_trace_table(const TrainingGram& gram, int dep_order) {
    TraceTable table(dep_order);
    for (int h1 = -dep_order; h1 <= dep_order; ++h1) {
        for (int h2 = h1; h2 <= dep_order; ++h2) {
            double v = estimate_trace_cross(gram, h1, h2, dep_order);
            if (h2 != h1) {
                v = 0.5 * (v + estimate_trace_cross(gram, h2, h1, dep_order));
            }
            table.set(h1, h2, v);
            table.set(h2, h1, v);
        }
    }
    return table;
}

double dependence_ratio(const TrainingGram& gram, int h, int separation) {
    const double base = estimate_trace_cross(gram, 0, 0, separation);
    if (!(base > 0.0)) {
        throw NumericalError("tr{C(0)C(0)} estimate is not positive; training data degenerate");
    }
    if (h == 0) {
        return 1.0;
    }
    const double num = 0.5 * (estimate_trace_cross(gram, h, -h, separation) +
                              estimate_trace_cross(gram, -h, h, separation));
    return num / base;
}

int estimate_M(const TrainingGram& gram, double epsilon, int max_order) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw ConfigError("epsilon must lie in (0, 1)");
    }
    if (max_order < 0) {
        throw ConfigError("maximum dependence order must be non-negative");
    }
    for (int h = 1; h <= max_order + 1; ++h) {
        if (dependence_ratio(gram, h, max_order) <= epsilon) {
            return h - 1;
        }
    }
    throw DependenceTooStrongError("no lag up to " + std::to_string(max_order + 1) +
                                   " meets the cutoff " + std::to_string(epsilon) +
                                   "; raise the maximum order");
}

int estimate_M(ObservationsRef train, VectorRef mean, double epsilon, int max_order) {
    return estimate_M(TrainingGram(train, mean), epsilon, max_order);
}

double null_sd_from_traces(const TraceTable& traces, const WeightPlan& plan,
                           double* raw_variance) {
    const int m = plan.dep_order();
    if (traces.dep_order() < m) {
        throw ConfigError("trace table order " + std::to_string(traces.dep_order()) +
                          " is below the plan order " + std::to_string(m));
    }
    const int len = plan.length();
    const auto& w = plan.weights();
    CompensatedSum total;
    for (int h1 = -m; h1 <= m; ++h1) {
        for (int h2 = -m; h2 <= m; ++h2) {
            const double tr = traces.at(h1, h2);
            // sum_{i,j} W(i,j) W(i-h1, j+h2) over the overlap of both index ranges
            CompensatedSum shifted;
            const int i_lo = std::max(1, 1 + h1), i_hi = std::min(len, len + h1);
            const int j_lo = std::max(1, 1 - h2), j_hi = std::min(len, len - h2);
            for (int j = j_lo; j <= j_hi; ++j) {
                for (int i = i_lo; i <= i_hi; ++i) {
                    shifted += w(i - 1, j - 1) * w(i - h1 - 1, j + h2 - 1);
                }
            }
            total += shifted.value() * tr * tr;
        }
    }
    const double l4 = std::pow(static_cast<double>(len), 4);
    const double var = 4.0 * total.value() / l4;
    if (raw_variance != nullptr) {
        *raw_variance = var;
    }
    return var > 0.0 ? std::sqrt(var) : 0.0;
}

double estimate_null_sd(const TraceTable& traces, const WeightPlan& plan) {
    double var = 0.0;
    const double sd = null_sd_from_traces(traces, plan, &var);
    if (var > 0.0 && std::isfinite(var)) {
        return sd;
    }
    const double tr0 = traces.at(0, 0);
    const double fallback =
        4.0 * plan.sum_squares() * tr0 * tr0 / std::pow(static_cast<double>(plan.length()), 4);
    if (!(tr0 > 0.0) || !(fallback > 0.0) || !std::isfinite(fallback)) {
        throw NumericalError("null variance estimate is not positive (training data degenerate)");
    }
    warn("null variance sum " + std::to_string(var) +
         " is not positive; using the lag-0 term only");
    return std::sqrt(fallback);
}

double estimate_null_sd(ObservationsRef train, VectorRef mean, int dep_order, int window) {
    const TrainingGram gram(train, mean);
    const auto table = estimate_trace_table(gram, dep_order);
    return estimate_null_sd(table, build_weight_plan(window, dep_order));
}

double normal_upper_quantile(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError("significance level must lie in (0, 1)");
    }
    const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(boost::math::complement(standard, alpha));
}

StationarityResult stationarity_test(const TrainingGram& gram, const Eigen::MatrixXd& gram_sq,
                                     const TraceTable& traces, double alpha) {
    const int m = traces.dep_order();
    const auto plan = build_weight_plan(gram.length(), m);
    const double stat = statistic_from_squared_gram(gram_sq, plan);
    const double sd = estimate_null_sd(traces, plan);
    StationarityResult r;
    r.statistic = stat / sd;
    r.z_alpha = normal_upper_quantile(alpha);
    r.rejected = r.statistic > r.z_alpha;
    return r;
}

StationarityResult stationarity_test(ObservationsRef train, VectorRef mean, int dep_order,
                                     double alpha) {
    const TrainingGram gram(train, mean);
    if (gram.length() < min_plan_length(dep_order)) {
        throw ConfigError("training length " + std::to_string(gram.length()) +
                          " too small for M=" + std::to_string(dep_order));
    }
    const Eigen::MatrixXd gram_sq = gram.matrix().array().square().matrix();
    return stationarity_test(gram, gram_sq, estimate_trace_table(gram, dep_order), alpha);
}

TrainingSummary fit_training(ObservationsRef train, const TrainingConfig& config) {
    if (train.cols() < 1) {
        throw InputError("training sample is empty");
    }
    if (!train.allFinite()) {
        throw InputError("training sample contains non-finite values");
    }
    if (config.window < 1) {
        throw ConfigError("window must be positive");
    }
    TrainingSummary s;
    s.n0 = static_cast<int>(train.cols());
    s.p = static_cast<int>(train.rows());
    s.mean = config.center ? Eigen::VectorXd(train.rowwise().mean())
                           : Eigen::VectorXd::Zero(train.rows());

    const TrainingGram gram(train, s.mean);
    s.m_hat = config.dep_order_override ? *config.dep_order_override
                                        : estimate_M(gram, config.epsilon, config.max_order);
    if (s.m_hat < 0) {
        throw ConfigError("dependence order override must be non-negative");
    }
    if (s.n0 < min_plan_length(s.m_hat)) {
        throw ConfigError("training length " + std::to_string(s.n0) + " too small for M=" +
                          std::to_string(s.m_hat) + "; need at least " +
                          std::to_string(min_plan_length(s.m_hat)));
    }
    if (config.window < min_plan_length(s.m_hat)) {
        throw ConfigError("window " + std::to_string(config.window) + " too small for M=" +
                          std::to_string(s.m_hat) + "; need at least " +
                          std::to_string(min_plan_length(s.m_hat)));
    }
    s.trace_table = estimate_trace_table(gram, s.m_hat);
    s.window = config.window;
    s.null_sd = estimate_null_sd(s.trace_table, build_weight_plan(config.window, s.m_hat));

    const Eigen::MatrixXd gram_sq = gram.matrix().array().square().matrix();
    s.stationarity = stationarity_test(gram, gram_sq, s.trace_table, config.alpha);

    const int tail = std::min(s.n0, std::max(0, config.tail_length.value_or(config.window - 1)));
    s.tail = train.rightCols(tail);
    return s;
}

}  // namespace covstream
