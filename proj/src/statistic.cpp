#include "covstream/statistic.hpp"

#include <cmath>
#include <string>

#include "covstream/error.hpp"
#include "covstream/numeric.hpp"

namespace covstream {
namespace {

void check_dims(ObservationsRef x, VectorRef mean) {
    if (x.rows() != mean.size()) {
        throw InputError("observation dimension " + std::to_string(x.rows()) +
                         " does not match mean dimension " + std::to_string(mean.size()));
    }
}

}  // namespace

Eigen::MatrixXd squared_gram(ObservationsRef x, VectorRef mean) {
    check_dims(x, mean);
    const Eigen::MatrixXd y = x.colwise() - mean;
    Eigen::MatrixXd g = y.transpose() * y;
    return g.array().square().matrix();
}

double statistic_from_squared_gram(const Eigen::MatrixXd& gram_sq, const WeightPlan& plan) {
    const Eigen::Index n = plan.length();
    if (gram_sq.rows() != n || gram_sq.cols() != n) {
        throw ConfigError("weight plan length " + std::to_string(n) + " does not match " +
                          std::to_string(gram_sq.rows()) + " observations");
    }
    const auto& w = plan.weights();
    CompensatedSum s;
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            s += w(i, j) * gram_sq(i, j);
        }
    }
    const double nd = static_cast<double>(n);
    return s.value() / (nd * nd);
}

double statistic_batch(ObservationsRef x, VectorRef mean, const WeightPlan& plan) {
    check_dims(x, mean);
    if (x.cols() != plan.length()) {
        throw ConfigError("weight plan length " + std::to_string(plan.length()) +
                          " does not match " + std::to_string(x.cols()) + " observations");
    }
    return statistic_from_squared_gram(squared_gram(x, mean), plan);
}

double profile_statistic(ObservationsRef x, VectorRef mean, int dep_order, int t) {
    check_dims(x, mean);
    const int n = static_cast<int>(x.cols());
    const Eigen::MatrixXd g = squared_gram(x, mean);
    CompensatedSum s;
    for (int j = 1; j <= n; ++j) {
        for (int i = 1; i <= n; ++i) {
            if (std::abs(i - j) < dep_order + 1) {
                continue;
            }
            s += profile_weight(t, i, j, n, dep_order) * g(i - 1, j - 1);
        }
    }
    const double nd = n;
    return s.value() / (nd * nd);
}

std::vector<double> profile_curve(const Eigen::MatrixXd& gram_sq, int dep_order) {
    const int n = static_cast<int>(gram_sq.rows());
    const int m = dep_order;
    if (m < 0 || n < min_plan_length(m)) {
        throw PreconditionError("profile_curve: " + std::to_string(n) +
                                " observations too few for M=" + std::to_string(m));
    }
    // left[t]: pairs inside 1..t, right[t]: pairs inside t+1..n (1-based t),
    // both restricted to |i-j| >= M+1.
    std::vector<double> left(n + 2, 0.0), right(n + 2, 0.0);
    for (int t = 1; t <= n; ++t) {
        CompensatedSum s;
        s += left[t - 1];
        for (int i = 1; i <= t - m - 1; ++i) {
            s += 2.0 * gram_sq(i - 1, t - 1);
        }
        left[t] = s.value();
    }
    for (int t = n - 1; t >= 0; --t) {
        CompensatedSum s;
        s += right[t + 1];
        // row t+1 pairs with columns t+2+m..n
        for (int j = t + 2 + m; j <= n; ++j) {
            s += 2.0 * gram_sq(t, j - 1);
        }
        right[t] = s.value();
    }
    const double total = left[n];
    const double nd = n;
    std::vector<double> curve;
    curve.reserve(n - 2 * m - 3);
    for (int t = m + 2; t <= n - m - 2; ++t) {
        const double td = t, md = m;
        const double a = (nd - td - md) / (td - md - 1.0);
        const double b = (td - md) / (nd - td - md - 1.0);
        const double c = -(td - md) * (nd - td - md) / (td * (nd - td) - 0.5 * md * (md + 1.0));
        const double cross = total - left[t] - right[t];
        CompensatedSum s;
        s += a * left[t];
        s += b * right[t];
        s += c * cross;
        curve.push_back(s.value() / (nd * nd));
    }
    return curve;
}

WindowState::WindowState(int capacity, int dim)
    : capacity_(capacity),
      dim_(dim),
      buffer_(Eigen::MatrixXd::Zero(dim, capacity)),
      gram_sq_(Eigen::MatrixXd::Zero(capacity, capacity)) {
    if (capacity < 1) {
        throw ConfigError("window capacity must be positive, got " + std::to_string(capacity));
    }
    if (dim < 0) {
        throw ConfigError("dimension must be non-negative");
    }
}

void WindowState::push(VectorRef x, VectorRef mean) {
    if (x.size() != dim_ || mean.size() != dim_) {
        throw InputError("window expects dimension " + std::to_string(dim_) + ", got " +
                         std::to_string(x.size()));
    }
    if (!x.allFinite()) {
        throw InputError("observation contains non-finite values");
    }
    const int s = next_;
    buffer_.col(s) = x - mean;
    // before the ring wraps, the occupied slots are 0..count
    const int occupied = full() ? capacity_ : size() + 1;
    for (int other = 0; other < occupied; ++other) {
        const double d = buffer_.col(other).dot(buffer_.col(s));
        gram_sq_(other, s) = d * d;
        gram_sq_(s, other) = d * d;
    }
    next_ = (next_ + 1) % capacity_;
    ++count_;
}

Eigen::MatrixXd WindowState::contents() const {
    const int n = size();
    Eigen::MatrixXd out(dim_, n);
    for (int k = 0; k < n; ++k) {
        out.col(k) = buffer_.col(slot(k));
    }
    return out;
}

void window_push(WindowState& state, VectorRef x, VectorRef mean) { state.push(x, mean); }

std::optional<double> statistic_windowed(const WindowState& state, const WeightPlan& plan) {
    const int h = state.capacity();
    if (plan.length() != h) {
        throw ConfigError("weight plan length " + std::to_string(plan.length()) +
                          " does not match window capacity " + std::to_string(h));
    }
    if (!state.full()) {
        return std::nullopt;
    }
    const auto& w = plan.weights();
    const auto& g = state.gram_sq();
    const int start = state.slot(0);
    CompensatedSum s;
    for (int b = 0; b < h; ++b) {
        const int sb = (start + b) % h;
        // positions a = 0..h-start-1 live in slots start..h-1, the rest wrap to 0..start-1
        for (int a = 0; a < h - start; ++a) {
            s += w(a, b) * g(start + a, sb);
        }
        for (int a = h - start; a < h; ++a) {
            s += w(a, b) * g(a - (h - start), sb);
        }
    }
    const double hd = h;
    return s.value() / (hd * hd);
}

}  // namespace covstream
