#include "covstream/weights.hpp"

#include <algorithm>
#include <string>
#include <vector>

#include "covstream/error.hpp"
#include "covstream/numeric.hpp"

namespace covstream {
namespace {

struct SplitCoefficients {
    double left;   // both indices <= t
    double right;  // both indices >= t+1
    double cross;  // one on each side
};

SplitCoefficients split_coefficients(int t, int n, int m) {
    const double td = t, nd = n, md = m;
    return {
        (nd - td - md) / (td - md - 1.0),
        (td - md) / (nd - td - md - 1.0),
        -(td - md) * (nd - td - md) / (td * (nd - td) - 0.5 * md * (md + 1.0)),
    };
}

void check_length(int length, int dep_order) {
    if (dep_order < 0) {
        throw ConfigError("dependence order must be non-negative, got " + std::to_string(dep_order));
    }
    if (length < min_plan_length(dep_order)) {
        throw ConfigError("sequence length " + std::to_string(length) + " too small for M=" +
                          std::to_string(dep_order) + "; minimum length is " +
                          std::to_string(min_plan_length(dep_order)));
    }
}

}  // namespace

double profile_weight(int t, int i, int j, int n, int dep_order) {
    if (dep_order < 0 || n < min_plan_length(dep_order)) {
        throw PreconditionError("profile_weight: n=" + std::to_string(n) + " too small for M=" +
                                std::to_string(dep_order));
    }
    if (t < dep_order + 2 || t > n - dep_order - 2) {
        throw PreconditionError("profile_weight: split t=" + std::to_string(t) + " outside " +
                                std::to_string(dep_order + 2) + ".." +
                                std::to_string(n - dep_order - 2));
    }
    if (i < 1 || j < 1 || i > n || j > n) {
        throw PreconditionError("profile_weight: index pair (" + std::to_string(i) + ", " +
                                std::to_string(j) + ") outside 1.." + std::to_string(n));
    }
    const auto c = split_coefficients(t, n, dep_order);
    if (i <= t && j <= t) {
        return c.left;
    }
    if (i > t && j > t) {
        return c.right;
    }
    return c.cross;
}

WeightPlan::WeightPlan(int length, int dep_order, Eigen::MatrixXd weights)
    : length_(length), dep_order_(dep_order), weights_(std::move(weights)) {
    CompensatedSum s;
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
        for (Eigen::Index i = 0; i < weights_.rows(); ++i) {
            s += weights_(i, j) * weights_(i, j);
        }
    }
    sum_squares_ = s.value();
}

Eigen::MatrixXd WeightPlan::profile_matrix(int t) const {
    const int n = length_, m = dep_order_;
    if (t < m + 2 || t > n - m - 2) {
        throw PreconditionError("profile_matrix: split t=" + std::to_string(t) + " outside " +
                                std::to_string(m + 2) + ".." + std::to_string(n - m - 2));
    }
    const auto c = split_coefficients(t, n, m);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int j = 1; j <= n; ++j) {
        for (int i = 1; i <= n; ++i) {
            if (std::abs(i - j) < m + 1) {
                continue;
            }
            const bool li = i <= t, lj = j <= t;
            a(i - 1, j - 1) = (li && lj) ? c.left : (!li && !lj) ? c.right : c.cross;
        }
    }
    return a;
}

WeightPlan build_weight_plan(int length, int dep_order) {
    check_length(length, dep_order);
    const int n = length, m = dep_order;
    const int t_lo = m + 2, t_hi = n - m - 2;

    // prefix[k] = sum of coefficient over t_lo..k, stored at offset k.
    std::vector<long double> pa(n + 1, 0.0L), pb(n + 1, 0.0L), pc(n + 1, 0.0L);
    for (int t = t_lo; t <= t_hi; ++t) {
        const auto c = split_coefficients(t, n, m);
        pa[t] = pa[t - 1] + c.left;
        pb[t] = pb[t - 1] + c.right;
        pc[t] = pc[t - 1] + c.cross;
    }
    for (int t = t_hi + 1; t <= n; ++t) {
        pa[t] = pa[t - 1];
        pb[t] = pb[t - 1];
        pc[t] = pc[t - 1];
    }
    auto range = [](const std::vector<long double>& p, int l, int r) -> long double {
        if (l > r) {
            return 0.0L;
        }
        return p[r] - p[l - 1];
    };

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (int hi = 1; hi <= n; ++hi) {
        for (int lo = 1; hi - lo >= m + 1; ++lo) {
            const long double v = range(pa, std::max(hi, t_lo), t_hi) +
                                  range(pb, t_lo, std::min(lo - 1, t_hi)) +
                                  range(pc, std::max(lo, t_lo), std::min(hi - 1, t_hi));
            w(lo - 1, hi - 1) = static_cast<double>(v);
            w(hi - 1, lo - 1) = static_cast<double>(v);
        }
    }
    return WeightPlan(n, m, std::move(w));
}

}  // namespace covstream
