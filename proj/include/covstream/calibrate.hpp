#pragma once

#include <utility>

namespace covstream {

/// Exponent of the Gumbel-type run-length tail:
///   2 log q + (1/2) log log q + log(4/sqrt(pi)) - a sqrt(2 log q),  q = t/H.
/// Throws PreconditionError for q <= 1.
double g_value(double t_over_h, double threshold);

/// P(T <= t) under no change. For t > H this is 1 - exp(-2 exp(g(t/H, a)));
/// on [0, H] the boundary mass H exp(-a^2/2) / (2 sqrt(pi)) is spread
/// linearly in t and capped at 1.
double run_length_cdf(double t, int window, double threshold);

/// Probability of stopping within the first H steps, H exp(-a^2/2) / (2 sqrt(pi)).
double boundary_mass(int window, double threshold);

/// H + integral_H^inf exp(-2 exp(g(t/H, a))) dt, integrated in u = log(t/H).
double theoretical_arl(double threshold, int window);

struct CalibrationResult {
    double target_arl = 0.0;
    int window = 0;
    double threshold = 0.0;
    double achieved_arl = 0.0;
    int solver_iterations = 0;
    std::pair<double, double> bracket{0.0, 0.0};
    /// True when H exp(-a^2/2) > 0.1, i.e. outside the regime H << exp(a^2/2).
    bool regime_warning = false;
};

/// Threshold a with theoretical_arl(a, H) = target_arl to relative 1e-6.
/// Throws InfeasibleError when target_arl <= H and NumericalError if no root
/// can be bracketed.
CalibrationResult solve_threshold(double target_arl, int window);

struct EddBound {
    int dep_order = 0;
    int window = 0;
    double threshold = 0.0;
    double null_sd = 0.0;
    double change_norm = 0.0;
    /// (M+2) + sqrt(a H null_sd) / change_norm; +inf when change_norm is 0.
    double bound = 0.0;

    bool detectable() const noexcept;
};

/// Upper bound on the expected delay for an immediate change.
EddBound edd_upper_bound(double threshold, int window, int dep_order, double null_sd,
                         double change_norm);

/// Smallest Frobenius change sqrt(a/H) * base_norm the rule can detect
/// before the last pre-change observation leaves the window.
double min_detectable_change(double threshold, int window, double base_norm);

}  // namespace covstream
