#include "covstream/calibrate.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "covstream/error.hpp"

namespace covstream {
namespace {

const double kLog4OverSqrtPi = std::log(4.0 / std::sqrt(std::numbers::pi));

// g with u = log(t/H) > 0
double g_of_log(double u, double a) {
    return 2.0 * u + 0.5 * std::log(u) + kLog4OverSqrtPi - a * std::sqrt(2.0 * u);
}

// integrand of the ARL tail in u: H e^u exp(-2 exp(g))
double arl_integrand(double u, double a, double h) {
    if (u <= 0.0) {
        return h;
    }
    const double eg = std::exp(g_of_log(u, a));
    return h * std::exp(u - 2.0 * eg);
}

constexpr double kLowestThreshold = 1e-3;
constexpr double kHighestThreshold = 30.0;

}  // namespace

double g_value(double t_over_h, double threshold) {
    if (!(t_over_h > 1.0)) {
        throw PreconditionError("g_value requires t/H > 1, got " + std::to_string(t_over_h));
    }
    return g_of_log(std::log(t_over_h), threshold);
}

double boundary_mass(int window, double threshold) {
    return static_cast<double>(window) * std::exp(-0.5 * threshold * threshold) /
           (2.0 * std::sqrt(std::numbers::pi));
}

double run_length_cdf(double t, int window, double threshold) {
    if (!(t >= 0.0) || window < 1 || !(threshold > 0.0)) {
        throw PreconditionError("run_length_cdf requires t >= 0, H >= 1, a > 0");
    }
    const double h = window;
    if (t <= h) {
        return std::min(1.0, (t / h) * boundary_mass(window, threshold));
    }
    const double eg = std::exp(g_value(t / h, threshold));
    return -std::expm1(-2.0 * eg);
}

double theoretical_arl(double threshold, int window) {
    if (!(threshold > 0.0) || !std::isfinite(threshold)) {
        throw NumericalError("ARL quadrature needs a positive finite threshold, got " +
                             std::to_string(threshold));
    }
    if (window < 1) {
        throw PreconditionError("window must be positive");
    }
    using Quadrature = boost::math::quadrature::gauss_kronrod<double, 15>;
    const double h = window;
    auto f = [&](double u) { return arl_integrand(u, threshold, h); };

    double total = 0.0;
    double lo = 0.0, hi = 1.0;
    for (int piece = 0; piece < 64; ++piece) {
        double err = 0.0;
        const double part = Quadrature::integrate(f, lo, hi, 20, 1e-12, &err);
        if (!std::isfinite(part)) {
            throw NumericalError("ARL quadrature diverged");
        }
        total += part;
        // stop once past the collapse of the integrand and the tail is negligible
        if (g_of_log(hi, threshold) > 5.0 && part <= 1e-12 * total) {
            return h + total;
        }
        lo = hi;
        hi *= 2.0;
    }
    throw NumericalError("ARL quadrature did not converge for a=" + std::to_string(threshold));
}

CalibrationResult solve_threshold(double target_arl, int window) {
    if (window < 1) {
        throw PreconditionError("window must be positive");
    }
    if (!(target_arl > window)) {
        throw InfeasibleError("target ARL " + std::to_string(target_arl) +
                              " must exceed the window H=" + std::to_string(window));
    }
    const double log_target = std::log(target_arl);
    int evals = 0;
    auto f = [&](double a) {
        ++evals;
        return std::log(theoretical_arl(a, window)) - log_target;
    };

    double lo = 0.5, hi = 12.0;
    double flo = f(lo), fhi = f(hi);
    while (flo > 0.0 && lo > kLowestThreshold) {
        hi = lo;
        fhi = flo;
        lo *= 0.5;
        flo = f(lo);
    }
    while (fhi < 0.0 && hi < kHighestThreshold) {
        lo = hi;
        flo = fhi;
        hi = std::min(kHighestThreshold, hi * 1.5);
        fhi = f(hi);
    }
    if (flo > 0.0 || fhi < 0.0) {
        throw NumericalError("could not bracket a threshold for ARL " + std::to_string(target_arl) +
                             " and H=" + std::to_string(window));
    }

    // ARL is increasing in a: bisection to a narrow bracket, then secant.
    while (hi - lo > 1e-3) {
        const double mid = 0.5 * (lo + hi);
        const double fm = f(mid);
        if (fm < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    const auto bracket = std::make_pair(lo, hi);
    double a = lo, fa = flo;
    double b = hi, fb = fhi;
    double root = std::abs(fa) < std::abs(fb) ? a : b;
    double froot = std::abs(fa) < std::abs(fb) ? fa : fb;
    for (int it = 0; it < 100 && std::abs(std::expm1(froot)) > 1e-7; ++it) {
        double next = b - fb * (b - a) / (fb - fa);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        const double fn = f(next);
        if (fn < 0.0) {
            lo = next;
        } else {
            hi = next;
        }
        a = b;
        fa = fb;
        b = next;
        fb = fn;
        root = next;
        froot = fn;
    }
    if (std::abs(std::expm1(froot)) > 1e-6) {
        throw NumericalError("threshold solver failed to reach relative residual 1e-6");
    }

    CalibrationResult r;
    r.target_arl = target_arl;
    r.window = window;
    r.threshold = root;
    r.achieved_arl = target_arl * std::exp(froot);
    r.solver_iterations = evals;
    r.bracket = bracket;
    const double regime = window * std::exp(-0.5 * root * root);
    r.regime_warning = regime > 0.1;
    if (r.regime_warning) {
        warn("H exp(-a^2/2) = " + std::to_string(regime) +
             " exceeds 0.1; the ARL approximation assumes H << exp(a^2/2)");
    }
    return r;
}

bool EddBound::detectable() const noexcept { return std::isfinite(bound); }

EddBound edd_upper_bound(double threshold, int window, int dep_order, double null_sd,
                         double change_norm) {
    if (!(threshold > 0.0) || window < 1 || dep_order < 0 || !(null_sd > 0.0) ||
        !(change_norm >= 0.0)) {
        throw PreconditionError("edd_upper_bound requires positive a, H, sd and change norm");
    }
    EddBound e;
    e.dep_order = dep_order;
    e.window = window;
    e.threshold = threshold;
    e.null_sd = null_sd;
    e.change_norm = change_norm;
    if (change_norm == 0.0) {
        e.bound = std::numeric_limits<double>::infinity();
        return e;
    }
    e.bound = (dep_order + 2.0) + std::sqrt(threshold * window * null_sd) / change_norm;
    return e;
}

double min_detectable_change(double threshold, int window, double base_norm) {
    if (!(threshold > 0.0) || window < 1 || !(base_norm > 0.0)) {
        throw PreconditionError("min_detectable_change requires positive a, H and base norm");
    }
    return std::sqrt(threshold / window) * base_norm;
}

}  // namespace covstream
