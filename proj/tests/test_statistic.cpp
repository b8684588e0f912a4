#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "covstream/error.hpp"
#include "covstream/statistic.hpp"
#include "covstream/weights.hpp"
#include "support.hpp"

using namespace covstream;

namespace {

Eigen::MatrixXd scalar_series(std::initializer_list<double> v) {
    Eigen::MatrixXd x(1, static_cast<Eigen::Index>(v.size()));
    Eigen::Index k = 0;
    for (double e : v) {
        x(0, k++) = e;
    }
    return x;
}

}  // namespace

TEST_CASE("constant input gives a zero statistic") {
    const int n = 30;
    Eigen::MatrixXd x = Eigen::MatrixXd::Constant(4, n, 2.5);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
    for (int m = 0; m <= 3; ++m) {
        const auto plan = build_weight_plan(n, m);
        CHECK(std::abs(statistic_batch(x, zero, plan)) < 1e-10);
    }
}

TEST_CASE("frozen scalar series value") {
    const auto x = scalar_series({1, -1, 2, 0, 1, -2, 1, 0});
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    const auto plan = build_weight_plan(8, 0);
    CHECK(statistic_batch(x, zero, plan) == doctest::Approx(-271.0 / 320.0).epsilon(1e-13));
    CHECK(profile_statistic(x, zero, 0, 4) == doctest::Approx(-0.375).epsilon(1e-13));
}

TEST_CASE("batch statistic agrees with the brute-force oracle") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 25; ++rep) {
        const int p = std::uniform_int_distribution<int>(1, 8)(rng);
        const int m = std::uniform_int_distribution<int>(0, 3)(rng);
        const int n = std::uniform_int_distribution<int>(2 * m + 5, 50)(rng);
        const auto x = testing::random_normal(p, n, rng());
        const Eigen::VectorXd mean = x.rowwise().mean();
        const auto plan = build_weight_plan(n, m);
        const double oracle = testing::naive_statistic(x, mean, testing::naive_weights(n, m));
        CAPTURE(n);
        CAPTURE(m);
        CHECK(statistic_batch(x, mean, plan) ==
              doctest::Approx(oracle).epsilon(1e-10).scale(1.0));
    }
}

TEST_CASE("scaling observations by c scales the statistic by c^4") {
    const auto x = testing::random_normal(5, 40, 99);
    const Eigen::VectorXd mean = x.rowwise().mean();
    const auto plan = build_weight_plan(40, 1);
    const double base = statistic_batch(x, mean, plan);
    for (double c : {0.5, 3.0, -2.0}) {
        const Eigen::MatrixXd xs = c * x;
        const Eigen::VectorXd ms = c * mean;
        CHECK(statistic_batch(xs, ms, plan) ==
              doctest::Approx(std::pow(c, 4) * base).epsilon(1e-10));
    }
}

TEST_CASE("statistic_batch validates shapes") {
    const auto x = testing::random_normal(3, 20, 1);
    const auto plan = build_weight_plan(20, 0);
    CHECK_THROWS_AS(statistic_batch(x, Eigen::VectorXd::Zero(2), plan), InputError);
    CHECK_THROWS_AS(statistic_batch(x, Eigen::VectorXd::Zero(3), build_weight_plan(21, 0)),
                    ConfigError);
}

TEST_CASE("window push keeps the last H centered observations") {
    WindowState w(5, 2);
    const Eigen::Vector2d mean(1.0, -1.0);
    CHECK_FALSE(w.full());
    for (int k = 1; k <= 7; ++k) {
        window_push(w, Eigen::Vector2d(k, 0.0), mean);
    }
    CHECK(w.full());
    CHECK(w.count() == 7);
    CHECK(w.size() == 5);
    const auto c = w.contents();
    for (int k = 0; k < 5; ++k) {
        CHECK(c(0, k) == doctest::Approx(double(k + 3) - 1.0));
        CHECK(c(1, k) == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(w.push(Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()), InputError);
    CHECK_THROWS_AS(w.push(Eigen::Vector2d(std::nan(""), 0.0), mean), InputError);
}

TEST_CASE("windowed statistic is absent until the window is full") {
    WindowState w(9, 1);
    const auto plan = build_weight_plan(9, 0);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(1);
    for (int k = 0; k < 8; ++k) {
        w.push(Eigen::VectorXd::Constant(1, k), zero);
        CHECK_FALSE(statistic_windowed(w, plan).has_value());
    }
    w.push(Eigen::VectorXd::Constant(1, 1.0), zero);
    CHECK(statistic_windowed(w, plan).has_value());
    CHECK_THROWS_AS(statistic_windowed(w, build_weight_plan(10, 0)), ConfigError);
}

TEST_CASE("incremental statistic matches batch recomputation at every step") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 6; ++rep) {
        const int p = std::uniform_int_distribution<int>(1, 20)(rng);
        const int m = std::uniform_int_distribution<int>(0, 3)(rng);
        const int h = std::uniform_int_distribution<int>(2 * m + 5, 60)(rng);
        const int steps = 10 * h + 7;
        const auto x = testing::random_normal(p, steps, rng());
        const Eigen::VectorXd mean = testing::random_normal(p, 1, rng()).col(0) * 0.3;
        const auto plan = build_weight_plan(h, m);
        WindowState w(h, p);
        double worst = 0.0;
        for (int k = 0; k < steps; ++k) {
            w.push(x.col(k), mean);
            const auto inc = statistic_windowed(w, plan);
            if (k + 1 < h) {
                REQUIRE_FALSE(inc.has_value());
                continue;
            }
            REQUIRE(inc.has_value());
            const double batch = statistic_batch(x.middleCols(k + 1 - h, h), mean, plan);
            worst = std::max(worst, std::abs(*inc - batch) / std::max(1.0, std::abs(batch)));
        }
        CAPTURE(p);
        CAPTURE(h);
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("profile curve agrees with the direct split-point sum") {
    const int n = 23;
    for (int m = 0; m <= 2; ++m) {
        const auto x = testing::random_normal(3, n, 40 + m);
        const Eigen::VectorXd mean = x.rowwise().mean();
        const auto curve = profile_curve(squared_gram(x, mean), m);
        REQUIRE(curve.size() == static_cast<std::size_t>(n - 2 * m - 3));
        for (int t = m + 2; t <= n - m - 2; ++t) {
            CHECK(curve[static_cast<std::size_t>(t - m - 2)] ==
                  doctest::Approx(profile_statistic(x, mean, m, t)).epsilon(1e-10));
        }
        double total = 0.0;
        for (double v : curve) {
            total += v;
        }
        CHECK(total == doctest::Approx(statistic_batch(x, mean, build_weight_plan(n, m)))
                           .epsilon(1e-10));
    }
    const auto x = testing::random_normal(1, 10, 2);
    CHECK_THROWS_AS(profile_statistic(x, Eigen::VectorXd::Zero(1), 0, 1), PreconditionError);
}

TEST_CASE("null mean of the statistic is zero") {
    const int h = 40, p = 5, reps = 2000;
    const auto plan = build_weight_plan(h, 0);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p);
    std::vector<double> vals;
    vals.reserve(reps);
    for (int r = 0; r < reps; ++r) {
        vals.push_back(statistic_batch(testing::random_normal(p, h, 1000 + r), zero, plan));
    }
    const auto ms = testing::mean_se(vals);
    CHECK(std::abs(ms.mean) < 4.0 * ms.se);
}

TEST_CASE("a covariance shift in the second half moves the statistic up") {
    const int h = 60, p = 10;
    const auto plan = build_weight_plan(h, 0);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p);
    std::vector<double> shifted;
    for (int r = 0; r < 200; ++r) {
        Eigen::MatrixXd x = testing::random_normal(p, h, 5000 + r);
        x.rightCols(h / 2) *= 2.0;
        shifted.push_back(statistic_batch(x, zero, plan));
    }
    const auto ms = testing::mean_se(shifted);
    CHECK(ms.mean > 10.0 * ms.se);
}
