#include <doctest.h>

#include <cmath>

#include "covstream/detector.hpp"
#include "covstream/error.hpp"
#include "covstream/simulate.hpp"
#include "support.hpp"

using namespace covstream;

namespace {

TrainingSummary white_summary(int p, int n0, int window, std::uint64_t seed) {
    TrainingConfig cfg;
    cfg.window = window;
    cfg.dep_order_override = 0;
    return fit_training(testing::random_normal(p, n0, seed), cfg);
}

}  // namespace

TEST_CASE("a primed detector evaluates the first new observation") {
    const auto s = white_summary(5, 120, 40, 1);
    Detector d(s, DetectorConfig{40, 100.0});
    CHECK(d.history_offset() == 39);
    const auto r = d.step(testing::random_normal(5, 1, 2).col(0));
    CHECK(r.index == 1);
    CHECK(r.state == StepState::Monitoring);
    CHECK(r.std_stat.has_value());
}

TEST_CASE("an unprimed detector fills the window first") {
    TrainingConfig cfg;
    cfg.window = 20;
    cfg.dep_order_override = 0;
    cfg.tail_length = 0;
    const auto s = fit_training(testing::random_normal(3, 60, 3), cfg);
    Detector d(s, DetectorConfig{20, 100.0});
    const auto x = testing::random_normal(3, 20, 4);
    for (int k = 0; k < 19; ++k) {
        const auto r = d.step(x.col(k));
        CHECK(r.state == StepState::Filling);
        CHECK_FALSE(r.std_stat.has_value());
    }
    CHECK(d.step(x.col(19)).state == StepState::Monitoring);
    CHECK(d.trajectory().size() == 1);
}

TEST_CASE("evaluate_from delays the first check") {
    const auto s = white_summary(3, 80, 20, 5);
    DetectorConfig cfg{20, 1e-9};
    cfg.evaluate_from = 4;
    Detector d(s, cfg);
    const auto x = testing::random_normal(3, 4, 6);
    for (int k = 0; k < 3; ++k) {
        CHECK(d.step(x.col(k)).state == StepState::Filling);
    }
    CHECK(d.step(x.col(3)).state == StepState::Alarm);
    CHECK(d.report().stopping_time == 4);
}

TEST_CASE("configuration mismatches are rejected") {
    const auto s = white_summary(4, 100, 30, 7);
    CHECK_THROWS_AS(Detector(s, DetectorConfig{31, 3.0}), ConfigError);
    DetectorConfig wrong_m{30, 3.0};
    wrong_m.dep_order = 2;
    CHECK_THROWS_AS(Detector(s, wrong_m), ConfigError);
    CHECK_THROWS_AS(Detector(s, DetectorConfig{30, -1.0}), ConfigError);
    Detector d(s, DetectorConfig{30, 3.0});
    CHECK_THROWS_AS(d.step(Eigen::VectorXd::Zero(5)), InputError);
}

TEST_CASE("a stream equal to the training mean never alarms") {
    auto s = white_summary(4, 100, 30, 8);
    s.tail.colwise() = s.mean;
    Detector d(s, DetectorConfig{30, 0.5});
    for (int k = 0; k < 300; ++k) {
        const auto r = d.step(s.mean);
        REQUIRE(r.state == StepState::Monitoring);
        CHECK(std::abs(*r.std_stat) < 1e-12);
    }
    CHECK_FALSE(d.report().stopping_time.has_value());
}

TEST_CASE("trajectory equals batch recomputation on the window") {
    const int p = 6, h = 25;
    const auto spec = toeplitz_design(p, 1);
    const auto train = gen_stream(spec, 150, 11);
    TrainingConfig cfg;
    cfg.window = h;
    cfg.dep_order_override = 1;
    const auto s = fit_training(train, cfg);
    Detector d(s, DetectorConfig{h, 1e6});
    const auto stream = gen_stream(spec, 200, 12);
    const auto plan = build_weight_plan(h, 1);
    Eigen::MatrixXd all(p, s.tail.cols() + stream.cols());
    all << s.tail, stream;
    for (int k = 0; k < stream.cols(); ++k) {
        const auto r = d.step(stream.col(k));
        const auto end = s.tail.cols() + k + 1;
        const double batch = statistic_batch(all.middleCols(end - h, h), s.mean, plan) / s.null_sd;
        REQUIRE(r.std_stat.has_value());
        CHECK(*r.std_stat == doctest::Approx(batch).epsilon(1e-10).scale(1.0));
    }
    CHECK((d.history() - all).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("alarm fires at the first exceedance and the detector then refuses input") {
    const auto s = white_summary(5, 120, 30, 13);
    Detector probe(s, DetectorConfig{30, 1e6});
    const auto stream = testing::random_normal(5, 60, 14);
    std::vector<double> z;
    for (int k = 0; k < 60; ++k) {
        z.push_back(*probe.step(stream.col(k)).std_stat);
    }
    // threshold just under the 10th statistic's magnitude, above all earlier ones
    double prior = 0.0;
    for (int k = 0; k < 9; ++k) {
        prior = std::max(prior, std::abs(z[k]));
    }
    int first = 9;
    while (std::abs(z[first]) <= prior) {
        ++first;
    }
    const double thr = 0.5 * (prior + std::abs(z[first]));
    Detector d(s, DetectorConfig{30, thr});
    StepResult last;
    for (int k = 0; k <= first; ++k) {
        last = d.step(stream.col(k));
    }
    CHECK(last.state == StepState::Alarm);
    CHECK(last.index == first + 1);
    CHECK(d.alarmed());
    CHECK_THROWS_AS(d.step(stream.col(first + 1)), StateError);
    const auto rep = d.report();
    CHECK(rep.stopping_time == first + 1);
    CHECK(*rep.alarm_statistic == doctest::Approx(z[first]));
    CHECK(rep.trajectory.size() == static_cast<std::size_t>(first + 1));
}

TEST_CASE("runs are deterministic") {
    const auto s = white_summary(4, 100, 30, 15);
    const auto stream = testing::random_normal(4, 100, 16);
    Detector a(s, DetectorConfig{30, 2.0});
    Detector b(s, DetectorConfig{30, 2.0});
    for (int k = 0; k < 100 && !a.alarmed(); ++k) {
        a.step(stream.col(k));
        b.step(stream.col(k));
    }
    CHECK(a.trajectory() == b.trajectory());
    CHECK(a.report().stopping_time == b.report().stopping_time);
}

TEST_CASE("localization finds a clear variance change") {
    const int p = 20;
    Eigen::MatrixXd x = testing::random_normal(p, 120, 17);
    x.rightCols(60) *= 2.5;
    const auto loc = localize(x, Eigen::VectorXd::Zero(p), 0);
    CHECK(std::abs(loc.tau_hat - 60) <= 3);
    CHECK(loc.max_profile > 0.0);
    CHECK_FALSE(loc.low_confidence);
}

TEST_CASE("localization ties go to the earliest split") {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 20);
    const auto loc = localize(x, Eigen::VectorXd::Ones(2), 1);
    CHECK(loc.tau_hat == 3);
    CHECK(loc.max_profile == 0.0);
    CHECK(loc.low_confidence);
    CHECK_THROWS_AS(localize(Eigen::MatrixXd::Ones(2, 6), Eigen::VectorXd::Ones(2), 1),
                    PreconditionError);
}

TEST_CASE("report localizes in history coordinates") {
    const int p = 30, h = 40;
    const auto s = white_summary(p, 200, h, 18);
    Detector d(s, DetectorConfig{h, 4.0});
    Eigen::MatrixXd stream = testing::random_normal(p, 400, 19) * 3.0;
    for (int k = 0; k < stream.cols() && !d.alarmed(); ++k) {
        d.step(stream.col(k));
    }
    REQUIRE(d.alarmed());
    const auto rep = d.report();
    REQUIRE(rep.tau_hat.has_value());
    CHECK(rep.history_offset == h - 1);
    CHECK(std::abs(*rep.tau_hat - rep.history_offset) <= 5);
    CHECK(*rep.delay_vs_tau_hat == rep.history_offset + *rep.stopping_time - *rep.tau_hat);
}
