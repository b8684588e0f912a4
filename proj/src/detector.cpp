#include "covstream/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "covstream/error.hpp"

namespace covstream {
namespace {

int checked_order(const TrainingSummary& summary, const DetectorConfig& config) {
    if (config.window != summary.window) {
        throw ConfigError("detector window " + std::to_string(config.window) +
                          " does not match the training summary window " +
                          std::to_string(summary.window));
    }
    if (config.dep_order && *config.dep_order != summary.m_hat) {
        throw ConfigError("dependence order " + std::to_string(*config.dep_order) +
                          " differs from the summary's " + std::to_string(summary.m_hat) +
                          "; refit the training sample with this order");
    }
    if (!(config.threshold > 0.0)) {
        throw ConfigError("threshold must be positive");
    }
    if (!(summary.null_sd > 0.0)) {
        throw ConfigError("training summary has a non-positive null sd");
    }
    return summary.m_hat;
}

}  // namespace

const char* to_string(StepState s) noexcept {
    switch (s) {
        case StepState::Filling:
            return "filling";
        case StepState::Monitoring:
            return "monitoring";
        case StepState::Alarm:
            return "alarm";
    }
    return "unknown";
}

Detector::Detector(const TrainingSummary& summary, const DetectorConfig& config)
    : config_(config),
      dep_order_(checked_order(summary, config)),
      null_sd_(summary.null_sd),
      mean_(summary.mean),
      plan_(build_weight_plan(config.window, dep_order_)),
      window_(config.window, summary.p) {
    const auto keep = std::min<Eigen::Index>(summary.tail.cols(), config.window - 1);
    if (keep > 0 && summary.tail.rows() != summary.p) {
        throw ConfigError("training tail dimension does not match the summary");
    }
    tail_ = summary.tail.rightCols(keep);
    for (Eigen::Index k = 0; k < tail_.cols(); ++k) {
        window_.push(tail_.col(k), mean_);
    }
}

StepResult Detector::step(VectorRef x) {
    if (alarm_) {
        throw StateError("detector already raised an alarm at step " +
                         std::to_string(alarm_->index));
    }
    window_.push(x, mean_);
    ++consumed_;
    if (config_.keep_history) {
        history_.emplace_back(x);
    }
    StepResult r;
    r.index = consumed_;
    if (consumed_ < config_.evaluate_from) {
        return r;
    }
    const auto stat = statistic_windowed(window_, plan_);
    if (!stat) {
        return r;
    }
    const double z = *stat / null_sd_;
    trajectory_.push_back(z);
    r.std_stat = z;
    if (std::abs(z) > config_.threshold) {
        r.state = StepState::Alarm;
        alarm_ = r;
    } else {
        r.state = StepState::Monitoring;
    }
    return r;
}

StepResult detector_step(Detector& detector, VectorRef x) { return detector.step(x); }

Eigen::MatrixXd Detector::history() const {
    Eigen::MatrixXd h(mean_.size(), tail_.cols() + static_cast<Eigen::Index>(history_.size()));
    h.leftCols(tail_.cols()) = tail_;
    for (std::size_t k = 0; k < history_.size(); ++k) {
        h.col(tail_.cols() + static_cast<Eigen::Index>(k)) = history_[k];
    }
    return h;
}

DetectionReport Detector::report() const {
    DetectionReport rep;
    rep.trajectory = trajectory_;
    rep.history_offset = history_offset();
    if (!alarm_) {
        return rep;
    }
    rep.stopping_time = alarm_->index;
    rep.alarm_statistic = alarm_->std_stat;
    if (config_.keep_history) {
        const auto hist = history();
        if (hist.cols() >= min_plan_length(dep_order_)) {
            const auto loc = localize(hist, mean_, dep_order_);
            rep.tau_hat = loc.tau_hat;
            rep.low_confidence = loc.low_confidence;
            rep.delay_vs_tau_hat = rep.history_offset + alarm_->index - loc.tau_hat;
        }
    }
    return rep;
}

Localization localize(ObservationsRef history, VectorRef mean, int dep_order) {
    const int n = static_cast<int>(history.cols());
    if (n < min_plan_length(dep_order)) {
        throw PreconditionError("localization needs at least " +
                                std::to_string(min_plan_length(dep_order)) +
                                " observations, got " + std::to_string(n));
    }
    const auto curve = profile_curve(squared_gram(history, mean), dep_order);
    // strict comparison keeps the smallest t among ties
    std::size_t best = 0;
    for (std::size_t k = 1; k < curve.size(); ++k) {
        if (curve[k] > curve[best]) {
            best = k;
        }
    }
    Localization loc;
    loc.tau_hat = dep_order + 2 + static_cast<int>(best);
    loc.max_profile = curve[best];

    // on noise the curve swings both ways; a real change dominates its trough
    const double trough = *std::min_element(curve.begin(), curve.end());
    loc.low_confidence = !(loc.max_profile > 0.0) || loc.max_profile <= 5.0 * std::abs(trough);
    return loc;
}

Localization localize(ObservationsRef history, const TrainingSummary& summary) {
    return localize(history, summary.mean, summary.m_hat);
}

}  // namespace covstream
