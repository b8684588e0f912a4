#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "covstream/dependence.hpp"
#include "covstream/statistic.hpp"
#include "covstream/weights.hpp"

namespace covstream {

struct DetectorConfig {
    int window = 100;
    double threshold = 3.58;
    /// Must equal the summary's m_hat when set; the null sd depends on it.
    std::optional<int> dep_order;
    /// First post-training index (1-based) at which the rule is checked.
    std::int64_t evaluate_from = 1;
    /// Keep every post-training observation so the change can be localized.
    bool keep_history = true;
};

enum class StepState { Filling, Monitoring, Alarm };

const char* to_string(StepState s) noexcept;

struct StepResult {
    StepState state = StepState::Filling;
    /// Number of post-training observations consumed so far.
    std::int64_t index = 0;
    /// J / sigma for the current window; absent while filling.
    std::optional<double> std_stat;
};

struct Localization {
    /// Split point in the pulled-out history (1-based, last pre-change index).
    int tau_hat = 0;
    double max_profile = 0.0;
    /// Maximum not positive, or at most five times the deepest trough.
    bool low_confidence = false;
};

struct DetectionReport {
    std::optional<std::int64_t> stopping_time;
    std::optional<double> alarm_statistic;
    std::vector<double> trajectory;
    /// Index of the localized change within the history used for localization.
    std::optional<int> tau_hat;
    /// Alarm position minus tau_hat, both in history coordinates.
    std::optional<std::int64_t> delay_vs_tau_hat;
    bool low_confidence = false;
    /// Number of leading history entries that came from the training sample.
    int history_offset = 0;
};

/// Streaming stopping rule: alarm at the first post-training time the
/// standardized windowed statistic exceeds the threshold in absolute value.
///
/// The window is primed with the training tail stored in the summary so the
/// first new observation is evaluated immediately when the tail holds H-1
/// points. One detector per stream; not thread safe, but movable.
class Detector {
public:
    /// Throws ConfigError on a window or dependence-order mismatch with the summary.
    Detector(const TrainingSummary& summary, const DetectorConfig& config);

    /// Throws StateError after an alarm and InputError on a dimension mismatch.
    StepResult step(VectorRef x);

    bool alarmed() const noexcept { return alarm_.has_value(); }
    std::int64_t consumed() const noexcept { return consumed_; }
    const std::vector<double>& trajectory() const noexcept { return trajectory_; }
    const DetectorConfig& config() const noexcept { return config_; }
    int dep_order() const noexcept { return dep_order_; }
    double null_sd() const noexcept { return null_sd_; }

    /// Training tail followed by every post-training observation (raw).
    Eigen::MatrixXd history() const;
    int history_offset() const noexcept { return static_cast<int>(tail_.cols()); }

    /// Report of the run so far; localizes the change when an alarm occurred
    /// and history was kept.
    DetectionReport report() const;

private:
    DetectorConfig config_;
    int dep_order_;
    double null_sd_;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd tail_;
    WeightPlan plan_;
    WindowState window_;
    std::int64_t consumed_ = 0;
    std::vector<double> trajectory_;
    std::vector<Eigen::VectorXd> history_;
    std::optional<StepResult> alarm_;
};

/// Free-function form of Detector::step.
StepResult detector_step(Detector& detector, VectorRef x);

/// argmax over t = M+2..n-M-2 of the split-point statistic over `history`,
/// ties broken towards the smallest t. Throws PreconditionError when the
/// history is too short for any split.
Localization localize(ObservationsRef history, VectorRef mean, int dep_order);

/// Uses the summary's mean and dependence order.
Localization localize(ObservationsRef history, const TrainingSummary& summary);

}  // namespace covstream
