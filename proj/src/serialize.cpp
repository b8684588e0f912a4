#include "covstream/serialize.hpp"

#include <cmath>
#include <string>

#include "covstream/error.hpp"

namespace covstream {
namespace {

Json number_or_null(double v) {
    if (!std::isfinite(v)) {
        return nullptr;
    }
    return v;
}

template <typename T>
T required(const Json& j, const char* key) {
    if (!j.contains(key)) {
        throw InputError(std::string("training summary is missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("training summary field '") + key + "': " + e.what());
    }
}

}  // namespace

Json to_json(const TraceTable& t) {
    Json entries = Json::array();
    const int m = t.dep_order();
    for (int h1 = -m; h1 <= m; ++h1) {
        for (int h2 = -m; h2 <= m; ++h2) {
            entries.push_back(Json::array({h1, h2, t.at(h1, h2)}));
        }
    }
    return Json{{"dep_order", m}, {"entries", entries}};
}

TraceTable trace_table_from_json(const Json& j) {
    TraceTable t(required<int>(j, "dep_order"));
    const auto& entries = j.at("entries");
    for (const auto& e : entries) {
        if (!e.is_array() || e.size() != 3) {
            throw InputError("trace table entries must be [h1, h2, value] triples");
        }
        t.set(e[0].get<int>(), e[1].get<int>(), e[2].get<double>());
    }
    return t;
}

Json to_json(const StationarityResult& r) {
    return Json{{"statistic", r.statistic}, {"z_alpha", r.z_alpha}, {"rejected", r.rejected}};
}

Json to_json(const TrainingSummary& s) {
    Json tail = Json::array();
    for (Eigen::Index c = 0; c < s.tail.cols(); ++c) {
        tail.push_back(std::vector<double>(s.tail.col(c).data(), s.tail.col(c).data() + s.tail.rows()));
    }
    return Json{
        {"n0", s.n0},
        {"p", s.p},
        {"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
        {"m_hat", s.m_hat},
        {"trace_table", to_json(s.trace_table)},
        {"window", s.window},
        {"null_sd", s.null_sd},
        {"stationarity", to_json(s.stationarity)},
        {"tail", tail},
    };
}

TrainingSummary training_summary_from_json(const Json& j) {
    if (!j.is_object()) {
        throw InputError("training summary must be a JSON object");
    }
    TrainingSummary s;
    s.n0 = required<int>(j, "n0");
    s.p = required<int>(j, "p");
    const auto mean = required<std::vector<double>>(j, "mean");
    if (static_cast<int>(mean.size()) != s.p) {
        throw InputError("training summary mean has " + std::to_string(mean.size()) +
                         " entries, expected p=" + std::to_string(s.p));
    }
    s.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    s.m_hat = required<int>(j, "m_hat");
    if (!j.contains("trace_table")) {
        throw InputError("training summary is missing field 'trace_table'");
    }
    s.trace_table = trace_table_from_json(j.at("trace_table"));
    s.window = required<int>(j, "window");
    s.null_sd = required<double>(j, "null_sd");
    if (!(s.null_sd > 0.0)) {
        throw InputError("training summary null_sd must be positive");
    }
    if (j.contains("stationarity")) {
        const auto& st = j.at("stationarity");
        s.stationarity.statistic = required<double>(st, "statistic");
        s.stationarity.z_alpha = required<double>(st, "z_alpha");
        s.stationarity.rejected = required<bool>(st, "rejected");
    }
    const auto tail = j.value("tail", std::vector<std::vector<double>>{});
    s.tail.resize(s.p, static_cast<Eigen::Index>(tail.size()));
    for (std::size_t c = 0; c < tail.size(); ++c) {
        if (static_cast<int>(tail[c].size()) != s.p) {
            throw InputError("training summary tail row " + std::to_string(c) + " has " +
                             std::to_string(tail[c].size()) + " values, expected " +
                             std::to_string(s.p));
        }
        s.tail.col(static_cast<Eigen::Index>(c)) =
            Eigen::Map<const Eigen::VectorXd>(tail[c].data(), s.p);
    }
    return s;
}

Json to_json(const CalibrationResult& r) {
    return Json{
        {"target_arl", r.target_arl},
        {"window", r.window},
        {"threshold", r.threshold},
        {"achieved_arl", r.achieved_arl},
        {"solver_iterations", r.solver_iterations},
        {"bracket", {r.bracket.first, r.bracket.second}},
        {"regime_warning", r.regime_warning},
    };
}

Json to_json(const EddBound& e) {
    return Json{
        {"m", e.dep_order},
        {"window", e.window},
        {"threshold", e.threshold},
        {"null_sd", e.null_sd},
        {"change_norm", e.change_norm},
        {"bound", number_or_null(e.bound)},
    };
}

Json to_json(const StepResult& r) {
    Json j{{"index", r.index}};
    j["std_stat"] = r.std_stat ? Json(*r.std_stat) : Json(nullptr);
    j["state"] = to_string(r.state);
    return j;
}

Json to_json(const DetectionReport& r) {
    Json j;
    j["stopping_time"] = r.stopping_time ? Json(*r.stopping_time) : Json(nullptr);
    j["alarm_statistic"] = r.alarm_statistic ? Json(*r.alarm_statistic) : Json(nullptr);
    j["trajectory"] = r.trajectory;
    j["tau_hat"] = r.tau_hat ? Json(*r.tau_hat) : Json(nullptr);
    j["delay_vs_tau_hat"] = r.delay_vs_tau_hat ? Json(*r.delay_vs_tau_hat) : Json(nullptr);
    j["low_confidence"] = r.low_confidence;
    j["history_offset"] = r.history_offset;
    return j;
}

Json to_json(const McResult& r, bool include_values) {
    Json j{
        {"replicates", r.replicates},
        {"mean", r.mean},
        {"std_error", r.std_error},
        {"censored", r.censored},
        {"unreliable", r.unreliable},
    };
    if (include_values) {
        j["values"] = r.values;
    }
    return j;
}

}  // namespace covstream
