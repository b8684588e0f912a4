#pragma once

#include <json.hpp>

#include "covstream/calibrate.hpp"
#include "covstream/dependence.hpp"
#include "covstream/detector.hpp"
#include "covstream/simulate.hpp"

namespace covstream {

using Json = nlohmann::ordered_json;

Json to_json(const TraceTable& t);
TraceTable trace_table_from_json(const Json& j);

/// Fields: n0, p, mean, m_hat, trace_table, window, null_sd, stationarity,
/// tail (rows are observations).
Json to_json(const TrainingSummary& s);
/// Throws InputError on missing or inconsistent fields.
TrainingSummary training_summary_from_json(const Json& j);

Json to_json(const StationarityResult& r);
Json to_json(const CalibrationResult& r);
Json to_json(const EddBound& e);
Json to_json(const DetectionReport& r);
Json to_json(const StepResult& r);
Json to_json(const McResult& r, bool include_values = false);

}  // namespace covstream
