#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "covstream/serialize.hpp"
#include "covstream/simulate.hpp"

namespace covstream::cli {

enum class Study { Arl, Edd };

struct ScenarioCell {
    int p = 200;
    int dep_order = 0;
    int window = 100;
    std::optional<double> threshold;
    std::optional<double> target_arl;
    std::string base = "toeplitz";
    double base_rho = 0.6;
    std::optional<ChangeModel> change_model;
    double change_rho = 0.8;
    std::optional<double> reference;
};

struct Scenario {
    Study study = Study::Arl;
    int n0 = 200;
    int replicates = 100;
    std::uint64_t seed = 1;
    Innovation innovation = Innovation::Gaussian;
    bool use_true_order = true;
    bool center = false;
    std::int64_t max_steps = 0;
    std::vector<ScenarioCell> cells;
};

/// Cells inherit every field of "defaults" they do not set themselves.
/// Throws ConfigError on unknown values or missing fields.
Scenario parse_scenario(const Json& j);

struct ScenarioRow {
    ScenarioCell cell;
    double threshold = 0.0;
    /// Theoretical ARL (arl studies) or EDD upper bound (edd studies).
    double theory = 0.0;
    std::optional<McResult> mc;
};

/// Theoretical columns always; Monte Carlo columns when replicates > 0.
std::vector<ScenarioRow> run_scenario(const Scenario& s, int threads);

std::string format_table(const Scenario& s, const std::vector<ScenarioRow>& rows);
Json rows_to_json(const Scenario& s, const std::vector<ScenarioRow>& rows);

}  // namespace covstream::cli
