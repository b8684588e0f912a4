#include "scenario.hpp"

#include <cstdio>
#include <sstream>

#include "covstream/calibrate.hpp"
#include "covstream/error.hpp"

namespace covstream::cli {
namespace {

template <typename T>
T field(const Json& j, const char* key, T fallback) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("scenario field '") + key + "' has the wrong type");
    }
}

template <typename T>
std::optional<T> optional_field(const Json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return field<T>(j, key, T{});
}

ScenarioCell parse_cell(const Json& j, std::size_t index) {
    ScenarioCell c;
    c.p = field(j, "p", c.p);
    c.dep_order = field(j, "dep_order", c.dep_order);
    c.window = field(j, "window", c.window);
    c.threshold = optional_field<double>(j, "threshold");
    c.target_arl = optional_field<double>(j, "target_arl");
    c.base = field(j, "base", c.base);
    c.base_rho = field(j, "base_rho", c.base_rho);
    if (auto m = optional_field<std::string>(j, "change_model")) {
        c.change_model = parse_change_model(*m);
    }
    c.change_rho = field(j, "change_rho", c.change_rho);
    c.reference = optional_field<double>(j, "reference");

    const std::string where = "scenario cell " + std::to_string(index);
    if (c.threshold.has_value() == c.target_arl.has_value()) {
        throw ConfigError(where + ": give exactly one of threshold and target_arl");
    }
    if (c.base != "toeplitz" && c.base != "identity") {
        throw ConfigError(where + ": base must be 'toeplitz' or 'identity'");
    }
    if (c.p < 1 || c.dep_order < 0 || c.window < min_plan_length(c.dep_order)) {
        throw ConfigError(where + ": need p >= 1, dep_order >= 0, window >= 2*dep_order+5");
    }
    return c;
}

GeneratorSpec make_spec(const Scenario& s, const ScenarioCell& c, std::uint64_t q_seed) {
    auto spec = c.base == "identity" ? identity_design(c.p, c.dep_order)
                                     : toeplitz_design(c.p, c.dep_order, c.base_rho);
    spec.innovation = s.innovation;
    if (s.study == Study::Edd) {
        spec.post_change = make_post_change(*c.change_model, c.p, c.change_rho, s.n0, q_seed);
    }
    return spec;
}

}  // namespace

Scenario parse_scenario(const Json& j) {
    if (!j.is_object()) {
        throw ConfigError("scenario must be a JSON object");
    }
    Scenario s;
    const auto study = field<std::string>(j, "study", "arl");
    if (study == "arl") {
        s.study = Study::Arl;
    } else if (study == "edd") {
        s.study = Study::Edd;
    } else {
        throw ConfigError("scenario study must be 'arl' or 'edd', got '" + study + "'");
    }
    s.n0 = field(j, "n0", s.n0);
    s.replicates = field(j, "replicates", s.replicates);
    s.seed = field<std::uint64_t>(j, "seed", s.seed);
    const auto innov = field<std::string>(j, "innovation", "gaussian");
    if (innov == "gaussian") {
        s.innovation = Innovation::Gaussian;
    } else if (innov == "student_t") {
        s.innovation = Innovation::StudentT;
    } else {
        throw ConfigError("scenario innovation must be 'gaussian' or 'student_t'");
    }
    s.use_true_order = field(j, "use_true_order", s.use_true_order);
    s.center = field(j, "center", s.center);
    s.max_steps = field<std::int64_t>(j, "max_steps", s.max_steps);
    if (s.n0 < 5 || s.replicates < 0) {
        throw ConfigError("scenario needs n0 >= 5 and replicates >= 0");
    }
    if (!j.contains("cells") || !j.at("cells").is_array() || j.at("cells").empty()) {
        throw ConfigError("scenario needs a non-empty 'cells' array");
    }
    const Json defaults = j.value("defaults", Json::object());
    std::size_t index = 0;
    for (const auto& raw : j.at("cells")) {
        Json merged = defaults;
        merged.update(raw);
        auto cell = parse_cell(merged, index++);
        if (s.study == Study::Edd && !cell.change_model) {
            throw ConfigError("edd scenario cell " + std::to_string(index - 1) +
                              " needs change_model");
        }
        s.cells.push_back(std::move(cell));
    }
    return s;
}

std::vector<ScenarioRow> run_scenario(const Scenario& s, int threads) {
    std::vector<ScenarioRow> rows;
    TrainingRecipe recipe;
    recipe.n0 = s.n0;
    recipe.use_true_order = s.use_true_order;
    recipe.center = s.center;
    for (std::size_t k = 0; k < s.cells.size(); ++k) {
        const auto& c = s.cells[k];
        ScenarioRow row;
        row.cell = c;
        row.threshold = c.threshold ? *c.threshold : solve_threshold(*c.target_arl, c.window).threshold;
        const auto cell_seed = replicate_seed(s.seed, 1'000'000 + k);
        const auto spec = make_spec(s, c, cell_seed);
        if (s.study == Study::Arl) {
            row.theory = theoretical_arl(row.threshold, c.window);
        } else {
            row.theory = edd_upper_bound(row.threshold, c.window, c.dep_order,
                                         population_null_sd(spec, c.window),
                                         population_change_norm(spec))
                             .bound;
        }
        if (s.replicates > 0) {
            McOptions opt;
            opt.replicates = s.replicates;
            opt.seed = cell_seed;
            opt.threads = threads;
            opt.max_steps = s.max_steps;
            row.mc = s.study == Study::Arl
                         ? monte_carlo_arl(spec, recipe, row.threshold, c.window, opt)
                         : monte_carlo_edd(spec, recipe, row.threshold, c.window, opt);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string format_table(const Scenario& s, const std::vector<ScenarioRow>& rows) {
    std::ostringstream out;
    char line[256];
    const bool edd = s.study == Study::Edd;
    std::snprintf(line, sizeof line, "%-6s%6s%4s%6s%8s%12s%12s%10s%7s%11s\n",
                  edd ? "model" : "", "p", "M", "H", "a", edd ? "bound" : "ARL(theory)",
                  "MC mean", "MC se", "cens", "reference");
    out << line;
    for (const auto& r : rows) {
        std::string tag;
        if (edd) {
            char t[16];
            std::snprintf(t, sizeof t, "%s/%.2g", to_string(*r.cell.change_model).c_str(),
                          r.cell.change_rho);
            tag = t;
        }
        char mc_mean[24] = "-", mc_se[24] = "-", cens[16] = "-", ref[24] = "-";
        if (r.mc) {
            std::snprintf(mc_mean, sizeof mc_mean, "%.2f", r.mc->mean);
            std::snprintf(mc_se, sizeof mc_se, "%.2f", r.mc->std_error);
            std::snprintf(cens, sizeof cens, "%d%s", r.mc->censored, r.mc->unreliable ? "!" : "");
        }
        if (r.cell.reference) {
            std::snprintf(ref, sizeof ref, "%.2f", *r.cell.reference);
        }
        std::snprintf(line, sizeof line, "%-6s%6d%4d%6d%8.3f%12.2f%12s%10s%7s%11s\n",
                      tag.c_str(), r.cell.p, r.cell.dep_order, r.cell.window, r.threshold,
                      r.theory, mc_mean, mc_se, cens, ref);
        out << line;
    }
    return out.str();
}

Json rows_to_json(const Scenario& s, const std::vector<ScenarioRow>& rows) {
    Json out_rows = Json::array();
    for (const auto& r : rows) {
        Json row{{"p", r.cell.p},
                 {"dep_order", r.cell.dep_order},
                 {"window", r.cell.window},
                 {"threshold", r.threshold}};
        if (s.study == Study::Edd) {
            row["change_model"] = to_string(*r.cell.change_model);
            row["change_rho"] = r.cell.change_rho;
            row["edd_bound"] = r.theory;
        } else {
            row["theoretical_arl"] = r.theory;
        }
        row["monte_carlo"] = r.mc ? to_json(*r.mc) : Json(nullptr);
        row["reference"] = r.cell.reference ? Json(*r.cell.reference) : Json(nullptr);
        out_rows.push_back(std::move(row));
    }
    return Json{{"study", s.study == Study::Arl ? "arl" : "edd"},
                {"n0", s.n0},
                {"replicates", s.replicates},
                {"seed", s.seed},
                {"rows", out_rows}};
}

}  // namespace covstream::cli
