// covstream command line: calibrate, train, monitor, localize, simulate, generate.
//
// Exit codes: 0 ok / no alarm, 1 usage or input error, 2 alarm,
// 3 training stationarity rejected.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "covstream/calibrate.hpp"
#include "covstream/csv.hpp"
#include "covstream/detector.hpp"
#include "covstream/error.hpp"
#include "covstream/serialize.hpp"
#include "covstream/simulate.hpp"
#include "scenario.hpp"

namespace cs = covstream;

namespace {

constexpr int kOk = 0;
constexpr int kError = 1;
constexpr int kAlarm = 2;
constexpr int kRejected = 3;

std::uint64_t default_seed() {
    if (const char* env = std::getenv("COVSTREAM_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw cs::ConfigError(std::string("COVSTREAM_SEED is not an integer: ") + env);
        }
    }
    return 1;
}

cs::Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw cs::InputError("cannot open " + path);
    }
    try {
        return cs::Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw cs::InputError(path + ": " + e.what());
    }
}

void write_json(const cs::Json& j, const std::string& path) {
    if (path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw cs::InputError("cannot write " + path);
    }
    out << j.dump(2) << '\n';
}

bool is_csv(const std::string& path, const std::string& format) {
    if (format != "auto") {
        return format == "csv";
    }
    return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

/// Pulls observations one at a time from a CSV file or a JSON-lines stream
/// of {"t": int, "x": [reals]} objects.
class ObservationSource {
public:
    ObservationSource(const std::string& path, const std::string& format, int dim)
        : dim_(dim) {
        if (is_csv(path, format)) {
            csv_ = path == "-" ? cs::read_csv(std::cin).observations
                               : cs::read_csv_file(path).observations;
            if (csv_->cols() > 0 && csv_->rows() != dim) {
                throw cs::InputError("CSV has " + std::to_string(csv_->rows()) +
                                     " columns, expected " + std::to_string(dim));
            }
        } else if (path != "-") {
            file_.open(path);
            if (!file_) {
                throw cs::InputError("cannot open " + path);
            }
        }
        in_ = path == "-" ? &std::cin : &file_;
    }

    std::optional<Eigen::VectorXd> next() {
        if (csv_) {
            if (col_ >= csv_->cols()) {
                return std::nullopt;
            }
            return Eigen::VectorXd(csv_->col(col_++));
        }
        std::string line;
        while (std::getline(*in_, line)) {
            ++line_no_;
            if (line.find_first_not_of(" \t\r") == std::string::npos) {
                continue;
            }
            return parse_line(line);
        }
        return std::nullopt;
    }

private:
    Eigen::VectorXd parse_line(const std::string& line) const {
        const std::string where = "stream line " + std::to_string(line_no_);
        cs::Json j;
        try {
            j = cs::Json::parse(line);
        } catch (const nlohmann::json::parse_error&) {
            throw cs::InputError(where + ": not valid JSON");
        }
        if (!j.is_object() || !j.contains("x") || !j.at("x").is_array()) {
            throw cs::InputError(where + ": expected an object with an array field \"x\"");
        }
        if (j.contains("t") && !j.at("t").is_number_integer()) {
            throw cs::InputError(where + ": \"t\" must be an integer");
        }
        const auto& x = j.at("x");
        if (static_cast<int>(x.size()) != dim_) {
            throw cs::InputError(where + ": \"x\" has " + std::to_string(x.size()) +
                                 " values, expected " + std::to_string(dim_));
        }
        Eigen::VectorXd v(dim_);
        for (int k = 0; k < dim_; ++k) {
            if (!x[k].is_number()) {
                throw cs::InputError(where + ": \"x\"[" + std::to_string(k) +
                                     "] is not a number");
            }
            v(k) = x[k].get<double>();
        }
        return v;
    }

    int dim_;
    std::optional<Eigen::MatrixXd> csv_;
    Eigen::Index col_ = 0;
    std::ifstream file_;
    std::istream* in_ = nullptr;
    long line_no_ = 0;
};

Eigen::MatrixXd read_all(const std::string& path, const std::string& format, int dim) {
    ObservationSource src(path, format, dim);
    std::vector<Eigen::VectorXd> cols;
    while (auto x = src.next()) {
        cols.push_back(std::move(*x));
    }
    Eigen::MatrixXd m(dim, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
        m.col(static_cast<Eigen::Index>(k)) = cols[k];
    }
    return m;
}

struct CalibrateArgs {
    std::optional<double> arl;
    std::optional<double> a;
    int window = 100;
};

int run_calibrate(const CalibrateArgs& args) {
    cs::Json out;
    if (args.a) {
        out = cs::Json{{"window", args.window},
                       {"threshold", *args.a},
                       {"theoretical_arl", cs::theoretical_arl(*args.a, args.window)},
                       {"boundary_mass", cs::boundary_mass(args.window, *args.a)}};
    } else {
        out = cs::to_json(cs::solve_threshold(*args.arl, args.window));
    }
    std::cout << out.dump(2) << '\n';
    return kOk;
}

struct TrainArgs {
    std::string input;
    std::string output = "-";
    std::string format = "auto";
    int p = 0;
    cs::TrainingConfig config;
    std::optional<int> dep_order;
};

int run_train(TrainArgs args) {
    Eigen::MatrixXd train;
    if (is_csv(args.input, args.format)) {
        train = args.input == "-" ? cs::read_csv(std::cin).observations
                                  : cs::read_csv_file(args.input).observations;
    } else {
        if (args.p < 1) {
            throw cs::ConfigError("--p is required for JSON-lines training input");
        }
        train = read_all(args.input, args.format, args.p);
    }
    args.config.dep_order_override = args.dep_order;
    const auto summary = cs::fit_training(train, args.config);
    write_json(cs::to_json(summary), args.output);
    const cs::Json verdict{{"n0", summary.n0},
                           {"p", summary.p},
                           {"m_hat", summary.m_hat},
                           {"null_sd", summary.null_sd},
                           {"stationarity", cs::to_json(summary.stationarity)}};
    (args.output == "-" ? std::cerr : std::cout) << verdict.dump() << '\n';
    return summary.stationarity.rejected ? kRejected : kOk;
}

struct MonitorArgs {
    std::string summary;
    std::string input = "-";
    std::string format = "auto";
    std::optional<double> a;
    std::optional<double> arl;
    std::optional<int> dep_order;
    bool no_steps = false;
};

int run_monitor(const MonitorArgs& args) {
    const auto summary = cs::training_summary_from_json(read_json_file(args.summary));
    cs::DetectorConfig cfg;
    cfg.window = summary.window;
    cfg.threshold = args.a ? *args.a : cs::solve_threshold(*args.arl, summary.window).threshold;
    cfg.dep_order = args.dep_order;
    cs::Detector detector(summary, cfg);
    ObservationSource src(args.input, args.format, summary.p);
    while (auto x = src.next()) {
        const auto r = detector.step(*x);
        if (!args.no_steps) {
            std::cout << cs::to_json(r).dump() << '\n';
        }
        if (r.state == cs::StepState::Alarm) {
            break;
        }
    }
    cs::Json report = cs::to_json(detector.report());
    report["threshold"] = cfg.threshold;
    report["consumed"] = detector.consumed();
    std::cout << cs::Json{{"report", report}}.dump() << '\n';
    return detector.alarmed() ? kAlarm : kOk;
}

struct LocalizeArgs {
    std::string summary;
    std::string input;
    std::string format = "auto";
    std::optional<int> dep_order;
};

int run_localize(const LocalizeArgs& args) {
    const auto summary = cs::training_summary_from_json(read_json_file(args.summary));
    const auto history = read_all(args.input, args.format, summary.p);
    const auto loc =
        cs::localize(history, summary.mean, args.dep_order.value_or(summary.m_hat));
    std::cout << cs::Json{{"tau_hat", loc.tau_hat},
                          {"max_profile", loc.max_profile},
                          {"low_confidence", loc.low_confidence},
                          {"length", history.cols()}}
                     .dump(2)
              << '\n';
    return kOk;
}

struct SimulateArgs {
    std::string scenario;
    std::optional<int> replicates;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    bool json = false;
    std::string output;
};

int run_simulate(const SimulateArgs& args) {
    auto scenario = cs::cli::parse_scenario(read_json_file(args.scenario));
    if (args.replicates) {
        scenario.replicates = *args.replicates;
    }
    if (args.seed) {
        scenario.seed = *args.seed;
    } else if (std::getenv("COVSTREAM_SEED")) {
        scenario.seed = default_seed();
    }
    const auto rows = cs::cli::run_scenario(scenario, args.threads);
    const auto j = cs::cli::rows_to_json(scenario, rows);
    if (args.json) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << cs::cli::format_table(scenario, rows);
    }
    if (!args.output.empty()) {
        write_json(j, args.output);
    }
    return kOk;
}

struct GenerateArgs {
    int p = 10;
    int n = 200;
    int dep_order = 0;
    std::string base = "toeplitz";
    double base_rho = 0.6;
    std::optional<std::string> change_model;
    double change_rho = 0.8;
    std::int64_t change_at = 100;
    bool student_t = false;
    std::uint64_t seed = 1;
    std::string format = "csv";
};

int run_generate(const GenerateArgs& args) {
    auto spec = args.base == "identity" ? cs::identity_design(args.p, args.dep_order)
                                        : cs::toeplitz_design(args.p, args.dep_order, args.base_rho);
    if (args.student_t) {
        spec.innovation = cs::Innovation::StudentT;
    }
    if (args.change_model) {
        spec.post_change = cs::make_post_change(cs::parse_change_model(*args.change_model),
                                                args.p, args.change_rho, args.change_at,
                                                args.seed);
    }
    const auto x = cs::gen_stream(spec, args.n, args.seed);
    if (args.format == "csv") {
        cs::write_csv(std::cout, x);
    } else {
        for (Eigen::Index t = 0; t < x.cols(); ++t) {
            const auto col = x.col(t);
            std::cout << cs::Json{{"t", t + 1},
                                  {"x", std::vector<double>(col.data(), col.data() + col.size())}}
                             .dump()
                      << '\n';
        }
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online detection of covariance changes in high-dimensional streams"};
    app.require_subcommand(1);
    int rc = kOk;

    CalibrateArgs cal;
    auto* calibrate = app.add_subcommand("calibrate", "Threshold for a target ARL (or ARL of a threshold)");
    auto* cal_arl = calibrate->add_option("--arl", cal.arl, "Target average run length")
                        ->check(CLI::PositiveNumber);
    auto* cal_a = calibrate->add_option("--a,--threshold", cal.a, "Threshold")
                      ->check(CLI::PositiveNumber);
    cal_arl->excludes(cal_a);
    calibrate->add_option("--window,-H", cal.window, "Window size")->check(CLI::PositiveNumber);

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "Fit a training summary from historical data");
    train->add_option("--input,-i", tr.input, "Training data (CSV, or JSON lines with --p)")
        ->required();
    train->add_option("--output,-o", tr.output, "Summary JSON path ('-' for stdout)");
    train->add_option("--format", tr.format, "Input format")
        ->check(CLI::IsMember({"auto", "csv", "jsonl"}));
    train->add_option("--p", tr.p, "Dimension for JSON-lines input");
    train->add_option("--window,-H", tr.config.window, "Monitoring window size")
        ->check(CLI::PositiveNumber);
    train->add_option("--alpha", tr.config.alpha, "Stationarity test level")
        ->check(CLI::Range(0.0, 1.0));
    train->add_option("--epsilon", tr.config.epsilon, "Dependence ratio cutoff")
        ->check(CLI::Range(0.0, 1.0));
    train->add_option("--max-order", tr.config.max_order, "Largest dependence order searched")
        ->check(CLI::NonNegativeNumber);
    train->add_option("--dep-order,-M", tr.dep_order, "Use this dependence order")
        ->check(CLI::NonNegativeNumber);
    bool no_center = false;
    train->add_flag("--no-center", no_center, "Treat the mean as known zero");

    MonitorArgs mon;
    auto* monitor = app.add_subcommand("monitor", "Run the stopping rule over a stream");
    monitor->add_option("--summary,-s", mon.summary, "Training summary JSON")->required();
    monitor->add_option("--input,-i", mon.input, "Stream (CSV file, JSON-lines file, or '-')");
    monitor->add_option("--format", mon.format, "Stream format")
        ->check(CLI::IsMember({"auto", "csv", "jsonl"}));
    auto* mon_a = monitor->add_option("--a,--threshold", mon.a, "Threshold")
                      ->check(CLI::PositiveNumber);
    auto* mon_arl = monitor->add_option("--arl", mon.arl, "Target ARL")->check(CLI::PositiveNumber);
    mon_a->excludes(mon_arl);
    monitor->add_option("--dep-order,-M", mon.dep_order, "Expected dependence order");
    monitor->add_flag("--no-steps", mon.no_steps, "Only print the final report");

    LocalizeArgs loc;
    auto* localize = app.add_subcommand("localize", "Estimate the change point in a history");
    localize->add_option("--summary,-s", loc.summary, "Training summary JSON")->required();
    localize->add_option("--input,-i", loc.input, "History (CSV or JSON lines)")->required();
    localize->add_option("--format", loc.format, "Input format")
        ->check(CLI::IsMember({"auto", "csv", "jsonl"}));
    localize->add_option("--dep-order,-M", loc.dep_order, "Dependence order")
        ->check(CLI::NonNegativeNumber);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "Theoretical and Monte Carlo study from a scenario");
    simulate->add_option("scenario", sim.scenario, "Scenario JSON")->required();
    simulate->add_option("--replicates,-r", sim.replicates, "Override replicate count")
        ->check(CLI::NonNegativeNumber);
    simulate->add_option("--seed", sim.seed, "Override master seed");
    simulate->add_option("--threads", sim.threads, "Worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
    simulate->add_flag("--json", sim.json, "Print JSON instead of the table");
    simulate->add_option("--output,-o", sim.output, "Also write JSON here");

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Write a synthetic stream");
    generate->add_option("--p", gen.p, "Dimension")->check(CLI::PositiveNumber);
    generate->add_option("--n", gen.n, "Number of observations")->check(CLI::PositiveNumber);
    generate->add_option("--dep-order,-M", gen.dep_order, "Dependence order")
        ->check(CLI::NonNegativeNumber);
    generate->add_option("--base", gen.base, "Pre-change base")
        ->check(CLI::IsMember({"toeplitz", "identity"}));
    generate->add_option("--base-rho", gen.base_rho, "Toeplitz base decay")
        ->check(CLI::Range(0.0, 1.0));
    generate->add_option("--change-model", gen.change_model, "a, b or c");
    generate->add_option("--change-rho", gen.change_rho, "Change strength")
        ->check(CLI::Range(0.0, 1.0));
    generate->add_option("--change-at", gen.change_at, "Last pre-change index")
        ->check(CLI::NonNegativeNumber);
    generate->add_flag("--student-t", gen.student_t, "Student-t(8) innovations");
    generate->add_option("--seed", gen.seed, "Seed (default $COVSTREAM_SEED or 1)");
    generate->add_option("--format", gen.format, "Output format")
        ->check(CLI::IsMember({"csv", "jsonl"}));

    try {
        gen.seed = default_seed();
        app.parse(argc, argv);
        if (*calibrate) {
            if (!cal.arl && !cal.a) {
                throw CLI::RequiredError("one of --arl or --a");
            }
            rc = run_calibrate(cal);
        } else if (*train) {
            tr.config.center = !no_center;
            rc = run_train(tr);
        } else if (*monitor) {
            if (!mon.a && !mon.arl) {
                throw CLI::RequiredError("one of --a or --arl");
            }
            rc = run_monitor(mon);
        } else if (*localize) {
            rc = run_localize(loc);
        } else if (*simulate) {
            rc = run_simulate(sim);
        } else if (*generate) {
            rc = run_generate(gen);
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kError;
    } catch (const cs::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kError;
    }
    return rc;
}
