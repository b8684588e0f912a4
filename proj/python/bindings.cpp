#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "covstream/calibrate.hpp"
#include "covstream/dependence.hpp"
#include "covstream/detector.hpp"
#include "covstream/error.hpp"
#include "covstream/serialize.hpp"
#include "covstream/simulate.hpp"
#include "covstream/statistic.hpp"
#include "covstream/weights.hpp"

namespace py = pybind11;
namespace cs = covstream;

namespace {

// Python callers pass observations as rows (n x p); the core stores them as columns.
using RowObservations = Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                      Eigen::RowMajor>>;

Eigen::MatrixXd columns(const RowObservations& rows) { return rows.transpose(); }

py::object to_python(const cs::Json& j) {
    switch (j.type()) {
        case cs::Json::value_t::null:
            return py::none();
        case cs::Json::value_t::boolean:
            return py::bool_(j.get<bool>());
        case cs::Json::value_t::number_integer:
            return py::int_(j.get<std::int64_t>());
        case cs::Json::value_t::number_unsigned:
            return py::int_(j.get<std::uint64_t>());
        case cs::Json::value_t::number_float:
            return py::float_(j.get<double>());
        case cs::Json::value_t::string:
            return py::str(j.get<std::string>());
        case cs::Json::value_t::array: {
            py::list out;
            for (const auto& v : j) {
                out.append(to_python(v));
            }
            return out;
        }
        case cs::Json::value_t::object: {
            py::dict out;
            for (const auto& [k, v] : j.items()) {
                out[py::str(k)] = to_python(v);
            }
            return out;
        }
        default:
            throw cs::InputError("unsupported JSON value");
    }
}

cs::GeneratorSpec make_spec(int p, int dep_order, const std::string& base, double base_rho,
                            const std::optional<std::string>& change_model, double change_rho,
                            std::int64_t change_at, bool student_t, std::uint64_t q_seed) {
    cs::GeneratorSpec spec;
    if (base == "toeplitz") {
        spec = cs::toeplitz_design(p, dep_order, base_rho);
    } else if (base == "identity") {
        spec = cs::identity_design(p, dep_order);
    } else {
        throw cs::ConfigError("base must be 'toeplitz' or 'identity', got '" + base + "'");
    }
    spec.innovation = student_t ? cs::Innovation::StudentT : cs::Innovation::Gaussian;
    if (change_model) {
        spec.post_change = cs::make_post_change(cs::parse_change_model(*change_model), p,
                                                change_rho, change_at, q_seed);
    }
    return spec;
}

}  // namespace

PYBIND11_MODULE(_covstream, m) {
    m.doc() = "Sequential detection of covariance changes in high-dimensional streams";

    auto base = py::register_exception<cs::Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<cs::ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<cs::InputError>(m, "InputError", base.ptr());
    py::register_exception<cs::PreconditionError>(m, "PreconditionError", base.ptr());
    py::register_exception<cs::NumericalError>(m, "NumericalError", base.ptr());
    py::register_exception<cs::InsufficientTrainingError>(m, "InsufficientTrainingError",
                                                          base.ptr());
    py::register_exception<cs::DependenceTooStrongError>(m, "DependenceTooStrongError",
                                                         base.ptr());
    py::register_exception<cs::InfeasibleError>(m, "InfeasibleError", base.ptr());
    py::register_exception<cs::StateError>(m, "StateError", base.ptr());

    m.def(
        "set_warning_handler",
        [](std::optional<std::function<void(std::string)>> fn) {
            if (!fn) {
                cs::set_warning_handler(nullptr);
                return;
            }
            cs::set_warning_handler([fn = *fn](std::string_view msg) {
                py::gil_scoped_acquire gil;
                fn(std::string(msg));
            });
        },
        py::arg("handler"), "Route library warnings to a callable, or None for stderr.");

    // calibration
    m.def("theoretical_arl", &cs::theoretical_arl, py::arg("threshold"), py::arg("window"));
    m.def("run_length_cdf", &cs::run_length_cdf, py::arg("t"), py::arg("window"),
          py::arg("threshold"));
    m.def(
        "solve_threshold",
        [](double target_arl, int window) {
            return to_python(cs::to_json(cs::solve_threshold(target_arl, window)));
        },
        py::arg("target_arl"), py::arg("window"),
        "Threshold whose theoretical ARL matches the target; returns a dict.");
    m.def(
        "edd_upper_bound",
        [](double threshold, int window, int dep_order, double null_sd, double change_norm) {
            return cs::edd_upper_bound(threshold, window, dep_order, null_sd, change_norm).bound;
        },
        py::arg("threshold"), py::arg("window"), py::arg("dep_order"), py::arg("null_sd"),
        py::arg("change_norm"));

    // statistic
    m.def(
        "weight_matrix",
        [](int length, int dep_order) {
            return Eigen::MatrixXd(cs::build_weight_plan(length, dep_order).weights());
        },
        py::arg("length"), py::arg("dep_order"));
    m.def(
        "statistic",
        [](const RowObservations& x, std::optional<Eigen::VectorXd> mean, int dep_order) {
            const auto obs = columns(x);
            const Eigen::VectorXd mu = mean ? *mean : Eigen::VectorXd::Zero(obs.rows());
            return cs::statistic_batch(obs, mu, cs::build_weight_plan(obs.cols(), dep_order));
        },
        py::arg("x"), py::arg("mean") = py::none(), py::arg("dep_order") = 0,
        "Weighted statistic of a window given as an (n, p) array.");
    m.def(
        "profile_curve",
        [](const RowObservations& x, std::optional<Eigen::VectorXd> mean, int dep_order) {
            const auto obs = columns(x);
            const Eigen::VectorXd mu = mean ? *mean : Eigen::VectorXd::Zero(obs.rows());
            return cs::profile_curve(cs::squared_gram(obs, mu), dep_order);
        },
        py::arg("x"), py::arg("mean") = py::none(), py::arg("dep_order") = 0);

    // training
    py::class_<cs::TrainingSummary>(m, "TrainingSummary")
        .def_readonly("n0", &cs::TrainingSummary::n0)
        .def_readonly("p", &cs::TrainingSummary::p)
        .def_readonly("m_hat", &cs::TrainingSummary::m_hat)
        .def_readonly("window", &cs::TrainingSummary::window)
        .def_readonly("null_sd", &cs::TrainingSummary::null_sd)
        .def_readonly("mean", &cs::TrainingSummary::mean)
        .def_property_readonly("stationarity",
                               [](const cs::TrainingSummary& s) {
                                   return to_python(cs::to_json(s.stationarity));
                               })
        .def("to_json", [](const cs::TrainingSummary& s) { return cs::to_json(s).dump(); })
        .def_static(
            "from_json",
            [](const std::string& text) {
                cs::Json j;
                try {
                    j = cs::Json::parse(text);
                } catch (const cs::Json::parse_error& e) {
                    throw cs::InputError(std::string("summary is not valid JSON: ") + e.what());
                }
                return cs::training_summary_from_json(j);
            },
            py::arg("text"))
        .def("__repr__", [](const cs::TrainingSummary& s) {
            return "TrainingSummary(n0=" + std::to_string(s.n0) + ", p=" + std::to_string(s.p) +
                   ", m_hat=" + std::to_string(s.m_hat) + ", window=" + std::to_string(s.window) +
                   ")";
        });

    m.def(
        "fit_training",
        [](const RowObservations& train, int window, double alpha, double epsilon, int max_order,
           std::optional<int> dep_order, bool center) {
            cs::TrainingConfig cfg;
            cfg.window = window;
            cfg.alpha = alpha;
            cfg.epsilon = epsilon;
            cfg.max_order = max_order;
            cfg.dep_order_override = dep_order;
            cfg.center = center;
            return cs::fit_training(columns(train), cfg);
        },
        py::arg("train"), py::arg("window") = 100, py::arg("alpha") = 0.05,
        py::arg("epsilon") = 0.05, py::arg("max_order") = 10, py::arg("dep_order") = py::none(),
        py::arg("center") = true, "Fit the null model from an (n0, p) training sample.");

    // monitoring
    py::class_<cs::Detector>(m, "Detector")
        .def(py::init([](const cs::TrainingSummary& summary, double threshold,
                         std::optional<int> dep_order, bool keep_history) {
                 cs::DetectorConfig cfg;
                 cfg.window = summary.window;
                 cfg.threshold = threshold;
                 cfg.dep_order = dep_order;
                 cfg.keep_history = keep_history;
                 return cs::Detector(summary, cfg);
             }),
             py::arg("summary"), py::arg("threshold"), py::arg("dep_order") = py::none(),
             py::arg("keep_history") = true)
        .def(
            "step",
            [](cs::Detector& d, const Eigen::VectorXd& x) {
                return to_python(cs::to_json(d.step(x)));
            },
            py::arg("x"), "Consume one observation; returns a dict with index, std_stat, state.")
        .def(
            "run",
            [](cs::Detector& d, const RowObservations& xs) -> std::optional<std::int64_t> {
                for (Eigen::Index r = 0; r < xs.rows() && !d.alarmed(); ++r) {
                    d.step(xs.row(r).transpose());
                }
                if (d.alarmed()) {
                    return d.consumed();
                }
                return std::nullopt;
            },
            py::arg("xs"), "Feed rows until an alarm; returns the stopping time or None.")
        .def_property_readonly("alarmed", &cs::Detector::alarmed)
        .def_property_readonly("consumed", &cs::Detector::consumed)
        .def_property_readonly("null_sd", &cs::Detector::null_sd)
        .def_property_readonly("trajectory", &cs::Detector::trajectory)
        .def("report", [](const cs::Detector& d) { return to_python(cs::to_json(d.report())); });

    m.def(
        "localize",
        [](const RowObservations& history, std::optional<Eigen::VectorXd> mean, int dep_order) {
            const auto obs = columns(history);
            const Eigen::VectorXd mu = mean ? *mean : Eigen::VectorXd::Zero(obs.rows());
            const auto loc = cs::localize(obs, mu, dep_order);
            py::dict out;
            out["tau_hat"] = loc.tau_hat;
            out["max_profile"] = loc.max_profile;
            out["low_confidence"] = loc.low_confidence;
            return out;
        },
        py::arg("history"), py::arg("mean") = py::none(), py::arg("dep_order") = 0);

    // simulation
    m.def(
        "gen_stream",
        [](int p, int n, int dep_order, const std::string& base, double base_rho,
           std::optional<std::string> change_model, double change_rho, std::int64_t change_at,
           bool student_t, std::uint64_t seed) {
            const auto spec = make_spec(p, dep_order, base, base_rho, change_model, change_rho,
                                        change_at, student_t, seed);
            Eigen::MatrixXd rows = cs::gen_stream(spec, n, seed).transpose();
            return rows;
        },
        py::arg("p"), py::arg("n"), py::arg("dep_order") = 0, py::arg("base") = "toeplitz",
        py::arg("base_rho") = 0.6, py::arg("change_model") = py::none(),
        py::arg("change_rho") = 0.8, py::arg("change_at") = 200, py::arg("student_t") = false,
        py::arg("seed") = 1, "Synthetic stream as an (n, p) array.");
    m.def(
        "population_null_sd",
        [](int p, int dep_order, const std::string& base, double base_rho, int window) {
            return cs::population_null_sd(
                make_spec(p, dep_order, base, base_rho, std::nullopt, 0.0, 0, false, 0), window);
        },
        py::arg("p"), py::arg("dep_order"), py::arg("base"), py::arg("base_rho"),
        py::arg("window"));
    m.def(
        "monte_carlo",
        [](const std::string& study, int p, int dep_order, const std::string& base,
           double base_rho, std::optional<std::string> change_model, double change_rho,
           double threshold, int window, int n0, int replicates, std::uint64_t seed,
           int threads) {
            cs::McOptions opt;
            opt.replicates = replicates;
            opt.seed = seed;
            opt.threads = threads;
            cs::TrainingRecipe recipe;
            recipe.n0 = n0;
            cs::McResult r;
            if (study == "arl") {
                const auto spec =
                    make_spec(p, dep_order, base, base_rho, std::nullopt, 0.0, 0, false, seed);
                py::gil_scoped_release nogil;
                r = cs::monte_carlo_arl(spec, recipe, threshold, window, opt);
            } else if (study == "edd") {
                if (!change_model) {
                    throw cs::ConfigError("an edd study needs change_model");
                }
                const auto spec = make_spec(p, dep_order, base, base_rho, change_model,
                                            change_rho, n0, false, seed);
                py::gil_scoped_release nogil;
                r = cs::monte_carlo_edd(spec, recipe, threshold, window, opt);
            } else {
                throw cs::ConfigError("study must be 'arl' or 'edd', got '" + study + "'");
            }
            return to_python(cs::to_json(r, true));
        },
        py::arg("study"), py::arg("p"), py::arg("dep_order"), py::arg("base") = "toeplitz",
        py::arg("base_rho") = 0.6, py::arg("change_model") = py::none(),
        py::arg("change_rho") = 0.8, py::arg("threshold") = 3.58, py::arg("window") = 100,
        py::arg("n0") = 200, py::arg("replicates") = 100, py::arg("seed") = 1,
        py::arg("threads") = 0);
}
