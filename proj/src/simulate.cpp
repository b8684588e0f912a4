#include "covstream/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include <Eigen/Cholesky>

#include "covstream/calibrate.hpp"
#include "covstream/detector.hpp"
#include "covstream/error.hpp"
#include "covstream/numeric.hpp"

namespace covstream {

// ---------------------------------------------------------------- BaseMatrix

BaseMatrix BaseMatrix::identity(int p) { return {Kind::Identity, p, 0.0, {}}; }

BaseMatrix BaseMatrix::toeplitz(int p, double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) {
        throw ConfigError("Toeplitz base needs 0 <= rho < 1");
    }
    return {Kind::Toeplitz, p, rho, {}};
}

BaseMatrix BaseMatrix::dense(Eigen::MatrixXd m) {
    if (m.rows() != m.cols()) {
        throw ConfigError("coefficient base must be square");
    }
    const int p = static_cast<int>(m.rows());
    return {Kind::Dense, p, 0.0, std::move(m)};
}

Eigen::MatrixXd BaseMatrix::apply(const Eigen::MatrixXd& x) const {
    switch (kind_) {
        case Kind::Identity:
            return x;
        case Kind::Dense:
            return dense_ * x;
        case Kind::Toeplitz: {
            // y_i = sum_j rho^{|i-j|} x_j as a forward plus a backward recursion
            Eigen::MatrixXd y(x.rows(), x.cols());
            Eigen::VectorXd fwd(p_), bwd(p_);
            for (Eigen::Index c = 0; c < x.cols(); ++c) {
                const auto col = x.col(c);
                double acc = 0.0;
                for (int i = 0; i < p_; ++i) {
                    acc = col(i) + rho_ * acc;
                    fwd(i) = acc;
                }
                acc = 0.0;
                for (int i = p_ - 1; i >= 0; --i) {
                    acc = col(i) + rho_ * acc;
                    bwd(i) = acc;
                }
                y.col(c) = fwd + bwd - col;
            }
            return y;
        }
    }
    return x;
}

Eigen::MatrixXd BaseMatrix::to_dense() const {
    switch (kind_) {
        case Kind::Identity:
            return Eigen::MatrixXd::Identity(p_, p_);
        case Kind::Dense:
            return dense_;
        case Kind::Toeplitz: {
            Eigen::MatrixXd m(p_, p_);
            for (int j = 0; j < p_; ++j) {
                for (int i = 0; i < p_; ++i) {
                    m(i, j) = std::pow(rho_, std::abs(i - j));
                }
            }
            return m;
        }
    }
    return {};
}

// ------------------------------------------------------------ change models

ChangeModel parse_change_model(const std::string& s) {
    if (s == "a" || s == "bandable") {
        return ChangeModel::Bandable;
    }
    if (s == "b" || s == "sparse") {
        return ChangeModel::Sparse;
    }
    if (s == "c" || s == "strong") {
        return ChangeModel::Strong;
    }
    throw ConfigError("unknown change model '" + s + "' (expected a, b or c)");
}

std::string to_string(ChangeModel m) {
    switch (m) {
        case ChangeModel::Bandable:
            return "a";
        case ChangeModel::Sparse:
            return "b";
        case ChangeModel::Strong:
            return "c";
    }
    return "?";
}

namespace {

void check_rho(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) {
        throw ConfigError("rho must lie in (0, 1), got " + std::to_string(rho));
    }
}

Eigen::MatrixXd target_covariance(ChangeModel model, int p, double rho) {
    Eigen::MatrixXd s(p, p);
    for (int j = 0; j < p; ++j) {
        for (int i = 0; i < p; ++i) {
            if (model == ChangeModel::Bandable) {
                s(i, j) = std::pow(rho, std::abs(i - j));
            } else {
                s(i, j) = i == j ? 1.0 : rho;
            }
        }
    }
    return s;
}

}  // namespace

Eigen::MatrixXd build_Q(ChangeModel model, int p, double rho, std::uint64_t seed) {
    check_rho(rho);
    if (p < 1) {
        throw ConfigError("dimension must be positive");
    }
    if (model == ChangeModel::Sparse) {
        if (p < 3) {
            throw ConfigError("sparse model needs p >= 3");
        }
        std::mt19937_64 rng(seed);
        std::vector<int> cols(p);
        std::iota(cols.begin(), cols.end(), 0);
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(p, p);
        std::bernoulli_distribution coin(0.5);
        for (int i = 0; i < p; ++i) {
            // partial Fisher-Yates: first three entries become a uniform 3-subset
            for (int k = 0; k < 3; ++k) {
                std::uniform_int_distribution<int> pick(k, p - 1);
                std::swap(cols[k], cols[pick(rng)]);
                q(i, cols[k]) = coin(rng) ? rho : -rho;
            }
        }
        return q;
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(target_covariance(model, p, rho));
    if (llt.info() != Eigen::Success) {
        throw NumericalError("Cholesky factorization of the change covariance failed");
    }
    return llt.matrixL();
}

Eigen::MatrixXd change_covariance(ChangeModel model, int p, double rho, std::uint64_t seed) {
    if (model == ChangeModel::Sparse) {
        const Eigen::MatrixXd q = build_Q(model, p, rho, seed);
        return q * q.transpose();
    }
    check_rho(rho);
    return target_covariance(model, p, rho);
}

PostChange make_post_change(ChangeModel model, int p, double rho, std::int64_t change_at,
                            std::uint64_t seed) {
    PostChange pc;
    pc.model = model;
    pc.rho = rho;
    pc.change_at = change_at;
    pc.q = std::make_shared<const BaseMatrix>(BaseMatrix::dense(build_Q(model, p, rho, seed)));
    return pc;
}

GeneratorSpec toeplitz_design(int p, int dep_order, double rho) {
    GeneratorSpec s;
    s.p = p;
    s.dep_order = dep_order;
    s.base = std::make_shared<const BaseMatrix>(BaseMatrix::toeplitz(p, rho));
    return s;
}

GeneratorSpec identity_design(int p, int dep_order) {
    GeneratorSpec s;
    s.p = p;
    s.dep_order = dep_order;
    s.base = std::make_shared<const BaseMatrix>(BaseMatrix::identity(p));
    return s;
}

double lag_weight(int dep_order, int lag) { return 1.0 / (dep_order - lag + 1.0); }

double lag_covariance_factor(int dep_order, int h) {
    const int ah = std::abs(h);
    double c = 0.0;
    for (int l = 0; l + ah <= dep_order; ++l) {
        c += lag_weight(dep_order, l) * lag_weight(dep_order, l + ah);
    }
    return c;
}

// ----------------------------------------------------------------- streams

namespace {

void validate(const GeneratorSpec& spec) {
    if (spec.p < 0) {
        throw ConfigError("dimension must be non-negative");
    }
    if (spec.dep_order < 0) {
        throw ConfigError("dependence order must be non-negative");
    }
    if (!spec.base || spec.base->dim() != spec.p) {
        throw ConfigError("generator base missing or of the wrong dimension");
    }
    if (spec.post_change) {
        check_rho(spec.post_change->rho);
        if (!spec.post_change->q || spec.post_change->q->dim() != spec.p) {
            throw ConfigError("post-change matrix missing or of the wrong dimension");
        }
        if (spec.post_change->change_at < 0) {
            throw ConfigError("change point must be non-negative");
        }
    }
}

}  // namespace

StreamGenerator::StreamGenerator(GeneratorSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), rng_(seed) {
    validate(spec_);
    history_.resize(spec_.p, spec_.dep_order + 1);
    // innovations for indices 1-M..0
    for (int l = 0; l < spec_.dep_order; ++l) {
        for (int i = 0; i < spec_.p; ++i) {
            history_(i, l) = draw();
        }
    }
    head_ = spec_.dep_order;
}

double StreamGenerator::draw() {
    if (spec_.innovation == Innovation::Gaussian) {
        return normal_(rng_);
    }
    // t_8 has variance 8/6
    return student_(rng_) * std::sqrt(6.0 / 8.0);
}

Eigen::MatrixXd StreamGenerator::next(int k) {
    if (k < 0) {
        throw PreconditionError("cannot generate a negative number of observations");
    }
    const int m = spec_.dep_order;
    const int width = m + 1;
    Eigen::MatrixXd mixed(spec_.p, k);
    for (int c = 0; c < k; ++c) {
        for (int i = 0; i < spec_.p; ++i) {
            history_(i, head_) = draw();
        }
        // slot of innovation epsilon_{i-l} is head_ - l (mod M+1)
        mixed.col(c) = history_.col(head_) * lag_weight(m, 0);
        for (int l = 1; l <= m; ++l) {
            mixed.col(c) += history_.col((head_ - l + width) % width) * lag_weight(m, l);
        }
        head_ = (head_ + 1) % width;
    }

    const std::int64_t first = generated_ + 1;  // 1-based index of column 0
    generated_ += k;
    if (!spec_.post_change) {
        return spec_.base->apply(mixed);
    }
    const std::int64_t tau = spec_.post_change->change_at;
    const auto pre =
        static_cast<int>(std::clamp<std::int64_t>(tau - first + 1, 0, static_cast<std::int64_t>(k)));
    Eigen::MatrixXd out(spec_.p, k);
    if (pre > 0) {
        out.leftCols(pre) = spec_.base->apply(mixed.leftCols(pre));
    }
    if (pre < k) {
        out.rightCols(k - pre) = spec_.post_change->q->apply(mixed.rightCols(k - pre));
    }
    return out;
}

Eigen::MatrixXd gen_stream(const GeneratorSpec& spec, int n, std::uint64_t seed) {
    if (n < 1) {
        throw ConfigError("stream length must be positive");
    }
    return StreamGenerator(spec, seed).next(n);
}

// ------------------------------------------------------ population oracles

namespace {

double frobenius_sq_of_gram(const BaseMatrix& b) {
    if (b.kind() == BaseMatrix::Kind::Identity) {
        return b.dim();
    }
    const Eigen::MatrixXd d = b.to_dense();
    const Eigen::MatrixXd s = d * d.transpose();
    return s.squaredNorm();
}

}  // namespace

TraceTable population_trace_table(const GeneratorSpec& spec) {
    validate(spec);
    const int m = spec.dep_order;
    const double tr_s2 = frobenius_sq_of_gram(*spec.base);
    TraceTable t(m);
    for (int h1 = -m; h1 <= m; ++h1) {
        for (int h2 = -m; h2 <= m; ++h2) {
            t.set(h1, h2, lag_covariance_factor(m, h1) * lag_covariance_factor(m, h2) * tr_s2);
        }
    }
    return t;
}

double population_null_sd(const GeneratorSpec& spec, int window) {
    return null_sd_from_traces(population_trace_table(spec),
                               build_weight_plan(window, spec.dep_order));
}

double population_change_norm(const GeneratorSpec& spec) {
    validate(spec);
    if (!spec.post_change) {
        throw ConfigError("generator has no post-change section");
    }
    const Eigen::MatrixXd pre = spec.base->to_dense();
    const Eigen::MatrixXd post = spec.post_change->q->to_dense();
    const Eigen::MatrixXd diff = post * post.transpose() - pre * pre.transpose();
    return lag_covariance_factor(spec.dep_order, 0) * diff.norm();
}

double population_covariance_norm(const GeneratorSpec& spec) {
    validate(spec);
    return lag_covariance_factor(spec.dep_order, 0) * std::sqrt(frobenius_sq_of_gram(*spec.base));
}

double min_detectable_rho(ChangeModel model, int p, double threshold, int window) {
    if (model == ChangeModel::Sparse) {
        throw ConfigError("minimum detectable rho is only defined for deterministic patterns");
    }
    const double target =
        min_detectable_change(threshold, window, std::sqrt(static_cast<double>(p)));
    // ||Sigma(rho) - I||_F without forming the matrix
    auto excess = [&](double rho) {
        CompensatedSum s;
        if (model == ChangeModel::Bandable) {
            double pw = 1.0;
            for (int k = 1; k < p; ++k) {
                pw *= rho * rho;
                s += 2.0 * (p - k) * pw;
            }
        } else {
            s += static_cast<double>(p) * (p - 1) * rho * rho;
        }
        return std::sqrt(s.value()) - target;
    };
    double lo = 0.0, hi = 1.0 - 1e-12;
    if (excess(hi) < 0.0) {
        throw NumericalError("change pattern cannot reach the minimum detectable change");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        (excess(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

// ------------------------------------------------------------- Monte Carlo

McResult summarize(std::vector<double> values, int censored) {
    McResult r;
    r.replicates = static_cast<int>(values.size());
    r.censored = censored;
    if (!values.empty()) {
        CompensatedSum s;
        for (double v : values) {
            s += v;
        }
        r.mean = s.value() / r.replicates;
        if (r.replicates > 1) {
            CompensatedSum ss;
            for (double v : values) {
                ss += (v - r.mean) * (v - r.mean);
            }
            r.std_error = std::sqrt(ss.value() / (r.replicates - 1)) / std::sqrt(r.replicates);
        }
        r.unreliable = censored > 0.05 * r.replicates;
    }
    r.values = std::move(values);
    return r;
}

std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(seed ^ mix(replicate + 0x632be59bd9b4e019ULL));
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    if (count <= 0) {
        return;
    }
    int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, count);
    if (workers == 1) {
        for (int i = 0; i < count; ++i) {
            body(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next++; i < count; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                    next = count;
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

namespace {

constexpr int kBlock = 64;

struct RunOutcome {
    std::optional<std::int64_t> stopping_time;
    std::optional<int> tau_hat;
    int history_offset = 0;
};

RunOutcome run_replicate(const GeneratorSpec& spec, const TrainingRecipe& recipe,
                         double threshold, int window, std::int64_t max_steps,
                         std::uint64_t seed, bool keep_history) {
    StreamGenerator gen(spec, seed);
    const Eigen::MatrixXd train = gen.next(recipe.n0);
    TrainingConfig fit;
    fit.window = window;
    fit.alpha = recipe.alpha;
    fit.epsilon = recipe.epsilon;
    fit.max_order = recipe.max_order;
    fit.center = recipe.center;
    if (recipe.use_true_order) {
        fit.dep_order_override = spec.dep_order;
    }
    const auto summary = fit_training(train, fit);

    DetectorConfig dc;
    dc.window = window;
    dc.threshold = threshold;
    dc.keep_history = keep_history;
    Detector det(summary, dc);

    RunOutcome out;
    std::int64_t steps = 0;
    while (steps < max_steps && !det.alarmed()) {
        const int k = static_cast<int>(std::min<std::int64_t>(kBlock, max_steps - steps));
        const Eigen::MatrixXd block = gen.next(k);
        for (int c = 0; c < k; ++c) {
            const auto r = det.step(block.col(c));
            ++steps;
            if (r.state == StepState::Alarm) {
                out.stopping_time = r.index;
                break;
            }
        }
    }
    if (out.stopping_time && keep_history) {
        const auto rep = det.report();
        out.tau_hat = rep.tau_hat;
        out.history_offset = rep.history_offset;
    }
    return out;
}

std::int64_t default_max_steps(double threshold, int window) {
    return static_cast<std::int64_t>(std::ceil(10.0 * theoretical_arl(threshold, window)));
}

}  // namespace

McResult monte_carlo_arl(const GeneratorSpec& spec, const TrainingRecipe& recipe,
                         double threshold, int window, const McOptions& options) {
    if (spec.post_change) {
        throw ConfigError("ARL study requires a generator without a change");
    }
    const std::int64_t max_steps =
        options.max_steps > 0 ? options.max_steps : default_max_steps(threshold, window);
    std::vector<double> values(options.replicates, 0.0);
    std::vector<char> censored(options.replicates, 0);
    parallel_for(options.replicates, options.threads, [&](int r) {
        const auto out = run_replicate(spec, recipe, threshold, window, max_steps,
                                       replicate_seed(options.seed, r), false);
        if (out.stopping_time) {
            values[r] = static_cast<double>(*out.stopping_time);
        } else {
            values[r] = static_cast<double>(max_steps);
            censored[r] = 1;
        }
    });
    return summarize(std::move(values),
                     static_cast<int>(std::count(censored.begin(), censored.end(), 1)));
}

McResult monte_carlo_edd(const GeneratorSpec& spec, const TrainingRecipe& recipe,
                         double threshold, int window, const McOptions& options,
                         bool localize_change) {
    if (!spec.post_change) {
        throw ConfigError("EDD study requires a post-change section");
    }
    if (spec.post_change->change_at != recipe.n0) {
        throw ConfigError("EDD study expects the change right after the training sample");
    }
    const std::int64_t max_steps =
        options.max_steps > 0 ? options.max_steps : default_max_steps(threshold, window);
    std::vector<double> values(options.replicates, 0.0);
    std::vector<char> censored(options.replicates, 0);
    std::vector<double> loc(options.replicates, std::nan(""));
    parallel_for(options.replicates, options.threads, [&](int r) {
        const auto out = run_replicate(spec, recipe, threshold, window, max_steps,
                                       replicate_seed(options.seed, r), localize_change);
        if (out.stopping_time) {
            values[r] = static_cast<double>(*out.stopping_time);
            if (out.tau_hat) {
                // the change sits right after the last training point, i.e. at
                // history_offset in the detector's history coordinates
                loc[r] = static_cast<double>(*out.tau_hat - out.history_offset);
            }
        } else {
            values[r] = static_cast<double>(max_steps);
            censored[r] = 1;
        }
    });
    auto result = summarize(std::move(values),
                            static_cast<int>(std::count(censored.begin(), censored.end(), 1)));
    if (localize_change) {
        for (double v : loc) {
            if (!std::isnan(v)) {
                result.localization_errors.push_back(v);
            }
        }
    }
    return result;
}

std::map<int, int> m_selection_study(const GeneratorSpec& spec, int n0, int replicates,
                                     std::uint64_t seed, double epsilon, int max_order,
                                     int threads) {
    if (spec.post_change) {
        throw ConfigError("dependence-order study requires a generator without a change");
    }
    std::vector<int> picks(replicates, -1);
    parallel_for(replicates, threads, [&](int r) {
        const Eigen::MatrixXd train = gen_stream(spec, n0, replicate_seed(seed, r));
        const Eigen::VectorXd mean = train.rowwise().mean();
        try {
            picks[r] = estimate_M(TrainingGram(train, mean), epsilon, max_order);
        } catch (const DependenceTooStrongError&) {
            picks[r] = -1;
        }
    });
    std::map<int, int> hist;
    for (int v : picks) {
        ++hist[v];
    }
    return hist;
}

}  // namespace covstream
