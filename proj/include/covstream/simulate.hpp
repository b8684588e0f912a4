#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "covstream/dependence.hpp"

namespace covstream {

/// Square p x p coefficient base used by the moving-average generator.
/// Identity and the symmetric Toeplitz matrix rho^{|i-j|} are applied in O(p)
/// per observation; anything else is stored dense.
class BaseMatrix {
public:
    enum class Kind { Identity, Toeplitz, Dense };

    static BaseMatrix identity(int p);
    static BaseMatrix toeplitz(int p, double rho);
    static BaseMatrix dense(Eigen::MatrixXd m);

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return p_; }
    double rho() const noexcept { return rho_; }

    /// B * x for a block of columns.
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd to_dense() const;

private:
    BaseMatrix(Kind kind, int p, double rho, Eigen::MatrixXd m)
        : kind_(kind), p_(p), rho_(rho), dense_(std::move(m)) {}

    Kind kind_;
    int p_;
    double rho_;
    Eigen::MatrixXd dense_;
};

enum class ChangeModel { Bandable, Sparse, Strong };

/// Parses "a"/"b"/"c" (or "bandable"/"sparse"/"strong").
ChangeModel parse_change_model(const std::string& s);
std::string to_string(ChangeModel m);

/// Gaussian innovations, or Student-t with 8 degrees of freedom scaled to
/// unit variance (finite fourth moment, excess kurtosis 1.5).
enum class Innovation { Gaussian, StudentT };

/// Post-change coefficient matrix Q for the three change patterns:
///   Bandable: lower Cholesky factor of rho^{|i-j|}
///   Sparse:   three distinct random columns per row with entries +-rho
///   Strong:   lower Cholesky factor of unit diagonal, rho elsewhere
/// `seed` only matters for the sparse model. Throws NumericalError if the
/// factorization fails and ConfigError unless 0 < rho < 1.
Eigen::MatrixXd build_Q(ChangeModel model, int p, double rho, std::uint64_t seed = 0);

/// Covariance QQ' implied by a change pattern (exact for bandable/strong;
/// for sparse it depends on the draw of Q).
Eigen::MatrixXd change_covariance(ChangeModel model, int p, double rho,
                                  std::uint64_t seed = 0);

struct PostChange {
    ChangeModel model = ChangeModel::Bandable;
    double rho = 0.8;
    /// Last pre-change index: observations change_at+1, ... use Q.
    std::int64_t change_at = 200;
    std::shared_ptr<const BaseMatrix> q;
};

PostChange make_post_change(ChangeModel model, int p, double rho, std::int64_t change_at,
                            std::uint64_t seed = 0);

/// X_i = sum_{l=0}^{M} B_i epsilon_{i-l} / (M-l+1), with B_i the pre-change
/// base up to change_at and Q afterwards.
struct GeneratorSpec {
    int p = 200;
    int dep_order = 0;
    Innovation innovation = Innovation::Gaussian;
    std::shared_ptr<const BaseMatrix> base;
    std::optional<PostChange> post_change;
};

/// Null design with base rho^{|i-j|} (rho = 0.6 by default).
GeneratorSpec toeplitz_design(int p, int dep_order, double rho = 0.6);
/// Null design with identity base.
GeneratorSpec identity_design(int p, int dep_order);

/// Mixing weight 1/(M-l+1) of lag l.
double lag_weight(int dep_order, int lag);

/// c_h = sum_l k_l k_{l+|h|} so that C(h) = c_h B B' under the generator.
double lag_covariance_factor(int dep_order, int h);

/// Deterministic, resumable stream for one (spec, seed).
class StreamGenerator {
public:
    StreamGenerator(GeneratorSpec spec, std::uint64_t seed);

    /// Next k observations as a p x k block.
    Eigen::MatrixXd next(int k);
    std::int64_t generated() const noexcept { return generated_; }

private:
    double draw();

    GeneratorSpec spec_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_;
    std::student_t_distribution<double> student_{8.0};
    std::int64_t generated_ = 0;
    Eigen::MatrixXd history_;  // p x (M+1) ring of raw innovations
    int head_ = 0;
};

Eigen::MatrixXd gen_stream(const GeneratorSpec& spec, int n, std::uint64_t seed);

/// Exact tr{C(h1)C(h2)} of the pre-change process.
TraceTable population_trace_table(const GeneratorSpec& spec);

/// Null sd of the windowed statistic from exact traces.
double population_null_sd(const GeneratorSpec& spec, int window);

/// ||Sigma_post - Sigma_pre||_F for the generator's change, with
/// Sigma = c_0 B B'. Throws ConfigError without a post-change section.
double population_change_norm(const GeneratorSpec& spec);

/// ||c_0 B B'||_F of the pre-change covariance.
double population_covariance_norm(const GeneratorSpec& spec);

/// Smallest rho in (0,1) for which a change pattern from an identity base
/// reaches min_detectable_change(a, H, ||I_p||_F). Solved by bisection.
double min_detectable_rho(ChangeModel model, int p, double threshold, int window);

struct TrainingRecipe {
    int n0 = 200;
    double alpha = 0.05;
    double epsilon = 0.05;
    int max_order = 10;
    /// Fit with the generator's dependence order instead of estimating it.
    bool use_true_order = true;
    /// The generator mean is exactly zero, so by default it is used as known
    /// rather than estimated.
    bool center = false;
};

struct McResult {
    int replicates = 0;
    double mean = 0.0;
    double std_error = 0.0;
    std::vector<double> values;
    int censored = 0;
    bool unreliable = false;
    /// tau_hat - change_at per replicate (EDD runs with localization only).
    std::vector<double> localization_errors;
};

/// Builds mean / std_error / censoring flags from raw values.
McResult summarize(std::vector<double> values, int censored);

/// Seed for replicate r of a study with master seed `seed`.
std::uint64_t replicate_seed(std::uint64_t seed, std::uint64_t replicate);

/// Runs body(r) for r in [0, count) on up to `threads` workers (0 = hardware).
void parallel_for(int count, int threads, const std::function<void(int)>& body);

struct McOptions {
    int replicates = 100;
    std::int64_t max_steps = 0;  ///< 0 selects 10x the theoretical ARL
    std::uint64_t seed = 1;
    int threads = 0;
};

/// Mean stopping time under no change. Each replicate fits a fresh training
/// sample and runs a detector until alarm or max_steps (censored).
McResult monte_carlo_arl(const GeneratorSpec& spec, const TrainingRecipe& recipe,
                         double threshold, int window, const McOptions& options);

/// Mean detection delay for a change right after the training sample.
/// Runs without detection before max_steps are counted as censored.
McResult monte_carlo_edd(const GeneratorSpec& spec, const TrainingRecipe& recipe,
                         double threshold, int window, const McOptions& options,
                         bool localize_change = false);

/// Histogram of estimated dependence orders; key -1 counts fits where no
/// order met the cutoff.
std::map<int, int> m_selection_study(const GeneratorSpec& spec, int n0, int replicates,
                                     std::uint64_t seed, double epsilon = 0.05,
                                     int max_order = 10, int threads = 0);

}  // namespace covstream
