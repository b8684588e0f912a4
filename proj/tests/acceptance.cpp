// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.
// Usage: acceptance [criterion numbers...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "covstream/calibrate.hpp"
#include "covstream/dependence.hpp"
#include "covstream/error.hpp"
#include "covstream/simulate.hpp"
#include "covstream/statistic.hpp"
#include "covstream/weights.hpp"
#include "support.hpp"

using namespace covstream;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!detail.empty()) {
            detail += "; ";
        }
        detail += what + (ok ? "" : " [x]");
        pass = pass && ok;
    }
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

std::string fmt(const char* f, double a, double b, double c) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

bool within(double value, double target, double rel) {
    return std::abs(value - target) <= rel * std::abs(target);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Outcome threshold_calibration() {
    struct Cell {
        double a;
        int h;
        double arl;
    };
    const Cell cells[] = {{3.04, 100, 1002}, {3.42, 100, 3008}, {3.58, 100, 5038},
                          {2.88, 150, 1005}, {3.29, 150, 3033}, {3.46, 150, 5118}};
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    double worst_arl = 0.0, worst_a = 0.0;
    for (const auto& c : cells) {
        worst_arl = std::max(worst_arl, std::abs(theoretical_arl(c.a, c.h) / c.arl - 1.0));
        worst_a = std::max(worst_a, std::abs(solve_threshold(c.arl, c.h).threshold - c.a));
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.require(worst_arl <= 0.01, fmt("max ARL rel err %.4f", worst_arl));
    out.require(worst_a <= 0.01, fmt("max |a - a_ref| %.4f", worst_a));
    out.require(secs < 1.0, fmt("%.2fs", secs));
    return out;
}

Outcome monte_carlo_arl_check() {
    Outcome out;
    TrainingRecipe recipe;
    recipe.n0 = 200;

    McOptions small;
    small.replicates = 200;
    small.seed = 20240101;
    const auto desk = monte_carlo_arl(toeplitz_design(200, 0), recipe, 3.04, 100, small);
    out.require(within(desk.mean, 1178.0, 0.25) && !desk.unreliable,
                fmt("p=200 M=0 H=100 a=3.04: %.0f +- %.0f vs 1178 (+-25%%)", desk.mean,
                    desk.std_error));

    McOptions large;
    large.replicates = 50;
    large.seed = 20240102;
    const auto big = monte_carlo_arl(toeplitz_design(1000, 2), recipe, 3.46, 150, large);
    out.require(within(big.mean, 6794.0, 0.30) && !big.unreliable,
                fmt("p=1000 M=2 H=150 a=3.46: %.0f +- %.0f vs 6794 (+-30%%)", big.mean,
                    big.std_error));
    return out;
}

struct EddCell {
    double rho;
    int m;
    double mc;
    double bound;
    McResult result;
};

std::vector<EddCell>& edd_cells() {
    static std::vector<EddCell> cells;
    if (!cells.empty()) {
        return cells;
    }
    cells = {{0.6, 0, 16.18, 20.59, {}},
             {0.8, 0, 8.11, 12.46, {}},
             {0.6, 2, 24.04, 25.99, {}},
             {0.8, 2, 12.44, 16.38, {}}};
    TrainingRecipe recipe;
    recipe.n0 = 200;
    for (std::size_t k = 0; k < cells.size(); ++k) {
        auto spec = identity_design(1000, cells[k].m);
        spec.post_change = make_post_change(ChangeModel::Bandable, 1000, cells[k].rho, 200);
        McOptions opt;
        opt.replicates = 200;
        opt.seed = 30000 + k;
        cells[k].result = monte_carlo_edd(spec, recipe, 3.58, 100, opt, true);
    }
    return cells;
}

Outcome edd_reproduction() {
    Outcome out;
    const auto& cells = edd_cells();
    for (const auto& c : cells) {
        const double mean = c.result.mean;
        out.require(within(mean, c.mc, 0.30) && mean <= c.bound && c.result.censored == 0,
                    fmt("rho=%.1f M=%.0f: ", c.rho, c.m) +
                        fmt("%.2f (ref %.2f, bound %.2f)", mean, c.mc, c.bound));
    }
    const auto d = [&](int k) { return cells[static_cast<std::size_t>(k)].result.mean; };
    out.require(d(0) > d(1) && d(2) > d(3), "decreasing in rho");
    out.require(d(2) > d(0) && d(3) > d(1), "increasing in M");
    return out;
}

Outcome edd_bound_formula() {
    struct Row {
        ChangeModel model;
        int h;
        double a;
        double printed[3][3];  // [rho 0.6/0.7/0.8][M 0/1/2]
    };
    const Row rows[] = {
        {ChangeModel::Bandable, 100, 3.58,
         {{20.59, 23.63, 25.99}, {16.23, 18.79, 20.83}, {12.46, 14.61, 16.38}}},
        {ChangeModel::Bandable, 150, 3.46,
         {{24.36, 28.10, 31.04}, {19.11, 22.21, 24.70}, {14.59, 17.13, 19.22}}},
        {ChangeModel::Strong, 100, 3.58,
         {{3.04, 4.15, 6.23}, {2.89, 3.99, 5.05}, {2.78, 3.87, 4.92}}},
        {ChangeModel::Strong, 150, 3.46,
         {{3.25, 4.40, 5.51}, {3.07, 4.20, 5.30}, {2.94, 4.05, 5.13}}},
    };
    const double rhos[] = {0.6, 0.7, 0.8};
    const int p = 1000;
    int matched = 0, total = 0;
    double worst = 0.0;
    for (const auto& row : rows) {
        for (int r = 0; r < 3; ++r) {
            const auto change = make_post_change(row.model, p, rhos[r], 200);
            for (int m = 0; m <= 2; ++m) {
                auto spec = identity_design(p, m);
                spec.post_change = change;
                const double sd = population_null_sd(spec, row.h);
                const double norm = population_change_norm(spec);
                const double bound = edd_upper_bound(row.a, row.h, m, sd, norm).bound;
                const double err = std::abs(bound / row.printed[r][m] - 1.0);
                matched += err <= 0.02;
                worst = std::max(worst, err);
                ++total;
            }
        }
    }
    Outcome out;
    out.require(matched >= 6, fmt("%.0f of %.0f reference bound cells within 2%%", matched, total));
    out.detail += fmt(" (largest deviation %.3f)", worst);
    return out;
}

Outcome minimum_detectable() {
    const double rho = min_detectable_rho(ChangeModel::Bandable, 1000, 3.58, 100);
    Outcome out;
    out.require(std::abs(rho - 0.133) <= 0.002, fmt("rho_min = %.4f", rho));
    return out;
}

Outcome m_selection() {
    Outcome out;
    for (int m : {0, 1}) {
        const auto hist = m_selection_study(toeplitz_design(1000, m), 200, 100, 40000 + m);
        const int hits = hist.count(m) ? hist.at(m) : 0;
        const int need = m == 0 ? 95 : 90;
        out.require(hits >= need, fmt("M=%.0f: %.0f/100 correct (need %.0f)", m, hits, need));
    }
    return out;
}

Outcome oracle_equivalence() {
    Outcome out;
    std::mt19937_64 rng(50000);
    double worst = 0.0;
    for (int stream = 0; stream < 50; ++stream) {
        const int p = std::uniform_int_distribution<int>(1, 30)(rng);
        const int m = std::uniform_int_distribution<int>(0, 3)(rng);
        const int h = std::uniform_int_distribution<int>(2 * m + 5, 80)(rng);
        const int steps = 5 * h;
        const auto x = testing::random_normal(p, steps, rng());
        const Eigen::VectorXd mean = x.leftCols(h).rowwise().mean();
        const auto plan = build_weight_plan(h, m);
        WindowState w(h, p);
        for (int k = 0; k < steps; ++k) {
            w.push(x.col(k), mean);
            if (k + 1 < h) {
                continue;
            }
            const double inc = *statistic_windowed(w, plan);
            const double batch = statistic_batch(x.middleCols(k + 1 - h, h), mean, plan);
            worst = std::max(worst, std::abs(inc - batch) / std::max(std::abs(batch), 1e-300));
        }
    }
    out.require(worst <= 1e-10, fmt("50 streams, max rel diff %.2e", worst));

    bool symmetric = true, banded = true, zero_sum = true;
    for (int m = 0; m <= 4; ++m) {
        for (int h : {2 * m + 5, 37, 100, 200}) {
            const auto plan = build_weight_plan(h, m);
            const auto& wm = plan.weights();
            symmetric = symmetric && (wm - wm.transpose()).cwiseAbs().maxCoeff() == 0.0;
            for (int i = 0; i < h; ++i) {
                for (int j = std::max(0, i - m); j <= std::min(h - 1, i + m); ++j) {
                    banded = banded && wm(i, j) == 0.0;
                }
            }
            zero_sum = zero_sum && std::abs(wm.sum()) <= 1e-9 * wm.cwiseAbs().sum();
        }
    }
    out.require(symmetric, "symmetry");
    out.require(banded, "banded zeros");
    out.require(zero_sum, "sum W = 0");
    const double ratio = build_weight_plan(200, 0).sum_squares() / std::pow(200.0, 4);
    out.require(within(ratio, 0.45655, 0.05), fmt("sum W^2/H^4 at H=200 = %.4f vs 0.45655", ratio));
    return out;
}

Outcome stationarity_size() {
    const int reps = 1000;
    const auto spec = toeplitz_design(200, 0);
    std::vector<char> rejected(reps, 0);
    parallel_for(reps, 0, [&](int r) {
        const auto x = gen_stream(spec, 200, replicate_seed(60000, static_cast<std::uint64_t>(r)));
        rejected[static_cast<std::size_t>(r)] =
            stationarity_test(x, x.rowwise().mean(), 0, 0.05).rejected;
    });
    const double rate =
        static_cast<double>(std::count(rejected.begin(), rejected.end(), 1)) / reps;
    Outcome out;
    out.require(rate >= 0.02 && rate <= 0.09, fmt("rejection rate %.3f at alpha 0.05", rate));
    return out;
}

Outcome localization() {
    Outcome out;
    for (const auto& c : edd_cells()) {
        if (c.rho != 0.8) {
            continue;
        }
        std::vector<double> abs_err;
        for (double e : c.result.localization_errors) {
            abs_err.push_back(std::abs(e));
        }
        const bool complete = abs_err.size() == 200;
        const double med = abs_err.empty() ? INFINITY : median(abs_err);
        out.require(complete && med <= 5.0,
                    fmt("rho=0.8 M=%.0f: median |tau_hat - tau| = %.1f over %.0f runs", c.m, med,
                        static_cast<double>(abs_err.size())));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    set_warning_handler({});
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"threshold calibration", threshold_calibration},
        {"Monte Carlo ARL", monte_carlo_arl_check},
        {"EDD reproduction", edd_reproduction},
        {"EDD bound formula", edd_bound_formula},
        {"minimum detectable change", minimum_detectable},
        {"dependence order selection", m_selection},
        {"oracle equivalence and weight identities", oracle_equivalence},
        {"stationarity test size", stationarity_size},
        {"change localization", localization},
    };
    std::set<int> only;
    for (int k = 1; k < argc; ++k) {
        only.insert(std::atoi(argv[k]));
    }
    int failures = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        if (!only.empty() && !only.count(id)) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failures += !o.pass;
        std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id,
                    criteria[k].first.c_str(), o.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
