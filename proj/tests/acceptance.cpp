// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "bsps/combinatorics.hpp"
#include "bsps/psgd.hpp"
#include "bsps/rng.hpp"
#include "bsps/simulation.hpp"
#include "bsps/stepwise.hpp"
#include "bsps/tuning.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

using namespace bsps;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

// Every ensemble produced anywhere in this harness is recorded here.
struct ConstraintLedger {
    long checked = 0;
    long violations = 0;
    void record(const SplitEnsemble& e) {
        ++checked;
        if (!satisfies_constraints(e)) ++violations;
    }
} ledger;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

StandardizedDataset sparse_signal(Index n, Index p, Index active, std::uint64_t seed, double noise = 1.0) {
    const MatrixXd x = oracle::random_matrix(n, p, seed);
    VectorXd y = noise * oracle::random_vector(n, seed ^ 0x9e3779b97f4a7c15ULL);
    Rng rng(seed + 17);
    for (Index j = 0; j < active; ++j) y += x.col(j) * (rng.bernoulli(0.5) ? 1.0 : -1.0) * (1.0 + rng.uniform());
    return standardize(x, y);
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------

Outcome combinatorics_anchors() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    const BigCount k = count_subsets(15, 10);
    const BigCount s = count_splits(15, 3, 10);
    const bool k_ok = k == 30826;
    const bool s_ok = s == 171761951;
    long mismatches = 0;
    for (int p = 1; p <= 8; ++p) {
        for (int g = 1; g <= std::min(p, 3); ++g) {
            for (int t = 0; t <= 4; ++t) {
                const auto up = static_cast<unsigned>(p), ug = static_cast<unsigned>(g), ut = static_cast<unsigned>(t);
                if (count_splits(up, ug, ut, SplitConvention::NonEmptyGroups) != oracle::enumerate_splits(p, g, t, false))
                    ++mismatches;
                if (count_splits(up, ug, ut, SplitConvention::AllowEmptyGroups) != oracle::enumerate_splits(p, g, t, true))
                    ++mismatches;
            }
        }
    }
    const double secs = elapsed_since(start);
    o.pass = k_ok && s_ok && mismatches == 0 && secs < 1.0;
    o.detail = "K(15,10)=" + k.str() + " (expected 30826) T(15,3,10)=" + s.str() +
               " (expected 171761951) enumeration mismatches=" + std::to_string(mismatches) + " time=" + fmt(secs) + "s";
    return o;
}

Outcome projection_oracle() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    Rng rng(derive_seed(2, {1}));
    int misses = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto p = static_cast<Index>(1 + rng.below(12));
        VectorXd v(p);
        for (Index j = 0; j < p; ++j) v[j] = rng.normal();
        IndexSet allowed;
        for (Index j = 0; j < p; ++j)
            if (rng.bernoulli(0.6)) allowed.push_back(j);
        const int t = static_cast<int>(1 + rng.below(static_cast<std::uint64_t>(p)));
        const double got = (project_subset(v, allowed, t) - v).squaredNorm();
        const double best = oracle::best_projection_error(v, allowed, t);
        if (got > best) ++misses;
    }
    const double secs = elapsed_since(start);
    o.pass = misses == 0 && secs < 10.0;
    o.detail = "1000 vectors, " + std::to_string(misses) + " above the enumeration minimum, time=" + fmt(secs) + "s";
    return o;
}

Outcome solver_monotonicity() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    const int group_choices[] = {2, 3, 5};
    double worst = 0.0;
    long steps = 0;
    for (int run = 0; run < 200; ++run) {
        const auto seed = static_cast<std::uint64_t>(run);
        const int groups = group_choices[run % 3];
        const auto data = sparse_signal(30, 50, 8, 3000 + seed);
        const int t = 3 + run % 6;
        const int u = 1 + (run / 3) % groups;
        const Constraints c = Constraints::uniform(groups, t, u, 50);

        MatrixXd init;
        if (run % 2 == 0) {
            init = step_split_regression(data, groups, 0.1);
        } else {
            init = oracle::random_matrix(50, groups, 7000 + seed);
        }
        std::map<int, std::vector<double>> inner;
        PsgdOptions opts;
        opts.searches = run % 4 == 0 ? 2 : 0;
        opts.seed = seed;
        opts.on_inner_iteration = [&](int pass, double total) { inner[pass].push_back(total); };
        const SplitEnsemble e = psgd_fit(data, init, c, opts);
        ledger.record(e);
        for (const auto& [pass, seq] : inner) {
            for (std::size_t k = 1; k < seq.size(); ++k) {
                worst = std::max(worst, seq[k] - seq[k - 1]);
                ++steps;
            }
        }
        for (std::size_t k = 1; k < e.trace.size(); ++k) worst = std::max(worst, e.trace[k] - e.trace[k - 1]);
    }
    const double secs = elapsed_since(start);
    o.pass = worst <= 1e-9 && secs < 60.0;
    o.detail = "200 runs, " + std::to_string(steps) + " inner steps, largest increase=" + fmt(worst) +
               " time=" + fmt(secs) + "s";
    return o;
}

Outcome bss_reduction() {
    Outcome o;
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const auto seed = static_cast<std::uint64_t>(trial);
        const int groups = 2 + trial % 4;
        const auto data = sparse_signal(40, 25, 5, 400 + seed);
        const VectorXd start = oracle::random_vector(25, 800 + seed);
        const SplitEnsemble e =
            psgd_fit(data, start.replicate(1, groups), Constraints::uniform(groups, 2 + trial % 5, groups, 25));
        ledger.record(e);
        for (int g = 1; g < groups; ++g) worst = std::max(worst, (e.beta.col(g) - e.beta.col(0)).cwiseAbs().maxCoeff());
    }
    o.pass = worst <= 1e-12;
    o.detail = "30 instances, largest model disagreement=" + fmt(worst);
    return o;
}

Outcome small_instance_optimality() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    int exact = 0;
    std::vector<double> gaps;
    for (int inst = 0; inst < 50; ++inst) {
        const auto seed = static_cast<std::uint64_t>(inst);
        const auto data = sparse_signal(20, 8, 4, 9000 + seed);
        const Constraints c = Constraints::uniform(2, 2, 1, 8);
        const SplitEnsemble best = exhaustive_bsps(data, c);
        LassoOptions lasso;
        lasso.seed = seed;
        const SplitEnsemble fit = psgd_fit(data, step_split_regression(data, 2, 0.05, lasso), c);
        ledger.record(best);
        ledger.record(fit);
        const double gap = fit.objective - best.objective;
        if (gap <= 1e-8) {
            ++exact;
        } else {
            gaps.push_back(gap);
        }
    }
    const double secs = elapsed_since(start);
    o.pass = exact >= 40 && secs < 120.0;
    std::ostringstream ss;
    ss << exact << "/50 at the exhaustive optimum";
    if (!gaps.empty()) {
        ss << "; remaining gaps:";
        for (double g : gaps) ss << ' ' << fmt(g);
    }
    ss << " time=" << fmt(secs) << "s";
    o.detail = ss.str();
    return o;
}

StudyConfig diversity_trend_study() {
    StudyConfig s;
    s.base.scenario = 2;
    s.base.n = 50;
    s.base.p = 100;
    s.base.m = 2000;
    s.base.zeta = 0.2;
    s.base.rho = 0.5;
    s.base.snr = 3.0;
    s.base.seed = 20240601;
    s.replications = 20;
    s.groups = {2, 3, 4, 5};
    s.t_grid = {20};
    s.mode = TuningMode::CrossValidated;
    s.folds = 5;
    s.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return s;
}

Outcome diversity_trend() {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    const StudyConfig s = diversity_trend_study();
    const auto rows = run_study(s);
    std::map<int, std::vector<double>> cor, mspe;
    for (const auto& r : rows) {
        if (r.metrics.cor_bar && std::isfinite(*r.metrics.cor_bar)) cor[r.groups].push_back(*r.metrics.cor_bar);
        mspe[r.groups].push_back(r.metrics.mspe_rel);
    }
    bool decreasing = true;
    std::ostringstream ss;
    for (int g = 2; g <= 5; ++g) {
        ss << "G=" << g << " cor=" << fmt(median(cor[g])) << " mspe=" << fmt(median(mspe[g])) << "; ";
        if (g > 2 && !(median(cor[g]) < median(cor[g - 1]))) decreasing = false;
    }
    const bool mspe_ok = median(mspe[5]) <= median(mspe[2]);
    const double secs = elapsed_since(start);
    o.pass = decreasing && mspe_ok;
    ss << "cor strictly decreasing=" << (decreasing ? "yes" : "no") << " mspe(5)<=mspe(2)=" << (mspe_ok ? "yes" : "no")
       << " time=" << fmt(secs) << "s on " << s.threads << " threads";
    o.detail = ss.str();
    return o;
}

Outcome stepwise_correctness() {
    Outcome o;
    long additions = 0, failures = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const auto seed = static_cast<std::uint64_t>(trial);
        const int groups = 2 + trial % 4;
        const double gamma = trial % 2 ? 0.05 : 0.2;
        const auto data = sparse_signal(35 + trial % 10, 30, 6, 1200 + seed);
        const auto result = step_split_fit(data, groups, gamma);
        std::set<Index> seen;
        for (const auto& m : result.models)
            for (Index j : m.support)
                if (!seen.insert(j).second) ++failures;
        std::vector<IndexSet> replay(static_cast<std::size_t>(groups));
        for (const Addition& a : result.log) {
            auto& support = replay[static_cast<std::size_t>(a.model)];
            const double before = oracle::ols_rss(data.x_std, support, data.y_std);
            support.push_back(a.predictor);
            const double after = oracle::ols_rss(data.x_std, support, data.y_std);
            const double pv = f_test_pvalue(before, before - after, data.n(), static_cast<Index>(support.size()) - 1);
            if (!(pv < gamma)) ++failures;
            ++additions;
        }
        for (int g = 0; g < groups; ++g)
            if (replay[static_cast<std::size_t>(g)] != result.models[static_cast<std::size_t>(g)].support) ++failures;
    }
    o.pass = failures == 0;
    o.detail = "40 runs, " + std::to_string(additions) + " replayed additions, " + std::to_string(failures) + " failures";
    return o;
}

Outcome oracle_floor() {
    Outcome o;
    std::vector<SimulationConfig> configs;
    const StudyConfig s = diversity_trend_study();
    for (int rep = 0; rep < s.replications; ++rep) {
        SimulationConfig c = s.base;
        c.seed = derive_seed(s.base.seed, {static_cast<std::uint64_t>(StreamRole::Replication), static_cast<std::uint64_t>(rep)});
        configs.push_back(c);
    }
    for (int k = 0; k < 10; ++k) {
        SimulationConfig c;
        c.scenario = 1 + k % 2;
        c.p = 60;
        c.n = 40;
        c.m = 2000;
        c.rho = 0.1 * k;
        c.seed = 55 + static_cast<std::uint64_t>(k);
        configs.push_back(c);
    }
    double lo = 1e300, hi = -1e300;
    for (const auto& c : configs) {
        const auto prob = generate(c);
        FittedModel truth;
        truth.ensemble.beta = prob.beta_true.replicate(1, 2);
        truth.ensemble_beta = prob.beta_true;
        truth.col_means = VectorXd::Zero(c.p);
        truth.col_scales = VectorXd::Ones(c.p);
        const double r = relative_mspe(predict(truth, prob.x_test), prob.y_test, prob.sigma);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    o.pass = lo >= 0.9 && hi <= 1.1;
    o.detail = std::to_string(configs.size()) + " problems, mspe_rel range [" + fmt(lo) + ", " + fmt(hi) + "]";
    return o;
}

Outcome numerical_kernels() {
    Outcome o;
    double grad_err = 0.0;
    for (int k = 0; k < 20; ++k) {
        const auto seed = static_cast<std::uint64_t>(k);
        const MatrixXd x = oracle::random_matrix(25, 6, 100 + seed);
        const VectorXd y = oracle::random_vector(25, 200 + seed);
        const VectorXd b = oracle::random_vector(6, 300 + seed);
        const VectorXd g = ls_gradient(x, y, b);
        VectorXd fd(6);
        for (Index j = 0; j < 6; ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(b[j]));
            VectorXd bp = b, bm = b;
            bp[j] += h;
            bm[j] -= h;
            fd[j] = (ls_loss(x, y, bp) - ls_loss(x, y, bm)) / (2 * h);
        }
        grad_err = std::max(grad_err, (g - fd).norm() / std::max(1e-12, g.norm()));
    }

    double kkt = 0.0;
    for (int k = 0; k < 20; ++k) {
        const auto data = sparse_signal(40, 12, 4, 500 + static_cast<std::uint64_t>(k));
        const IndexSet support{0, 1, 2, 3, 5, 8};
        LassoOptions opts;
        opts.seed = static_cast<std::uint64_t>(k);
        const LassoFit fit = lasso_refit(data, support, opts);
        kkt = std::max(kkt, oracle::kkt_violation(select_columns(data.x_std, support), data.y_std, fit.coef, fit.lambda));
    }

    double ortho = 0.0;
    for (int k = 0; k < 20; ++k) {
        const auto seed = static_cast<std::uint64_t>(k);
        MatrixXd x = oracle::random_matrix(15, k % 2 ? 20 : 8, 600 + seed);
        if (k % 3 == 0) x.col(1) = x.col(0) * 2.0;  // rank deficient
        const VectorXd y = oracle::random_vector(15, 700 + seed);
        const VectorXd b = min_norm_least_squares(x, y);
        ortho = std::max(ortho, (x.transpose() * (y - x * b)).cwiseAbs().maxCoeff());
    }
    o.pass = grad_err < 1e-5 && kkt <= 1e-6 && ortho <= 1e-8;
    o.detail = "gradient rel err=" + fmt(grad_err) + " lasso KKT=" + fmt(kkt) + " residual orthogonality=" + fmt(ortho);
    return o;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome reproducibility() {
    Outcome o;
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("bsps_accept_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    {
        const MatrixXd x = oracle::random_matrix(60, 30, 4242);
        const VectorXd y = x.leftCols(4).rowwise().sum() + oracle::random_vector(60, 4343);
        std::ofstream out(dir / "data.csv");
        out << "y";
        for (int j = 1; j <= 30; ++j) out << ",x" << j;
        out << '\n';
        for (Index i = 0; i < 60; ++i) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", y[i]);
            out << buf;
            for (Index j = 0; j < 30; ++j) {
                std::snprintf(buf, sizeof buf, ",%.17g", x(i, j));
                out << buf;
            }
            out << '\n';
        }
    }
    const std::string bin = BSPS_CLI_PATH;
    std::vector<std::string> models, reports;
    bool ran = true;
    for (int threads : {1, 1, 4, 7}) {
        const std::string tag = std::to_string(models.size());
        const fs::path model = dir / ("m" + tag + ".json");
        const fs::path report = dir / ("m" + tag + ".cv.csv");
        const std::string cmd = bin + " cv " + (dir / "data.csv").string() +
                                " --groups 3 --t-grid 0.1n,0.2n --folds 4 --seed 77 --threads " +
                                std::to_string(threads) + " --output " + model.string() + " --cv-output " +
                                report.string() + " > /dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) ran = false;
        models.push_back(slurp(model));
        reports.push_back(slurp(report));
    }
    fs::remove_all(dir);
    bool same = ran && !models[0].empty() && !reports[0].empty();
    for (std::size_t k = 1; k < models.size(); ++k) same = same && models[k] == models[0] && reports[k] == reports[0];
    o.pass = same;
    o.detail = std::string("4 cv runs at threads 1,1,4,7: ") + (same ? "byte-identical" : "outputs differ or a run failed");
    return o;
}

Outcome constraint_satisfaction() {
    Outcome o;
    // A sweep through the tuning layer on top of everything recorded above.
    for (int k = 0; k < 12; ++k) {
        const auto seed = static_cast<std::uint64_t>(k);
        const auto data = sparse_signal(40, 20, 5, 1500 + seed);
        SolverOptions opts;
        opts.seed = seed;
        opts.searches = k % 3;
        const int groups = 2 + k % 3;
        for (const auto& [u, e] : decrementing_psgd(data, groups, 2 + k % 4, groups, opts)) ledger.record(e);
        std::vector<int> caps(20, groups);
        caps[static_cast<std::size_t>(k)] = 0;
        caps[static_cast<std::size_t>(k + 1)] = 1;
        for (const auto& [u, e] : decrementing_psgd(data, groups, 3, groups, opts, &caps)) ledger.record(e);
    }
    o.pass = ledger.violations == 0 && ledger.checked > 0;
    o.detail = std::to_string(ledger.checked) + " ensembles checked, " + std::to_string(ledger.violations) + " violations";
    return o;
}

}  // namespace

int main() {
    // Criterion 4 runs last so it sees every ensemble the other criteria fitted.
    const std::vector<std::pair<int, std::function<Outcome()>>> order{
        {1, combinatorics_anchors}, {2, projection_oracle},   {3, solver_monotonicity},
        {5, bss_reduction},         {6, small_instance_optimality}, {7, diversity_trend},
        {8, stepwise_correctness},  {9, oracle_floor},        {10, numerical_kernels},
        {11, reproducibility},      {4, constraint_satisfaction},
    };
    const std::map<int, std::string> names{
        {1, "combinatorics anchors"},     {2, "projection oracle equivalence"},
        {3, "solver monotonicity"},       {4, "constraint satisfaction"},
        {5, "single-model reduction"},    {6, "small-instance near-optimality"},
        {7, "diversity trend"},           {8, "stepwise correctness"},
        {9, "oracle floor"},              {10, "numerical kernels"},
        {11, "reproducibility"},
    };
    std::map<int, Outcome> results;
    for (const auto& [id, fn] : order) {
        try {
            results[id] = fn();
        } catch (const std::exception& e) {
            results[id] = {false, std::string("threw: ") + e.what()};
        }
    }
    int failed = 0;
    for (const auto& [id, r] : results) {
        std::cout << "criterion " << id << " (" << names.at(id) << "): " << (r.pass ? "PASS" : "FAIL") << " | "
                  << r.detail << '\n';
        if (!r.pass) ++failed;
    }
    std::cout << (11 - failed) << "/11 criteria passed\n";
    return failed == 0 ? 0 : 1;
}
