#include "bsps/simulation.hpp"

#include "bsps/errors.hpp"
#include "bsps/parallel.hpp"
#include "bsps/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace bsps {

Index SimulationConfig::active_count() const {
    return static_cast<Index>(std::floor(static_cast<double>(p) * zeta));
}

void validate(const SimulationConfig& c) {
    if (c.scenario != 1 && c.scenario != 2) throw Error(ErrorKind::InvalidArgument, "scenario must be 1 or 2");
    if (c.p < 1 || c.n < 2 || c.m < 1) throw Error(ErrorKind::InvalidArgument, "need p >= 1, n >= 2, m >= 1");
    if (!(c.zeta > 0.0 && c.zeta <= 1.0)) throw Error(ErrorKind::InvalidArgument, "zeta must lie in (0, 1]");
    if (!(c.rho >= 0.0 && c.rho < 1.0)) throw Error(ErrorKind::InvalidArgument, "rho must lie in [0, 1)");
    if (!(c.snr > 0.0)) throw Error(ErrorKind::InvalidArgument, "snr must be positive");
    if (c.fixed_beta) {
        if (c.fixed_beta->size() != c.p) throw Error(ErrorKind::DimensionMismatch, "fixed beta must have length p");
        if (c.fixed_beta->cwiseAbs().maxCoeff() == 0.0) {
            throw Error(ErrorKind::InvalidArgument, "fixed beta must have a nonzero entry");
        }
    } else if (c.active_count() < 1) {
        throw Error(ErrorKind::InvalidArgument, "floor(p * zeta) must be at least 1");
    }
}

MatrixXd correlation_matrix(const SimulationConfig& c) {
    const Index p0 = c.active_count();
    MatrixXd sigma = MatrixXd::Identity(c.p, c.p);
    for (Index i = 0; i < c.p; ++i) {
        for (Index j = 0; j < c.p; ++j) {
            if (i == j) continue;
            if (c.scenario == 1 || (i < p0 && j < p0)) sigma(i, j) = c.rho;
        }
    }
    return sigma;
}

namespace {

MatrixXd gaussian_rows(Index rows, const MatrixXd& chol_lower, Rng& rng) {
    MatrixXd z(rows, chol_lower.rows());
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
    }
    return z * chol_lower.transpose();
}

std::uint64_t role(StreamRole r) { return static_cast<std::uint64_t>(r); }

}  // namespace

GeneratedProblem generate(const SimulationConfig& c) {
    validate(c);
    GeneratedProblem out;
    out.sigma_x = correlation_matrix(c);
    const Eigen::LLT<MatrixXd> llt(out.sigma_x);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorKind::NotPositiveDefinite, "correlation matrix failed its Cholesky factorization");
    }
    const MatrixXd lower = llt.matrixL();

    if (c.fixed_beta) {
        out.beta_true = *c.fixed_beta;
    } else {
        out.beta_true = VectorXd::Zero(c.p);
        const double a = 5.0 * std::log(static_cast<double>(c.n)) / std::sqrt(static_cast<double>(c.n));
        Rng coef(derive_seed(c.seed, {role(StreamRole::Coef)}));
        for (Index j = 0; j < c.active_count(); ++j) {
            const bool negative = coef.bernoulli(0.2);
            const double magnitude = a + std::abs(coef.normal());
            out.beta_true[j] = negative ? -magnitude : magnitude;
        }
    }
    out.active_set = support_of(out.beta_true);

    const double signal = out.beta_true.dot(out.sigma_x * out.beta_true);
    out.sigma = std::sqrt(signal / c.snr);

    Rng train(derive_seed(c.seed, {role(StreamRole::Train)}));
    Rng test(derive_seed(c.seed, {role(StreamRole::Test)}));
    Rng noise(derive_seed(c.seed, {role(StreamRole::Noise)}));
    out.x_train = gaussian_rows(c.n, lower, train);
    out.x_test = gaussian_rows(c.m, lower, test);
    out.y_train = out.x_train * out.beta_true;
    for (Index i = 0; i < c.n; ++i) out.y_train[i] += out.sigma * noise.normal();
    out.y_test = out.x_test * out.beta_true;
    for (Index i = 0; i < c.m; ++i) out.y_test[i] += out.sigma * noise.normal();
    return out;
}

SupportRecovery support_recovery(const VectorXd& beta_true, const VectorXd& beta_hat) {
    double both = 0.0, truth = 0.0, found = 0.0;
    for (Index j = 0; j < beta_true.size(); ++j) {
        const bool t = beta_true[j] != 0.0;
        const bool h = beta_hat[j] != 0.0;
        both += (t && h) ? 1.0 : 0.0;
        truth += t ? 1.0 : 0.0;
        found += h ? 1.0 : 0.0;
    }
    SupportRecovery out;
    if (truth > 0.0) out.recall = both / truth;
    if (found > 0.0) out.precision = both / found;
    return out;
}

double pearson(const VectorXd& a, const VectorXd& b) {
    const VectorXd ca = a.array() - a.mean();
    const VectorXd cb = b.array() - b.mean();
    const double sab = ca.dot(cb);
    const double saa = ca.squaredNorm();
    const double sbb = cb.squaredNorm();
    if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

double relative_mspe(const VectorXd& prediction, const VectorXd& y, double sigma) {
    return (y - prediction).squaredNorm() / static_cast<double>(y.size()) / (sigma * sigma);
}

MetricsReport evaluate(const FittedModel& model, const GeneratedProblem& problem) {
    if (model.p() != problem.x_test.cols()) {
        throw Error(ErrorKind::DimensionMismatch, "model and problem disagree on p");
    }
    const MatrixXd per_model = predict_per_model(model, problem.x_test);
    const VectorXd ensemble = per_model.rowwise().sum() / static_cast<double>(per_model.cols());

    MetricsReport report;
    report.mspe_rel = relative_mspe(ensemble, problem.y_test, problem.sigma);
    const SupportRecovery rec = support_recovery(problem.beta_true, model.ensemble_beta);
    report.recall = rec.recall;
    report.precision = rec.precision;

    const Index groups = per_model.cols();
    for (Index g = 0; g < groups; ++g) {
        report.mspe_bar += relative_mspe(per_model.col(g), problem.y_test, problem.sigma);
    }
    report.mspe_bar /= static_cast<double>(groups);

    double cor_sum = 0.0;
    int pairs = 0;
    for (Index g = 0; g < groups; ++g) {
        for (Index h = g + 1; h < groups; ++h) {
            const double r = pearson(per_model.col(g), per_model.col(h));
            if (std::isnan(r)) continue;
            cor_sum += r;
            ++pairs;
        }
    }
    if (pairs > 0) report.cor_bar = cor_sum / pairs;
    return report;
}

// ---------------------------------------------------------------------------

std::vector<StudyRow> run_study(const StudyConfig& config) {
    validate(config.base);
    if (config.replications < 1) throw Error(ErrorKind::InvalidArgument, "need at least one replication");
    if (config.groups.empty() || config.t_grid.empty()) {
        throw Error(ErrorKind::InvalidArgument, "study needs model counts and a t grid");
    }

    std::optional<VectorXd> shared_beta;
    if (config.fixed_coefficients && !config.base.fixed_beta) shared_beta = generate(config.base).beta_true;

    const auto n_groups = config.groups.size();
    const auto cells = static_cast<std::size_t>(config.replications) * n_groups;
    std::vector<StudyRow> rows(cells);

    parallel_for(cells, config.threads, [&](std::size_t cell) {
        const auto rep = static_cast<int>(cell / n_groups);
        const int groups = config.groups[cell % n_groups];

        SimulationConfig sim = config.base;
        sim.seed = derive_seed(config.base.seed,
                               {static_cast<std::uint64_t>(StreamRole::Replication), static_cast<std::uint64_t>(rep)});
        if (shared_beta) sim.fixed_beta = shared_beta;
        const GeneratedProblem problem = generate(sim);

        std::vector<int> u_grid;
        for (int u : config.u_grid) {
            if (u >= 1 && u <= groups) u_grid.push_back(u);
        }
        if (u_grid.empty()) {
            if (config.mode == TuningMode::Fixed) {
                u_grid.push_back(1);
            } else {
                for (int u = 1; u <= groups; ++u) u_grid.push_back(u);
            }
        }

        SolverOptions solver = config.solver;
        solver.seed = sim.seed;
        const auto start = std::chrono::steady_clock::now();
        FittedModel model;
        if (config.mode == TuningMode::CrossValidated) {
            CvOptions cv;
            cv.groups = groups;
            cv.t_grid = config.t_grid;
            cv.u_grid = u_grid;
            cv.folds = config.folds;
            cv.solver = solver;
            model = cross_validate(problem.x_train, problem.y_train, cv);
        } else {
            model = fit_model(problem.x_train, problem.y_train, groups, config.t_grid.front(),
                              std::vector<int>(static_cast<std::size_t>(sim.p), u_grid.front()), solver);
        }
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

        StudyRow& row = rows[cell];
        row.rep = rep;
        row.groups = groups;
        row.t = model.ensemble.constraints.t;
        row.u = model.cv ? model.cv->selected.second : u_grid.front();
        row.metrics = evaluate(model, problem);
        row.fit_seconds = elapsed.count();
    });
    return rows;
}

namespace {

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt17(const std::optional<double>& v) { return v ? fmt17(*v) : std::string("NA"); }

}  // namespace

void write_study_csv(std::ostream& out, const StudyConfig& config, const std::vector<StudyRow>& rows) {
    const SimulationConfig& b = config.base;
    out << "rep,scenario,p,n,zeta,rho,snr,G,t,u,mspe_rel,recall,precision,mspe_bar,cor_bar,fit_seconds\n";
    for (const StudyRow& r : rows) {
        out << r.rep << ',' << b.scenario << ',' << b.p << ',' << b.n << ',' << fmt17(b.zeta) << ','
            << fmt17(b.rho) << ',' << fmt17(b.snr) << ',' << r.groups << ',' << r.t << ',' << r.u << ','
            << fmt17(r.metrics.mspe_rel) << ',' << fmt17(r.metrics.recall) << ','
            << fmt17(r.metrics.precision) << ',' << fmt17(r.metrics.mspe_bar) << ','
            << fmt17(r.metrics.cor_bar) << ',' << fmt17(r.fit_seconds) << '\n';
    }
}

}  // namespace bsps
