#pragma once

#include "bsps/numerics.hpp"
#include "bsps/tuning.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace bsps {

struct SimulationConfig {
    int scenario = 1;  // 1: all predictors equicorrelated, 2: only the active block
    Index p = 100;
    Index n = 50;
    Index m = 2000;
    double zeta = 0.2;
    double rho = 0.5;
    double snr = 3.0;
    std::uint64_t seed = 0;
    // Replaces the random coefficient draw when set (length p).
    std::optional<VectorXd> fixed_beta;

    Index active_count() const;
};

void validate(const SimulationConfig& config);

struct GeneratedProblem {
    MatrixXd x_train;
    VectorXd y_train;
    MatrixXd x_test;
    VectorXd y_test;
    VectorXd beta_true;
    double sigma = 0.0;
    IndexSet active_set;
    MatrixXd sigma_x;  // predictor correlation matrix
};

MatrixXd correlation_matrix(const SimulationConfig& config);

GeneratedProblem generate(const SimulationConfig& config);

struct MetricsReport {
    double mspe_rel = 0.0;
    std::optional<double> recall;
    std::optional<double> precision;
    double mspe_bar = 0.0;
    std::optional<double> cor_bar;  // undefined for G = 1 or constant predictions
};

struct SupportRecovery {
    std::optional<double> recall;
    std::optional<double> precision;
};

SupportRecovery support_recovery(const VectorXd& beta_true, const VectorXd& beta_hat);

double pearson(const VectorXd& a, const VectorXd& b);

/// Relative MSPE of raw-scale predictions against y, divided by sigma^2.
double relative_mspe(const VectorXd& prediction, const VectorXd& y, double sigma);

MetricsReport evaluate(const FittedModel& model, const GeneratedProblem& problem);

// ---------------------------------------------------------------------------
// Monte-Carlo study

enum class TuningMode {
    CrossValidated,  // (t, u) chosen by CV over the grids
    Fixed,           // first entries of the grids used directly
};

struct StudyConfig {
    SimulationConfig base;
    int replications = 1;
    std::vector<int> groups{5};       // one method configuration per entry
    std::vector<int> t_grid;          // absolute counts
    std::vector<int> u_grid;          // empty: {1..G}
    int folds = 5;
    TuningMode mode = TuningMode::CrossValidated;
    SolverOptions solver;
    int threads = 1;
    bool fixed_coefficients = false;  // draw beta once per configuration
};

struct StudyRow {
    int rep = 0;
    int groups = 0;
    int t = 0;
    int u = 0;
    MetricsReport metrics;
    double fit_seconds = 0.0;
};

std::vector<StudyRow> run_study(const StudyConfig& config);

void write_study_csv(std::ostream& out, const StudyConfig& config, const std::vector<StudyRow>& rows);

}  // namespace bsps
