#include "bsps/cli.hpp"

#include "bsps/combinatorics.hpp"
#include "bsps/errors.hpp"
#include "bsps/io.hpp"
#include "bsps/simulation.hpp"
#include "bsps/tuning.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace bsps::cli {

namespace {

const std::vector<std::string> kCommands = {"fit", "cv", "predict", "simulate", "count", "oracle"};

Error usage(const std::string& what) { return Error(ErrorKind::InvalidArgument, what); }

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, ',')) {
        const auto a = item.find_first_not_of(" \t");
        const auto b = item.find_last_not_of(" \t");
        if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    }
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw usage(what + ": '" + s + "' is not a number");
    }
}

int parse_int(const std::string& s, const std::string& what) {
    const double v = parse_double(s, what);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw usage(what + ": '" + s + "' is not an integer");
    return static_cast<int>(v);
}

// JSON config values become leading command-line tokens so explicit flags,
// which come later, take precedence.
std::vector<std::string> config_tokens(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::DataError, "cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw Error(ErrorKind::DataError, "config " + path + ": " + ex.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::DataError, "config " + path + " must hold a JSON object");
    std::vector<std::string> tokens;
    for (const auto& [key, value] : j.items()) {
        std::string flag = "--" + key;
        for (char& c : flag) c = c == '_' ? '-' : c;
        auto scalar = [](const nlohmann::json& v) {
            if (v.is_string()) return v.get<std::string>();
            if (v.is_number_integer()) return std::to_string(v.get<long long>());
            if (v.is_number()) return format_double(v.get<double>());
            throw Error(ErrorKind::DataError, "unsupported config value " + v.dump());
        };
        if (value.is_boolean()) {
            if (value.get<bool>()) tokens.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (const auto& item : value) joined += (joined.empty() ? "" : ",") + scalar(item);
            tokens.push_back(flag);
            tokens.push_back(joined);
        } else {
            tokens.push_back(flag);
            tokens.push_back(scalar(value));
        }
    }
    return tokens;
}

std::vector<std::string> expand_config(const std::vector<std::string>& argv) {
    std::optional<std::string> path;
    for (std::size_t i = 1; i < argv.size(); ++i) {
        if (argv[i] == "--config" && i + 1 < argv.size()) path = argv[i + 1];
        if (argv[i].rfind("--config=", 0) == 0) path = argv[i].substr(9);
    }
    if (!path) return argv;
    std::size_t insert_at = argv.size();
    for (std::size_t i = 1; i < argv.size(); ++i) {
        if (std::find(kCommands.begin(), kCommands.end(), argv[i]) != kCommands.end()) {
            insert_at = i + 1;
            break;
        }
    }
    std::vector<std::string> out(argv.begin(), argv.begin() + static_cast<std::ptrdiff_t>(insert_at));
    for (auto& tok : config_tokens(*path)) out.push_back(std::move(tok));
    out.insert(out.end(), argv.begin() + static_cast<std::ptrdiff_t>(insert_at), argv.end());
    return out;
}

struct Dataset {
    std::vector<std::string> names;
    MatrixXd x;
    VectorXd y;
};

Dataset load_training(const std::string& path) {
    const CsvTable table = read_csv_file(path);
    if (table.header.size() < 2) throw Error(ErrorKind::DataError, path + ": need a response and a predictor column");
    if (table.values.rows() < 3) throw Error(ErrorKind::DataError, path + ": need at least three rows");
    Dataset d;
    d.names.assign(table.header.begin() + 1, table.header.end());
    d.y = table.values.col(0);
    d.x = table.values.rightCols(table.values.cols() - 1);
    return d;
}

std::vector<int> resolve_u(const std::string& spec, Index p, int groups) {
    const auto items = split_commas(spec);
    std::vector<int> u;
    if (items.size() == 1) {
        u.assign(static_cast<std::size_t>(p), parse_int(items[0], "--u"));
    } else if (static_cast<Index>(items.size()) == p) {
        for (const auto& s : items) u.push_back(parse_int(s, "--u"));
    } else {
        throw usage("--u needs one value or one per predictor (" + std::to_string(p) + ")");
    }
    for (int v : u) {
        if (v < 0 || v > groups) throw usage("--u entries must lie in [0, G]");
    }
    if (items.size() == 1 && u.front() < 1) throw usage("scalar --u must lie in [1, G]");
    return u;
}

void check_solver(const SolverOptions& s, int groups) {
    if (groups < 2) throw usage("--groups must be at least 2");
    if (!(s.gamma > 0.0 && s.gamma < 1.0)) throw usage("--gamma must lie in (0, 1)");
    if (!(s.epsilon > 0.0)) throw usage("--epsilon must be positive");
    if (s.searches < 0) throw usage("--searches must be non-negative");
}

void check_t(int t, Index n, Index p) {
    if (t < 1 || t > std::min<Index>(n - 1, p)) {
        throw usage("t = " + std::to_string(t) + " must lie in [1, min(n-1, p)] = [1, " +
                    std::to_string(std::min<Index>(n - 1, p)) + "]");
    }
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
    if (path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::DataError, "cannot write " + path);
    f << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::DataError, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct SolverFlags {
    int groups = 5;
    double gamma = 0.05;
    double epsilon = 1e-6;
    int searches = 0;
    std::uint64_t seed = 0;
    int threads = 1;
    bool strict = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--groups", groups, "number of models G");
        cmd->add_option("--gamma", gamma, "Step-SplitReg significance threshold");
        cmd->add_option("--epsilon", epsilon, "convergence tolerance on the standardized scale");
        cmd->add_option("--searches", searches, "random model-order restarts");
        cmd->add_option("--seed", seed, "root seed for every random stream");
        cmd->add_option("--threads", threads, "worker threads");
        cmd->add_flag("--strict", strict, "exit 4 when a solver warning is raised");
    }

    SolverOptions solver() const {
        SolverOptions s;
        s.gamma = gamma;
        s.epsilon = epsilon;
        s.searches = searches;
        s.seed = seed;
        return s;
    }
};

}  // namespace

int resolve_count(const std::string& token, long n) {
    if (!token.empty() && (token.back() == 'n' || token.back() == 'N')) {
        const double frac = parse_double(token.substr(0, token.size() - 1), "fraction of n");
        if (!(frac > 0.0)) throw usage("fraction of n must be positive");
        return std::max(1, static_cast<int>(std::lround(frac * static_cast<double>(n))));
    }
    return parse_int(token, "count");
}

std::vector<int> resolve_count_list(const std::string& list, long n) {
    std::vector<int> out;
    for (const auto& item : split_commas(list)) out.push_back(resolve_count(item, n));
    if (out.empty()) throw usage("empty list");
    return out;
}

int run(const std::vector<std::string>& raw_argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Best split selection: sparse, diverse linear model ensembles"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON file of option values (flags override it)");

    // fit / cv
    SolverFlags fit_flags;
    std::string fit_data, fit_t = "1", fit_u = "1", fit_output = "-";
    auto* fit = app.add_subcommand("fit", "fit an ensemble at fixed (t, u)");
    fit->add_option("data", fit_data, "CSV, response first")->required();
    fit->add_option("--t", fit_t, "sparsity budget, count or fraction like 0.4n");
    fit->add_option("--u", fit_u, "diversity budget, scalar or one per predictor");
    fit->add_option("--output", fit_output, "model JSON path, - for stdout");
    fit->add_option("--config", config_path);
    fit_flags.attach(fit);

    SolverFlags cv_flags;
    std::string cv_data, cv_t = "0.3n,0.4n,0.5n", cv_u, cv_output = "-", cv_report_path;
    int cv_folds = 5;
    auto* cv = app.add_subcommand("cv", "choose (t, u) by cross-validation and fit");
    cv->add_option("data", cv_data, "CSV, response first")->required();
    cv->add_option("--t-grid", cv_t, "comma list of counts or fractions of n");
    cv->add_option("--u-grid", cv_u, "comma list, default 1..G");
    cv->add_option("--folds", cv_folds, "number of CV folds");
    cv->add_option("--output", cv_output, "model JSON path, - for stdout");
    cv->add_option("--cv-output", cv_report_path, "CV report CSV path");
    cv->add_option("--config", config_path);
    cv_flags.attach(cv);

    std::string pred_model, pred_data, pred_output = "-";
    bool per_model = false;
    auto* pred = app.add_subcommand("predict", "predict from a saved model");
    pred->add_option("data", pred_data, "feature CSV")->required();
    pred->add_option("--model", pred_model, "model JSON")->required();
    pred->add_flag("--per-model", per_model, "emit one column per model");
    pred->add_option("--output", pred_output, "prediction CSV path, - for stdout");
    pred->add_option("--config", config_path);

    std::string sim_output = "-", sim_groups = "5", sim_t = "0.4n", sim_u, sim_mode = "cv";
    int sim_reps = 1, sim_range = 0, sim_folds = 5, sim_threads = 1;
    SimulationConfig sim_cfg;
    bool sim_fixed_coef = false;
    SolverFlags sim_flags;
    auto* sim = app.add_subcommand("simulate", "Monte-Carlo study CSV");
    sim->add_option("--config", config_path, "simulation config JSON");
    sim->add_option("--replications", sim_reps);
    sim->add_option("--scenario", sim_cfg.scenario);
    sim->add_option("--p", sim_cfg.p);
    sim->add_option("--n", sim_cfg.n);
    sim->add_option("--m", sim_cfg.m);
    sim->add_option("--zeta", sim_cfg.zeta);
    sim->add_option("--rho", sim_cfg.rho);
    sim->add_option("--snr", sim_cfg.snr);
    sim->add_option("--seed", sim_cfg.seed);
    sim->add_option("--model-groups", sim_groups, "comma list of model counts");
    sim->add_option("--group-range", sim_range, "run G = 2..value");
    sim->add_option("--t-grid", sim_t);
    sim->add_option("--u-grid", sim_u);
    sim->add_option("--mode", sim_mode, "cv or fixed")->check(CLI::IsMember({"cv", "fixed"}));
    sim->add_option("--folds", sim_folds);
    sim->add_option("--threads", sim_threads);
    sim->add_option("--gamma", sim_flags.gamma);
    sim->add_option("--epsilon", sim_flags.epsilon);
    sim->add_flag("--fixed-coefficients", sim_fixed_coef);
    sim->add_option("--output", sim_output);

    unsigned count_p = 0, count_t = 0, count_groups = 1;
    bool count_splits_flag = false, allow_empty = false;
    auto* count = app.add_subcommand("count", "exact subset or split counts");
    count->add_option("--p", count_p)->required();
    count->add_option("--t", count_t)->required();
    count->add_option("--groups", count_groups);
    count->add_flag("--splits", count_splits_flag, "count splits into G groups");
    count->add_flag("--allow-empty", allow_empty, "let groups be empty when counting splits");
    count->add_option("--config", config_path);

    std::string oracle_data, oracle_u = "1";
    int oracle_groups = 2, oracle_t = 1;
    auto* oracle = app.add_subcommand("oracle", "exhaustive optimum for a small instance");
    oracle->add_option("data", oracle_data, "CSV, response first")->required();
    oracle->add_option("--groups", oracle_groups);
    oracle->add_option("--t", oracle_t);
    oracle->add_option("--u", oracle_u);
    oracle->add_option("--config", config_path);

    try {
        const std::vector<std::string> argv = expand_config(raw_argv);
        std::vector<const char*> cargv;
        for (const auto& a : argv) cargv.push_back(a.c_str());
        try {
            app.parse(static_cast<int>(cargv.size()), cargv.data());
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return kOk;
        } catch (const CLI::ParseError& e) {
            err << e.what() << "\n";
            return kUsage;
        }

        if (*fit) {
            const Dataset d = load_training(fit_data);
            const int t = resolve_count(fit_t, static_cast<long>(d.x.rows()));
            check_solver(fit_flags.solver(), fit_flags.groups);
            check_t(t, d.x.rows(), d.x.cols());
            const auto u = resolve_u(fit_u, d.x.cols(), fit_flags.groups);
            const FittedModel model = fit_model(d.x, d.y, fit_flags.groups, t, u, fit_flags.solver());
            write_text(fit_output, serialize_model(model), out);
            if (model.ensemble.iteration_cap_hit) {
                err << "warning: gradient iterations hit their cap\n";
                if (fit_flags.strict) return kSolverWarning;
            }
            return kOk;
        }

        if (*cv) {
            const Dataset d = load_training(cv_data);
            const long n = static_cast<long>(d.x.rows());
            CvOptions options;
            options.groups = cv_flags.groups;
            options.folds = cv_folds;
            options.solver = cv_flags.solver();
            options.threads = cv_flags.threads;
            check_solver(options.solver, options.groups);
            if (cv_folds < 2 || cv_folds > n) throw usage("--folds must lie in [2, n]");
            if (cv_flags.threads < 1) throw usage("--threads must be positive");
            options.t_grid = resolve_count_list(cv_t, n);
            const long n_train = n - (n + cv_folds - 1) / cv_folds;
            for (int t : options.t_grid) check_t(t, n_train, d.x.cols());
            if (cv_u.empty()) {
                for (int u = 1; u <= options.groups; ++u) options.u_grid.push_back(u);
            } else {
                options.u_grid = resolve_count_list(cv_u, n);
            }
            for (int u : options.u_grid) {
                if (u < 1 || u > options.groups) throw usage("--u-grid entries must lie in [1, G]");
            }
            const FittedModel model = cross_validate(d.x, d.y, options);
            write_text(cv_output, serialize_model(model), out);

            std::string report_path = cv_report_path;
            if (report_path.empty() && cv_output != "-") {
                const auto dot = cv_output.rfind(".json");
                report_path = (dot == std::string::npos ? cv_output : cv_output.substr(0, dot)) + ".cv.csv";
            }
            if (report_path.empty()) {
                err << "note: CV report not written (pass --cv-output)\n";
            } else {
                std::ostringstream csv;
                write_cv_csv(csv, *model.cv);
                write_text(report_path, csv.str(), out);
            }
            err << "selected t = " << model.cv->selected.first << ", u = " << model.cv->selected.second << "\n";
            if (model.ensemble.iteration_cap_hit) {
                err << "warning: gradient iterations hit their cap\n";
                if (cv_flags.strict) return kSolverWarning;
            }
            return kOk;
        }

        if (*pred) {
            const FittedModel model = parse_model(read_text(pred_model));
            const CsvTable table = read_csv_file(pred_data);
            MatrixXd x = table.values;
            if (x.cols() == model.p() + 1) {
                err << "note: dropping the first column (treated as the response)\n";
                x = MatrixXd(x.rightCols(model.p()));
            }
            if (x.cols() != model.p()) {
                throw Error(ErrorKind::DimensionMismatch, "feature CSV has " + std::to_string(x.cols()) +
                                                              " columns, model expects " + std::to_string(model.p()));
            }
            std::ostringstream csv;
            if (per_model) {
                std::vector<std::string> header;
                for (int g = 1; g <= model.ensemble.groups(); ++g) header.push_back("model_" + std::to_string(g));
                write_csv(csv, header, predict_per_model(model, x));
            } else {
                write_csv(csv, {"prediction"}, predict(model, x));
            }
            write_text(pred_output, csv.str(), out);
            return kOk;
        }

        if (*sim) {
            StudyConfig study;
            study.base = sim_cfg;
            validate(study.base);
            if (sim_reps < 1) throw usage("--replications must be positive");
            if (sim_threads < 1) throw usage("--threads must be positive");
            study.replications = sim_reps;
            study.groups.clear();
            if (sim_range > 0) {
                if (sim_range < 2) throw usage("--group-range must be at least 2");
                for (int g = 2; g <= sim_range; ++g) study.groups.push_back(g);
            } else {
                for (const auto& g : split_commas(sim_groups)) study.groups.push_back(parse_int(g, "--model-groups"));
            }
            for (int g : study.groups) {
                if (g < 2) throw usage("model counts must be at least 2");
            }
            study.t_grid = resolve_count_list(sim_t, static_cast<long>(sim_cfg.n));
            if (!sim_u.empty()) study.u_grid = resolve_count_list(sim_u, static_cast<long>(sim_cfg.n));
            study.folds = sim_folds;
            study.mode = sim_mode == "fixed" ? TuningMode::Fixed : TuningMode::CrossValidated;
            study.solver.gamma = sim_flags.gamma;
            study.solver.epsilon = sim_flags.epsilon;
            check_solver(study.solver, 2);
            study.threads = sim_threads;
            study.fixed_coefficients = sim_fixed_coef;
            const long n_train = study.mode == TuningMode::Fixed
                                     ? static_cast<long>(sim_cfg.n)
                                     : static_cast<long>(sim_cfg.n) - (static_cast<long>(sim_cfg.n) + sim_folds - 1) / sim_folds;
            if (study.mode == TuningMode::CrossValidated && (sim_folds < 2 || sim_folds > sim_cfg.n)) {
                throw usage("--folds must lie in [2, n]");
            }
            for (int t : study.t_grid) check_t(t, n_train, sim_cfg.p);

            const auto rows = run_study(study);
            std::ostringstream csv;
            write_study_csv(csv, study, rows);
            write_text(sim_output, csv.str(), out);
            return kOk;
        }

        if (*count) {
            if (count_splits_flag) {
                if (count_groups < 1 || count_p < count_groups) throw usage("need p >= groups >= 1");
                out << count_splits(count_p, count_groups, count_t,
                                    allow_empty ? SplitConvention::AllowEmptyGroups
                                                : SplitConvention::NonEmptyGroups)
                    << "\n";
            } else {
                if (count_t > count_p) throw usage("need t <= p");
                out << count_subsets(count_p, count_t) << "\n";
            }
            return kOk;
        }

        if (*oracle) {
            const Dataset d = load_training(oracle_data);
            if (oracle_groups < 1) throw usage("--groups must be positive");
            check_t(oracle_t, d.x.rows(), d.x.cols());
            Constraints c;
            c.groups = oracle_groups;
            c.t = oracle_t;
            c.u = resolve_u(oracle_u, d.x.cols(), oracle_groups);
            const StandardizedDataset data = standardize(d.x, d.y);
            const SplitEnsemble best = exhaustive_bsps(data, c);
            out << "objective " << format_double(best.objective) << "\n";
            for (int g = 0; g < best.groups(); ++g) {
                out << "model " << (g + 1) << ":";
                for (Index j : best.supports[static_cast<std::size_t>(g)]) {
                    out << ' ' << d.names[static_cast<std::size_t>(j)];
                }
                out << "\n";
            }
            return kOk;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case ErrorKind::DataError:
            case ErrorKind::DimensionMismatch:
            case ErrorKind::ConstantColumn:
            case ErrorKind::ConstantResponse:
                return kData;
            case ErrorKind::NoConvergence:
            case ErrorKind::AllCandidatesDegenerate:
            case ErrorKind::NotPositiveDefinite:
                return kSolverWarning;
            default:
                return kUsage;
        }
    }
    return kUsage;
}

}  // namespace bsps::cli
