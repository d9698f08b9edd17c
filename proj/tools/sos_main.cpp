#include "sos/bench.hpp"
#include "sos/classify.hpp"
#include "sos/datagen.hpp"
#include "sos/io.hpp"
#include "sos/penalty.hpp"
#include "sos/sos.hpp"
#include "sos/tuning.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace sos;
using nlohmann::json;

namespace {

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Data: return 3;
    case ErrorKind::Solver: return 4;
    }
    return 1;
}

const char* kind_name(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Usage: return "usage";
    case ErrorKind::Data: return "data";
    case ErrorKind::Solver: return "solver";
    }
    return "unknown";
}

// One line: "error kind=<kind> code=<code>: <message>".
int report(ErrorKind kind, const std::string& code, std::string message)
{
    for (char& c : message) {
        if (c == '\n') c = ' ';
    }
    std::cerr << "error kind=" << kind_name(kind) << " code=" << code << ": " << message << '\n';
    return exit_code(kind);
}

std::ofstream open_out(const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw DataError("unwritable_file", "cannot write '" + path + "'");
    return out;
}

double parse_number(const std::string& s, const std::string& what)
{
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("invalid_" + what, "cannot parse " + what + " '" + s + "'");
}

struct FitFlags
{
    std::string data;
    std::string label_col = "class";
    std::string lambda = "auto";
    double gamma = 1e-3;
    std::string omega = "identity";
    int rank = 0;
    std::string positions;
    std::string solver = "sdaap";
    int q = 0;
    double inner_tol = 1e-5;
    int inner_max = 1000;
    double outer_tol = 1e-3;
    int outer_max = 250;
    double mu = 2.5;
    std::string theta_init = "fixed";
    std::uint64_t seed = 0;
    bool scale = false;

    void add_to(CLI::App* app, bool with_lambda)
    {
        app->add_option("--data", data, "training CSV")->required();
        app->add_option("--label-col", label_col, "label column name");
        if (with_lambda) app->add_option("--lambda", lambda, "l1 weight, or 'auto'");
        app->add_option("--gamma", gamma, "Tikhonov weight");
        app->add_option("--omega", omega, "identity | diag:PATH | lowrank:PATH | dense:PATH | matern:s2,rho,nu");
        app->add_option("--rank", rank, "truncate a dense or Matern penalty to this rank");
        app->add_option("--positions", positions, "x,y,z positions CSV for the Matern penalty");
        app->add_option("--solver", solver, "sdap | sdapbt | sdaap | sdaapbt | sdad");
        app->add_option("--q", q, "number of discriminant directions (default K-1)");
        app->add_option("--inner-tol", inner_tol);
        app->add_option("--inner-max", inner_max);
        app->add_option("--outer-tol", outer_tol);
        app->add_option("--outer-max", outer_max);
        app->add_option("--mu", mu, "ADMM augmented Lagrangian weight");
        app->add_option("--theta-init", theta_init, "fixed | random");
        app->add_option("--seed", seed);
        app->add_flag("--scale", scale, "scale columns to unit variance");
    }

    Penalty<double> build_omega(Eigen::Index p) const
    {
        const auto colon = omega.find(':');
        const std::string kind = omega.substr(0, colon);
        const std::string arg = colon == std::string::npos ? "" : omega.substr(colon + 1);
        if (kind != "identity" && arg.empty()) throw UsageError("invalid_omega", "--omega " + kind + " needs an argument");
        Penalty<double> pen = Penalty<double>::identity();
        if (kind == "identity") {
            if (colon != std::string::npos) throw UsageError("invalid_omega", "identity takes no argument");
        } else if (kind == "diag") {
            const MatrixXd u = read_numeric_matrix(arg);
            pen = Penalty<double>::diagonal(u.reshaped());
        } else if (kind == "lowrank") {
            pen = Penalty<double>::low_rank(read_numeric_matrix(arg));
        } else if (kind == "dense") {
            pen = Penalty<double>::dense(read_numeric_matrix(arg));
        } else if (kind == "matern") {
            std::vector<double> v;
            std::stringstream ss(arg);
            for (std::string item; std::getline(ss, item, ',');) v.push_back(parse_number(item, "omega"));
            if (v.size() != 3) throw UsageError("invalid_omega", "matern needs sigma2,rho,nu");
            MaternParams<double> prm;
            prm.sigma2 = v[0];
            prm.rho = v[1];
            prm.nu = v[2];
            const auto pts = positions.empty() ? channel_positions(p) : read_positions(positions);
            pen = build_matern_omega(pts, prm);
        } else {
            throw UsageError("invalid_omega", "unknown penalty '" + omega + "'");
        }
        if (rank > 0) {
            if (!pen.is_dense()) throw UsageError("invalid_rank", "--rank applies to dense or matern penalties");
            pen = low_rank_truncate(pen, rank);
        }
        pen.check_dim(p);
        return pen;
    }

    SosFitConfig<double> config(Eigen::Index p) const
    {
        SosFitConfig<double> cfg;
        if (q > 0) cfg.q = q;
        cfg.gamma = gamma;
        cfg.omega = build_omega(p);
        cfg.omega_label = omega + (rank > 0 ? ";rank=" + std::to_string(rank) : "");
        cfg.solver = parse_solver(solver);
        cfg.inner.tol = inner_tol;
        cfg.inner.max_iter = inner_max;
        cfg.inner.mu = mu;
        cfg.outer_tol = outer_tol;
        cfg.max_outer = outer_max;
        if (theta_init == "fixed") {
            cfg.theta_init = ThetaInit::FixedProjection;
        } else if (theta_init == "random") {
            cfg.theta_init = ThetaInit::Random;
        } else {
            throw UsageError("invalid_theta_init", "--theta-init must be fixed or random");
        }
        cfg.seed = seed;
        cfg.scale = scale;
        return cfg;
    }
};

json direction_json(const SosModel<double>& model)
{
    json dirs = json::array();
    for (const auto& d : model.directions) {
        dirs.push_back({{"outer_iterations", d.outer_iterations},
                        {"inner_iterations", d.inner_iterations},
                        {"converged", d.converged},
                        {"final_objective", d.final_objective},
                        {"feats", count_features<double>(d.beta)}});
    }
    return dirs;
}

json fit_summary(const SosModel<double>& model, const Dataset<double>& ds)
{
    const auto pred = predict(model, ds.features);
    const auto m = evaluate(pred.labels, ds.labels, model.B, model.fit_seconds);
    return {{"lambda", model.config.lambda},
            {"gamma", model.config.gamma},
            {"solver", solver_name(model.config.solver)},
            {"q", model.q()},
            {"directions", direction_json(model)},
            {"time", m.time},
            {"feats", m.feats},
            {"fracFeats", m.fracFeats},
            {"train_numErr", m.numErr},
            {"train_fracErr", m.fracErr}};
}

int cmd_fit(const FitFlags& f, const std::string& model_path)
{
    const auto ds = read_dataset(f.data, f.label_col);
    auto cfg = f.config(ds.p());
    json out;
    if (f.lambda == "auto") {
        cfg.lambda = dataset_lambda_bar(ds, cfg);
        out["lambda_source"] = "auto";
    } else {
        cfg.lambda = parse_number(f.lambda, "lambda");
        out["lambda_source"] = "given";
    }
    const auto model = fit_sos(ds, cfg);
    if (!model_path.empty()) save_model(model_path, model);
    out.update(fit_summary(model, ds));
    if (!model_path.empty()) out["model"] = model_path;
    std::cout << out.dump() << '\n';
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data, const std::string& label_col,
                const std::string& out_path)
{
    const auto model = load_model(model_path);
    const auto table = read_csv_file(data, label_col.empty() ? std::nullopt : std::optional<std::string>(label_col));
    const auto pred = predict(model, table.values);

    std::ofstream file;
    if (!out_path.empty()) file = open_out(out_path);
    std::ostream& os = out_path.empty() ? std::cout : file;
    os << "row_index,predicted_label";
    for (const auto& l : model.label_vocab) os << ",dist_" << l;
    os << '\n';
    for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
        os << i << ',' << pred.labels[i];
        for (Eigen::Index k = 0; k < model.K(); ++k) os << ',' << format_double(pred.distances(i, k));
        os << '\n';
    }
    if (table.labels) {
        const auto m = evaluate(pred.labels, *table.labels, model.B, model.fit_seconds);
        (out_path.empty() ? std::cerr : std::cout) << metrics_to_json(m) << '\n';
    }
    return 0;
}

int cmd_cv(const FitFlags& f, int folds, double cap, const std::string& grid, const std::string& out_path,
           std::string json_path, const std::string& refit, int threads)
{
    const auto ds = read_dataset(f.data, f.label_col);
    CvSpec spec;
    spec.folds = folds;
    spec.sparsity_cap = cap;
    spec.seed = f.seed;
    spec.base = f.config(ds.p());
    spec.threads = threads;
    if (!grid.empty() && grid != "auto") {
        std::stringstream ss(grid);
        for (std::string item; std::getline(ss, item, ',');) spec.grid.push_back(parse_number(item, "lambda"));
    }
    const auto result = cross_validate(ds, spec);

    if (!out_path.empty()) {
        auto os = open_out(out_path);
        result.write_csv(os);
        if (json_path.empty()) json_path = std::filesystem::path(out_path).replace_extension(".json").string();
    }
    if (!json_path.empty()) open_out(json_path) << result.to_json() << '\n';
    if (out_path.empty()) result.write_csv(std::cout);

    json summary = {{"chosen_lambda", result.chosen_lambda},
                    {"no_admissible", result.no_admissible},
                    {"lambda_bar", result.lambda_bar ? json(*result.lambda_bar) : json(nullptr)},
                    {"grid_size", result.records.size()}};
    if (!refit.empty()) {
        auto cfg = spec.base;
        cfg.lambda = result.chosen_lambda;
        const auto model = fit_sos(ds, cfg);
        save_model(refit, model);
        summary["refit"] = fit_summary(model, ds);
        summary["model"] = refit;
    }
    (out_path.empty() ? std::cerr : std::cout) << summary.dump() << '\n';
    return 0;
}

int cmd_synth(SynthSpec spec, int type, const std::string& dir)
{
    if (type != 1 && type != 2) throw UsageError("invalid_type", "--type must be 1 or 2");
    spec.kind = type == 1 ? SynthKind::Type1 : SynthKind::Type2;
    const auto data = sample(spec);
    std::filesystem::create_directories(dir);
    write_dataset_file((std::filesystem::path(dir) / "train.csv").string(), data.train);
    write_dataset_file((std::filesystem::path(dir) / "test.csv").string(), data.test);
    json out = {{"train", (std::filesystem::path(dir) / "train.csv").string()},
                {"test", (std::filesystem::path(dir) / "test.csv").string()},
                {"n_train", data.train.n()},
                {"n_test", data.test.n()},
                {"p", spec.p}};
    std::cout << out.dump() << '\n';
    return 0;
}

template <class T>
std::vector<T> parse_list(const std::string& s, const std::string& what)
{
    std::vector<T> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) out.push_back(static_cast<T>(parse_number(item, what)));
    if (out.empty()) throw UsageError("invalid_" + what, "empty " + what + " list");
    return out;
}

struct BenchFlags
{
    std::string suite;
    int reps = 0;
    std::string out;
    std::string plot;
    std::uint64_t seed = 1;
    int threads = 0;
    int p = 500;
    std::string ks = "2,4";
    std::string rs = "0,0.1,0.5,0.9";
    std::string ps = "1000,2000,4000,8000";
    std::string ranks = "5,50,200,400";
    std::string solvers = "sdap,sdaap,sdad";
    int folds = 5;
    double cap = 0.3;
};

int cmd_bench(const BenchFlags& b)
{
    BenchTable table;
    std::vector<ScalingPoint> pts;
    std::string x_label;
    if (b.suite == "type1" || b.suite == "type2") {
        SyntheticSuiteOptions o;
        o.kind = b.suite == "type1" ? SynthKind::Type1 : SynthKind::Type2;
        o.p = b.p;
        o.Ks = parse_list<Eigen::Index>(b.ks, "k");
        o.rs = parse_list<double>(b.rs, "r");
        o.solvers.clear();
        std::stringstream ss(b.solvers);
        for (std::string s; std::getline(ss, s, ',');) o.solvers.push_back(parse_solver(s));
        if (b.reps > 0) o.reps = b.reps;
        o.folds = b.folds;
        o.sparsity_cap = b.cap;
        o.seed = b.seed;
        o.threads = b.threads;
        table = synthetic_suite(o);
    } else if (b.suite == "scaling-p") {
        ScalingPOptions o;
        o.ps = parse_list<Eigen::Index>(b.ps, "p");
        if (b.reps > 0) o.reps = b.reps;
        o.seed = b.seed;
        pts = scaling_p(o);
        table = scaling_table(pts, "p", "seconds_per_iteration");
        x_label = "p";
    } else if (b.suite == "scaling-rank") {
        ScalingRankOptions o;
        o.ranks = parse_list<Eigen::Index>(b.ranks, "rank");
        if (b.reps > 0) o.reps = b.reps;
        o.seed = b.seed;
        pts = scaling_rank(o);
        table = scaling_table(pts, "rank", "total_seconds");
        x_label = "rank r";
    } else {
        throw UsageError("invalid_suite", "unknown suite '" + b.suite + "'");
    }

    if (b.out.empty()) {
        table.write_csv(std::cout);
    } else {
        auto os = open_out(b.out);
        table.write_csv(os);
    }
    if (!b.plot.empty()) {
        if (pts.empty()) throw UsageError("invalid_plot", "--plot is available for the scaling suites");
        open_out(b.plot) << scaling_svg(pts, x_label, "seconds");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sparse discriminant analysis by optimal scoring"};
    app.require_subcommand(1);

    FitFlags fit_flags;
    std::string model_path;
    auto* fit = app.add_subcommand("fit", "fit a model");
    fit_flags.add_to(fit, true);
    fit->add_option("--model", model_path, "output model JSON");

    std::string pred_model, pred_data, pred_label, pred_out;
    auto* pred = app.add_subcommand("predict", "classify rows with a saved model");
    pred->add_option("--model", pred_model)->required();
    pred->add_option("--data", pred_data)->required();
    pred->add_option("--label-col", pred_label, "optional label column to ignore and score against");
    pred->add_option("--out", pred_out, "predictions CSV (stdout when omitted)");

    FitFlags cv_flags;
    int folds = 5, threads = 0;
    double cap = 0.15;
    std::string cv_out, cv_json, refit, grid = "auto";
    auto* cv = app.add_subcommand("cv", "cross-validate lambda");
    cv_flags.add_to(cv, false);
    cv->add_option("--lambda", grid, "'auto' or a comma-separated grid");
    cv->add_option("--folds", folds);
    cv->add_option("--sparsity-cap", cap);
    cv->add_option("--out", cv_out, "per-lambda CSV");
    cv->add_option("--json", cv_json, "full result JSON (default: --out with .json)");
    cv->add_option("--refit", refit, "write a model refitted at the chosen lambda");
    cv->add_option("--threads", threads);

    SynthSpec synth_spec;
    int synth_type = 1;
    std::string synth_dir;
    auto* synth = app.add_subcommand("synth", "generate synthetic Gaussian data");
    synth->add_option("--type", synth_type);
    synth->add_option("--p", synth_spec.p);
    synth->add_option("--k", synth_spec.K);
    synth->add_option("--r", synth_spec.r);
    synth->add_option("--n-train", synth_spec.n_train_per_class);
    synth->add_option("--n-test", synth_spec.n_test_per_class);
    synth->add_option("--block", synth_spec.block);
    synth->add_option("--seed", synth_spec.seed);
    synth->add_option("--out", synth_dir)->required();

    BenchFlags bench_flags;
    auto* bench = app.add_subcommand("bench", "benchmark and scaling suites");
    bench->add_option("--suite", bench_flags.suite, "type1 | type2 | scaling-p | scaling-rank")->required();
    bench->add_option("--reps", bench_flags.reps);
    bench->add_option("--out", bench_flags.out);
    bench->add_option("--plot", bench_flags.plot, "SVG chart (scaling suites)");
    bench->add_option("--seed", bench_flags.seed);
    bench->add_option("--threads", bench_flags.threads);
    bench->add_option("--p", bench_flags.p, "feature count (type suites)");
    bench->add_option("--ks", bench_flags.ks);
    bench->add_option("--rs", bench_flags.rs);
    bench->add_option("--ps", bench_flags.ps);
    bench->add_option("--ranks", bench_flags.ranks);
    bench->add_option("--solvers", bench_flags.solvers);
    bench->add_option("--folds", bench_flags.folds);
    bench->add_option("--sparsity-cap", bench_flags.cap);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report(ErrorKind::Usage, "bad_flags", e.what());
    }

    try {
        if (*fit) return cmd_fit(fit_flags, model_path);
        if (*pred) return cmd_predict(pred_model, pred_data, pred_label, pred_out);
        if (*cv) return cmd_cv(cv_flags, folds, cap, grid, cv_out, cv_json, refit, threads);
        if (*synth) return cmd_synth(synth_spec, synth_type, synth_dir);
        if (*bench) return cmd_bench(bench_flags);
    } catch (const Error& e) {
        return report(e.kind(), e.code(), e.what());
    } catch (const std::exception& e) {
        return report(ErrorKind::Data, "io_error", e.what());
    }
    return 0;
}
