#include "sos/bench.hpp"

#include "sos/io.hpp"
#include "sos/penalty.hpp"
#include "sos/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

namespace sos {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int prec = 6)
{
    std::ostringstream os;
    os.precision(prec);
    os << v;
    return os.str();
}

std::string csv_cell(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

} // namespace

double median(std::vector<double> v)
{
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void BenchTable::write_csv(std::ostream& os) const
{
    for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << csv_cell(header[j]);
    os << '\n';
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << csv_cell(row[j]);
        os << '\n';
    }
}

PipelineRun run_synthetic_pipeline(const SynthSpec& spec, SolverId solver, int folds, double sparsity_cap,
                                   int threads)
{
    const auto data = sample(spec);
    CvSpec cv;
    cv.folds = folds;
    cv.sparsity_cap = sparsity_cap;
    cv.seed = spec.seed;
    cv.threads = threads;
    cv.base.solver = solver;
    cv.base.theta_init = ThetaInit::Random;
    cv.base.seed = spec.seed;

    const auto t0 = Clock::now();
    const auto result = cross_validate(data.train, cv);
    SosFitConfig<double> cfg = cv.base;
    cfg.lambda = result.chosen_lambda;
    PipelineRun run;
    run.lambda = result.chosen_lambda;
    run.no_admissible = result.no_admissible;
    try {
        const auto model = fit_sos(data.train, cfg);
        const auto pred = predict(model, data.test.features);
        run.metrics = evaluate(pred.labels, data.test.labels, model.B, seconds_since(t0));
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Solver || e.code() != "trivial_direction") throw;
        // Chosen lambda still trivial on the full set: every test point counts as an error.
        run.metrics.numErr = static_cast<long>(data.test.n());
        run.metrics.fracErr = 1.0;
        run.metrics.time = seconds_since(t0);
    }
    return run;
}

BenchTable synthetic_suite(const SyntheticSuiteOptions& opts)
{
    BenchTable table;
    table.header = {"dataset", "measure", "solver", "mean", "sd"};
    const char* kind = opts.kind == SynthKind::Type1 ? "type1" : "type2";
    for (Eigen::Index K : opts.Ks) {
        for (double r : opts.rs) {
            std::ostringstream name;
            name << kind << " p=" << opts.p << " K=" << K << " r=" << r;
            for (SolverId solver : opts.solvers) {
                std::map<std::string, std::vector<double>> values;
                for (int rep = 0; rep < opts.reps; ++rep) {
                    SynthSpec spec;
                    spec.kind = opts.kind;
                    spec.p = opts.p;
                    spec.K = K;
                    spec.r = r;
                    spec.seed = opts.seed + static_cast<std::uint64_t>(rep);
                    const auto run = run_synthetic_pipeline(spec, solver, opts.folds, opts.sparsity_cap, opts.threads);
                    values["numErr"].push_back(double(run.metrics.numErr));
                    values["fracErr"].push_back(run.metrics.fracErr);
                    values["feats"].push_back(double(run.metrics.feats));
                    values["fracFeats"].push_back(run.metrics.fracFeats);
                    values["time"].push_back(run.metrics.time);
                }
                for (const char* measure : {"numErr", "fracErr", "feats", "fracFeats", "time"}) {
                    const auto& v = values[measure];
                    double mean = 0.0;
                    for (double x : v) mean += x;
                    mean /= double(v.size());
                    double ss = 0.0;
                    for (double x : v) ss += (x - mean) * (x - mean);
                    const double sd = v.size() > 1 ? std::sqrt(ss / double(v.size() - 1)) : 0.0;
                    table.rows.push_back({name.str(), measure, solver_name(solver), fmt(mean), fmt(sd)});
                }
            }
        }
    }
    return table;
}

std::vector<ScalingPoint> scaling_p(const ScalingPOptions& opts)
{
    std::vector<ScalingPoint> out;
    const std::vector<SolverId> solvers{SolverId::Ista, SolverId::IstaBt, SolverId::Fista, SolverId::FistaBt,
                                        SolverId::Admm};
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    for (Eigen::Index p : opts.ps) {
        std::map<std::string, std::vector<double>> samples;
        for (int rep = 0; rep < opts.reps; ++rep) {
            MatrixXd X(opts.n, p);
            for (Eigen::Index j = 0; j < p; ++j) {
                for (Eigen::Index i = 0; i < opts.n; ++i) X(i, j) = normal(rng);
            }
            VectorXd u(p), y(opts.n);
            for (Eigen::Index j = 0; j < p; ++j) u(j) = unif(rng);
            for (Eigen::Index i = 0; i < opts.n; ++i) y(i) = normal(rng);
            const auto omega = Penalty<double>::diagonal(u);
            const VectorXd d = -2.0 * (X.transpose() * y);
            const double lambda = 0.1 * d.lpNorm<Eigen::Infinity>();
            const Subproblem<double> sub(X, d, 1e-3, lambda, omega);

            SolverOptions<double> so;
            so.max_iter = opts.iterations;
            so.tol = 0.0;
            so.record_trace = false;
            for (SolverId id : solvers) {
                const auto t0 = Clock::now();
                const auto res = solve(id, sub, so);
                samples[solver_name(id)].push_back(seconds_since(t0) / std::max(1, res.iterations));
            }
            const AdmmXSolver<double> xs(X, sub.gamma(), omega, so.mu);
            VectorXd b = VectorXd::NullaryExpr(p, [&] { return normal(rng); });
            volatile double sink = 0.0;
            const auto t0 = Clock::now();
            VectorXd x(p);
            for (int it = 0; it < opts.iterations; ++it) {
                xs.solve_into(b, x);
                sink = sink + x(0);
                b(it % p) += 1e-3;
            }
            samples["sdad-xupdate"].push_back(seconds_since(t0) / opts.iterations);
        }
        for (auto& [name, v] : samples) out.push_back({p, name, median(v), v});
    }
    return out;
}

std::vector<Point3> pixel_channel_positions(int channels)
{
    const double offsets[5][2] = {{0, 0}, {0, 1}, {1, 0}, {0, -1}, {-1, 0}};
    std::vector<Point3> pts;
    for (const auto& o : offsets) {
        for (int k = 1; k <= channels; ++k) pts.push_back({o[0], o[1], double(k)});
    }
    return pts;
}

std::vector<ScalingPoint> scaling_rank(const ScalingRankOptions& opts)
{
    const auto positions = pixel_channel_positions();
    const auto p = static_cast<Eigen::Index>(positions.size());
    MaternParams<double> prm;
    prm.nu = 0.5;
    const auto dense = build_matern_omega(positions, prm);

    SynthSpec spec;
    spec.p = p;
    spec.K = 3;
    spec.r = 0.5;
    spec.n_train_per_class = opts.n_per_class;
    spec.n_test_per_class = 1;
    spec.seed = opts.seed;
    const auto data = sample_type1(spec);

    std::vector<ScalingPoint> out;
    for (Eigen::Index r : opts.ranks) {
        SosFitConfig<double> cfg;
        cfg.gamma = opts.gamma;
        cfg.lambda = opts.lambda;
        cfg.omega = low_rank_truncate(dense, r);
        cfg.solver = SolverId::Fista;
        std::vector<double> v;
        for (int rep = 0; rep < opts.reps; ++rep) {
            const auto t0 = Clock::now();
            fit_sos(data.train, cfg);
            v.push_back(seconds_since(t0));
        }
        out.push_back({r, solver_name(cfg.solver), median(v), v});
    }
    return out;
}

BenchTable scaling_table(const std::vector<ScalingPoint>& pts, const std::string& x_name,
                         const std::string& value_name)
{
    BenchTable table;
    table.header = {x_name, "solver", value_name, "reps"};
    for (const auto& pt : pts) {
        table.rows.push_back({std::to_string(pt.x), pt.solver, fmt(pt.median_seconds, 8),
                              std::to_string(pt.samples.size())});
    }
    return table;
}

std::string scaling_svg(const std::vector<ScalingPoint>& pts, const std::string& x_label,
                        const std::string& y_label)
{
    const double W = 640, H = 400, left = 80, right = 150, top = 20, bottom = 50;
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    double xmax = 0, ymax = 0;
    for (const auto& pt : pts) {
        series[pt.solver].emplace_back(double(pt.x), pt.median_seconds);
        xmax = std::max(xmax, double(pt.x));
        ymax = std::max(ymax, pt.median_seconds);
    }
    if (xmax <= 0) xmax = 1;
    if (ymax <= 0) ymax = 1;
    auto sx = [&](double x) { return left + x / xmax * (W - left - right); };
    auto sy = [&](double y) { return H - bottom - y / ymax * (H - top - bottom); };
    const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << (left + W - right) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << x_label
       << "</text>\n";
    os << "<text x=\"15\" y=\"" << (top + H - bottom) / 2 << "\" transform=\"rotate(-90 15 " << (top + H - bottom) / 2
       << ")\" text-anchor=\"middle\">" << y_label << "</text>\n";
    os << "<text x=\"" << left - 5 << "\" y=\"" << top + 5 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt(ymax, 3)
       << "</text>\n";
    os << "<text x=\"" << W - right << "\" y=\"" << H - bottom + 15 << "\" text-anchor=\"middle\" font-size=\"10\">"
       << xmax << "</text>\n";
    int c = 0;
    for (const auto& [name, xy] : series) {
        const char* color = colors[c % 6];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" points=\"";
        for (const auto& [x, y] : xy) os << sx(x) << ',' << sy(y) << ' ';
        os << "\"/>\n";
        for (const auto& [x, y] : xy) {
            os << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        }
        os << "<text x=\"" << W - right + 10 << "\" y=\"" << top + 15 * (c + 1) << "\" fill=\"" << color << "\">"
           << name << "</text>\n";
        ++c;
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace sos
