#include "sos/tuning.hpp"

#include "sos/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

namespace sos {

std::vector<double> lambda_grid(double lambda_bar)
{
    if (!(lambda_bar > 0.0) || !std::isfinite(lambda_bar)) {
        throw UsageError("invalid_lambda_bar", "lambda_bar must be positive and finite");
    }
    std::vector<double> grid;
    for (int c = 9; c >= -3; --c) grid.push_back(std::ldexp(lambda_bar, -c));
    return grid;
}

std::vector<int> make_folds(Eigen::Index n, int N, const std::vector<Eigen::Index>& class_of, std::uint64_t seed)
{
    if (N < 2) throw UsageError("invalid_folds", "need at least 2 folds");
    if (N > n) throw UsageError("too_many_folds", "folds (" + std::to_string(N) + ") exceed observations (" +
                                                      std::to_string(n) + ")");
    check_dims(static_cast<Eigen::Index>(class_of.size()) == n, "label count does not match n");
    const Eigen::Index K = n ? *std::max_element(class_of.begin(), class_of.end()) + 1 : 0;
    std::vector<std::vector<Eigen::Index>> members(K);
    for (Eigen::Index i = 0; i < n; ++i) members[class_of[i]].push_back(i);

    std::mt19937_64 rng(seed);
    std::vector<int> fold(n, -1);
    int next = 0;
    for (auto& idx : members) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (Eigen::Index i : idx) {
            fold[i] = next;
            next = (next + 1) % N;
        }
    }
    return fold;
}

void CvSpec::validate(Eigen::Index n) const
{
    if (folds < 2) throw UsageError("invalid_folds", "need at least 2 folds");
    if (folds > n) throw UsageError("too_many_folds", "more folds than observations");
    if (!(sparsity_cap > 0.0 && sparsity_cap <= 1.0)) {
        throw UsageError("invalid_sparsity_cap", "sparsity cap must lie in (0, 1]");
    }
    for (double l : grid) {
        if (!(l >= 0.0)) throw UsageError("invalid_lambda", "grid lambdas must be nonnegative");
    }
}

int resolve_threads(int requested)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void choose_lambda(CvResult& result)
{
    const auto& recs = result.records;
    if (recs.empty()) throw UsageError("empty_grid", "no lambda values to choose from");
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < recs.size(); ++i) {
        if (!recs[i].admissible) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& b = recs[*best];
        if (recs[i].mean_errors < b.mean_errors ||
            (recs[i].mean_errors == b.mean_errors && recs[i].lambda > b.lambda)) {
            best = i;
        }
    }
    result.no_admissible = !best;
    if (!best) {
        best = 0;
        for (std::size_t i = 1; i < recs.size(); ++i) {
            const auto& b = recs[*best];
            if (recs[i].mean_fracFeats < b.mean_fracFeats ||
                (recs[i].mean_fracFeats == b.mean_fracFeats && recs[i].lambda > b.lambda)) {
                best = i;
            }
        }
    }
    result.chosen_index = *best;
    result.chosen_lambda = recs[*best].lambda;
}

namespace {

Dataset<double> subset(const Dataset<double>& ds, const std::vector<Eigen::Index>& rows)
{
    MatrixXd X(rows.size(), ds.p());
    std::vector<std::string> labels;
    labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        X.row(i) = ds.features.row(rows[i]);
        labels.push_back(ds.labels[rows[i]]);
    }
    Dataset<double> out;
    out.features = std::move(X);
    out.labels = std::move(labels);
    out.label_vocab = ds.label_vocab;
    return out;
}

FoldRecord run_fold(const Dataset<double>& train, const Dataset<double>& valid, double lambda,
                    const SosFitConfig<double>& base)
{
    FoldRecord rec;
    rec.size = static_cast<long>(valid.n());
    SosFitConfig<double> cfg = base;
    cfg.lambda = lambda;
    try {
        const auto model = fit_sos(train, cfg);
        const auto pred = predict(model, valid.features);
        const auto m = evaluate(pred.labels, valid.labels, model.B);
        rec.numErr = m.numErr;
        rec.fracFeats = m.fracFeats;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::Solver || e.code() != "trivial_direction") throw;
        rec.trivial = true;
        rec.numErr = rec.size;
        rec.fracFeats = 0.0;
    }
    return rec;
}

} // namespace

CvResult cross_validate(const Dataset<double>& ds, const CvSpec& spec)
{
    spec.validate(ds.n());
    const auto Y = build_indicator<double>(ds.labels, ds.label_vocab);
    const auto fold_of = make_folds(ds.n(), spec.folds, Y.class_of, spec.seed);

    CvResult result;
    result.sparsity_cap = spec.sparsity_cap;
    result.folds = spec.folds;
    std::vector<double> grid = spec.grid;
    if (grid.empty()) {
        result.lambda_bar = dataset_lambda_bar(ds, spec.base);
        grid = lambda_grid(*result.lambda_bar);
    }

    std::vector<Dataset<double>> train(spec.folds), valid(spec.folds);
    for (int f = 0; f < spec.folds; ++f) {
        std::vector<Eigen::Index> tr, va;
        for (Eigen::Index i = 0; i < ds.n(); ++i) (fold_of[i] == f ? va : tr).push_back(i);
        train[f] = subset(ds, tr);
        valid[f] = subset(ds, va);
        std::vector<Eigen::Index> counts(ds.K(), 0);
        for (Eigen::Index i : tr) ++counts[Y.class_of[i]];
        for (Eigen::Index k = 0; k < ds.K(); ++k) {
            if (counts[k] == 0) {
                throw DataError("class_missing_from_fold", "class '" + ds.label_vocab[k] +
                                                               "' absent from a training split; use fewer folds");
            }
        }
    }

    const std::size_t tasks = grid.size() * spec.folds;
    std::vector<FoldRecord> out(tasks);
    std::atomic<std::size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t t; (t = cursor.fetch_add(1)) < tasks;) {
            const std::size_t li = t / spec.folds;
            const int f = static_cast<int>(t % spec.folds);
            try {
                out[t] = run_fold(train[f], valid[f], grid[li], spec.base);
                out[t].fold = f;
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                cursor = tasks;
            }
        }
    };
    const int width = std::min<int>(resolve_threads(spec.threads), static_cast<int>(tasks));
    if (width <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < width; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (std::size_t li = 0; li < grid.size(); ++li) {
        LambdaRecord rec;
        rec.lambda = grid[li];
        double err = 0.0, frac = 0.0;
        for (int f = 0; f < spec.folds; ++f) {
            const auto& fr = out[li * spec.folds + f];
            err += double(fr.numErr);
            frac += fr.fracFeats;
            rec.folds.push_back(fr);
        }
        rec.mean_errors = err / spec.folds;
        rec.mean_fracFeats = frac / spec.folds;
        rec.admissible = rec.mean_fracFeats <= spec.sparsity_cap;
        result.records.push_back(std::move(rec));
    }
    choose_lambda(result);
    return result;
}

void CvResult::write_csv(std::ostream& os) const
{
    os << "lambda,mean_errors,mean_fracFeats,admissible,trivial_folds,chosen\n";
    std::ostringstream line;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto trivial = std::count_if(r.folds.begin(), r.folds.end(), [](const FoldRecord& f) { return f.trivial; });
        line.str("");
        line << format_double(r.lambda) << ',' << format_double(r.mean_errors) << ','
             << format_double(r.mean_fracFeats) << ',' << (r.admissible ? 1 : 0) << ','
             << trivial << ',' << (i == chosen_index ? 1 : 0) << '\n';
        os << line.str();
    }
}

std::string CvResult::to_json() const
{
    nlohmann::json j;
    j["chosen_lambda"] = chosen_lambda;
    j["chosen_index"] = chosen_index;
    j["no_admissible"] = no_admissible;
    j["sparsity_cap"] = sparsity_cap;
    j["folds"] = folds;
    j["lambda_bar"] = lambda_bar ? nlohmann::json(*lambda_bar) : nlohmann::json(nullptr);
    j["lambda_bar_theta"] = "initial";
    auto& recs = j["records"] = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json fj = nlohmann::json::array();
        for (const auto& f : r.folds) {
            fj.push_back({{"fold", f.fold}, {"numErr", f.numErr}, {"size", f.size},
                          {"fracFeats", f.fracFeats}, {"trivial", f.trivial}});
        }
        recs.push_back({{"lambda", r.lambda}, {"mean_errors", r.mean_errors}, {"mean_fracFeats", r.mean_fracFeats},
                        {"admissible", r.admissible}, {"folds", fj}});
    }
    return j.dump(2);
}

} // namespace sos
