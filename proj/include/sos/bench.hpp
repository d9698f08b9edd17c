#pragma once

#include "sos/classify.hpp"
#include "sos/datagen.hpp"
#include "sos/ennet.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sos {

/// Generate -> cross-validate -> refit at the chosen lambda -> evaluate on the
/// test split. Theta starts from a seeded random draw.
struct PipelineRun
{
    Metrics metrics;
    double lambda = 0.0;
    bool no_admissible = false;
};

PipelineRun run_synthetic_pipeline(const SynthSpec& spec, SolverId solver, int folds, double sparsity_cap,
                                   int threads = 0);

struct BenchTable
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void write_csv(std::ostream& os) const;
};

struct SyntheticSuiteOptions
{
    SynthKind kind = SynthKind::Type1;
    Eigen::Index p = 500;
    std::vector<Eigen::Index> Ks{2, 4};
    std::vector<double> rs{0.0, 0.1, 0.5, 0.9};
    std::vector<SolverId> solvers{SolverId::Ista, SolverId::Fista, SolverId::Admm};
    int reps = 20;
    int folds = 5;
    double sparsity_cap = 0.3;
    std::uint64_t seed = 1;
    int threads = 0;
};

/// Rows {dataset, measure, solver, mean, sd} over reps.
BenchTable synthetic_suite(const SyntheticSuiteOptions& opts);

struct ScalingPOptions
{
    Eigen::Index n = 50;
    std::vector<Eigen::Index> ps{1000, 2000, 4000, 8000};
    int reps = 5;
    int iterations = 50;
    std::uint64_t seed = 1;
};

struct ScalingPoint
{
    Eigen::Index x = 0;
    std::string solver;
    double median_seconds = 0.0;
    std::vector<double> samples;
};

/// Median per-iteration wall time of each solver under a diagonal penalty, plus
/// the ADMM x-update on its own ("sdad-xupdate").
std::vector<ScalingPoint> scaling_p(const ScalingPOptions& opts);

struct ScalingRankOptions
{
    std::vector<Eigen::Index> ranks{5, 50, 200, 400};
    int reps = 3;
    Eigen::Index n_per_class = 100;
    double gamma = 0.1;
    double lambda = 1e-3;
    std::uint64_t seed = 1;
};

/// Five pixels (center, above, right, bottom, left) by 128 channels.
std::vector<Point3> pixel_channel_positions(int channels = 128);

/// Median total fit time with a rank-r truncated Matern penalty, per rank.
std::vector<ScalingPoint> scaling_rank(const ScalingRankOptions& opts);

BenchTable scaling_table(const std::vector<ScalingPoint>& pts, const std::string& x_name,
                         const std::string& value_name);

/// Minimal SVG line chart, one series per solver.
std::string scaling_svg(const std::vector<ScalingPoint>& pts, const std::string& x_label,
                        const std::string& y_label);

double median(std::vector<double> v);

} // namespace sos
