#pragma once

#include "sos/classify.hpp"
#include "sos/sos.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sos {

/// lambda_bar / 2^c for c = 9, 8, ..., -3 (ascending, 13 values).
std::vector<double> lambda_grid(double lambda_bar);

/// Fold index (0-based) per observation. Each class is shuffled and dealt
/// round-robin, continuing where the previous class stopped.
std::vector<int> make_folds(Eigen::Index n, int N, const std::vector<Eigen::Index>& class_of, std::uint64_t seed);

struct CvSpec
{
    int folds = 5;
    // Empty means the automatic grid around lambda_bar.
    std::vector<double> grid;
    double sparsity_cap = 0.15;
    std::uint64_t seed = 0;
    SosFitConfig<double> base;
    // Parallel width; 0 means the THREADS environment variable or hardware.
    int threads = 0;

    void validate(Eigen::Index n) const;
};

struct FoldRecord
{
    int fold = 0;
    long numErr = 0;
    long size = 0;
    double fracFeats = 0.0;
    bool trivial = false;
};

struct LambdaRecord
{
    double lambda = 0.0;
    double mean_errors = 0.0;
    double mean_fracFeats = 0.0;
    bool admissible = false;
    std::vector<FoldRecord> folds;
};

struct CvResult
{
    std::vector<LambdaRecord> records;
    std::size_t chosen_index = 0;
    double chosen_lambda = 0.0;
    // True when no lambda met the sparsity cap.
    bool no_admissible = false;
    std::optional<double> lambda_bar;
    double sparsity_cap = 0.15;
    int folds = 0;

    void write_csv(std::ostream& os) const;
    std::string to_json() const;
};

/// Chooses among per-lambda records: admissible minimizer of mean error, ties
/// toward the larger lambda; without admissible lambdas the sparsest one.
void choose_lambda(CvResult& result);

CvResult cross_validate(const Dataset<double>& ds, const CvSpec& spec);

int resolve_threads(int requested);

} // namespace sos
