#pragma once

#include "sos/core.hpp"

#include <cstdint>
#include <random>
#include <utility>

namespace sos {

enum class SynthKind { Type1, Type2 };

struct SynthSpec
{
    SynthKind kind = SynthKind::Type1;
    Eigen::Index p = 500;
    Eigen::Index K = 2;
    double r = 0.0;
    Eigen::Index n_train_per_class = 25;
    Eigen::Index n_test_per_class = 250;
    // Width of the mean blocks and, for Type 2, of the AR(1) blocks.
    Eigen::Index block = 100;
    double mean_value = 0.7;
    std::uint64_t seed = 0;

    // Throws UsageError on an invalid design.
    void validate() const;
};

/// Mean of class i (1-based): mean_value on positions block*(i-1)+1 .. block*i.
VectorXd class_mean(const SynthSpec& spec, Eigen::Index i);

// Noise draws with unit variance and the design's correlation, no mean.
// Exposed so moment probes can test the samplers directly.
VectorXd equicorrelated_noise(Eigen::Index p, double r, std::mt19937_64& rng);
VectorXd ar1_block_noise(Eigen::Index p, Eigen::Index block, double r, std::mt19937_64& rng);

struct SynthData
{
    Dataset<double> train;
    Dataset<double> test;
};

SynthData sample_type1(const SynthSpec& spec);
SynthData sample_type2(const SynthSpec& spec);
SynthData sample(const SynthSpec& spec);

} // namespace sos
