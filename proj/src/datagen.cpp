#include "sos/datagen.hpp"

#include <cmath>
#include <string>

namespace sos {

void SynthSpec::validate() const
{
    if (K < 2) throw UsageError("invalid_k", "K must be at least 2");
    if (block < 1) throw UsageError("invalid_block", "block must be positive");
    if (kind == SynthKind::Type2 && p % block != 0) {
        throw UsageError("not_block_multiple", "p = " + std::to_string(p) + " is not a multiple of " +
                                                   std::to_string(block));
    }
    if (p < block * K) {
        throw UsageError("p_too_small", "p = " + std::to_string(p) + " < " + std::to_string(block) + "*K = " +
                                            std::to_string(block * K));
    }
    if (!(r >= 0.0 && r < 1.0)) throw UsageError("invalid_r", "r must lie in [0, 1)");
    if (n_train_per_class < 1 || n_test_per_class < 1) {
        throw UsageError("invalid_n", "per-class sample sizes must be positive");
    }
}

VectorXd class_mean(const SynthSpec& spec, Eigen::Index i)
{
    if (i < 1 || i > spec.K) throw UsageError("invalid_class", "class index out of range");
    if (spec.p < spec.block * spec.K) throw UsageError("p_too_small", "p < block*K");
    VectorXd mu = VectorXd::Zero(spec.p);
    mu.segment(spec.block * (i - 1), spec.block).setConstant(spec.mean_value);
    return mu;
}

VectorXd equicorrelated_noise(Eigen::Index p, double r, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    const double a = std::sqrt(1.0 - r), b = std::sqrt(r);
    VectorXd x(p);
    for (Eigen::Index j = 0; j < p; ++j) x(j) = a * normal(rng);
    x.array() += b * normal(rng);
    return x;
}

VectorXd ar1_block_noise(Eigen::Index p, Eigen::Index block, double r, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    const double c = std::sqrt(1.0 - r * r);
    VectorXd x(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const double z = normal(rng);
        x(j) = j % block == 0 ? z : r * x(j - 1) + c * z;
    }
    return x;
}

namespace {

template <class Noise>
SynthData draw(const SynthSpec& spec, Noise noise)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::vector<VectorXd> means;
    std::vector<std::string> vocab;
    for (Eigen::Index i = 1; i <= spec.K; ++i) {
        means.push_back(class_mean(spec, i));
        vocab.push_back(std::to_string(i));
    }
    auto block = [&](Eigen::Index per_class) {
        MatrixXd X(per_class * spec.K, spec.p);
        std::vector<std::string> labels;
        for (Eigen::Index i = 0; i < spec.K; ++i) {
            for (Eigen::Index m = 0; m < per_class; ++m) {
                X.row(i * per_class + m) = (means[i] + noise(rng)).transpose();
                labels.push_back(vocab[i]);
            }
        }
        return make_dataset<double>(std::move(X), std::move(labels), vocab);
    };
    // Stream order: every training class, then every test class.
    auto train = block(spec.n_train_per_class);
    auto test = block(spec.n_test_per_class);
    return {std::move(train), std::move(test)};
}

} // namespace

SynthData sample_type1(const SynthSpec& spec)
{
    return draw(spec, [&](std::mt19937_64& rng) { return equicorrelated_noise(spec.p, spec.r, rng); });
}

SynthData sample_type2(const SynthSpec& spec)
{
    return draw(spec, [&](std::mt19937_64& rng) { return ar1_block_noise(spec.p, spec.block, spec.r, rng); });
}

SynthData sample(const SynthSpec& spec)
{
    return spec.kind == SynthKind::Type1 ? sample_type1(spec) : sample_type2(spec);
}

} // namespace sos
