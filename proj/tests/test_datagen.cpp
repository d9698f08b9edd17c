#include "sos/datagen.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sos;

namespace {

// Sample covariance of draws (rows) with known zero mean.
MatrixXd second_moments(const MatrixXd& draws) { return draws.transpose() * draws / double(draws.rows()); }

template <class F>
MatrixXd collect(int m, Eigen::Index p, F draw)
{
    MatrixXd out(m, p);
    for (int i = 0; i < m; ++i) out.row(i) = draw().transpose();
    return out;
}

} // namespace

TEST(ClassMean, Blocks)
{
    SynthSpec spec;
    const VectorXd m1 = class_mean(spec, 1), m2 = class_mean(spec, 2);
    EXPECT_EQ(m1.size(), 500);
    EXPECT_TRUE((m1.head(100).array() == 0.7).all());
    EXPECT_TRUE((m1.tail(400).array() == 0.0).all());
    EXPECT_TRUE((m2.segment(100, 100).array() == 0.7).all());
    EXPECT_EQ(m1.dot(m2), 0.0);
    EXPECT_NEAR(m1.squaredNorm(), 49.0, 1e-12);
    EXPECT_NEAR(m2.squaredNorm(), 49.0, 1e-12);
    EXPECT_THROW(class_mean(spec, 3), UsageError);
}

TEST(SynthSpec, Validation)
{
    SynthSpec spec;
    spec.K = 6;
    EXPECT_THROW(sample_type1(spec), UsageError);
    spec = {};
    spec.r = 1.0;
    EXPECT_THROW(sample_type1(spec), UsageError);
    spec = {};
    spec.kind = SynthKind::Type2;
    spec.p = 250;
    try {
        sample(spec);
        FAIL();
    } catch (const UsageError& e) {
        EXPECT_EQ(e.code(), "not_block_multiple");
    }
}

TEST(SampleType1, ShapesAndDeterminism)
{
    SynthSpec spec;
    spec.K = 3;
    spec.p = 300;
    spec.r = 0.5;
    spec.seed = 9;
    const auto a = sample_type1(spec), b = sample_type1(spec);
    EXPECT_EQ(a.train.n(), 75);
    EXPECT_EQ(a.test.n(), 750);
    EXPECT_EQ(a.train.features, b.train.features);
    EXPECT_EQ(a.test.features, b.test.features);
    EXPECT_EQ(a.train.labels, b.train.labels);
    spec.seed = 10;
    EXPECT_NE(sample_type1(spec).train.features, a.train.features);
}

TEST(SampleType1, StreamOrderTrainThenTest)
{
    SynthSpec spec;
    spec.p = 200;
    spec.r = 0.3;
    spec.n_train_per_class = 2;
    spec.n_test_per_class = 1;
    spec.seed = 4;
    const auto data = sample_type1(spec);
    std::mt19937_64 rng(4);
    for (Eigen::Index i = 0; i < 2; ++i) {
        for (int m = 0; m < 2; ++m) {
            const VectorXd x = class_mean(spec, i + 1) + equicorrelated_noise(200, 0.3, rng);
            EXPECT_EQ(data.train.features.row(2 * i + m), x.transpose());
        }
    }
    for (Eigen::Index i = 0; i < 2; ++i) {
        const VectorXd x = class_mean(spec, i + 1) + equicorrelated_noise(200, 0.3, rng);
        EXPECT_EQ(data.test.features.row(i), x.transpose());
    }
}

TEST(Samplers, Type1Moments)
{
    std::mt19937_64 rng(1);
    const MatrixXd i0 = collect(100000, 10, [&] { return equicorrelated_noise(10, 0.0, rng); });
    const MatrixXd S0 = second_moments(i0);
    EXPECT_LT((S0.diagonal().array() - 1.0).abs().maxCoeff(), 0.05);

    const MatrixXd i9 = collect(100000, 10, [&] { return equicorrelated_noise(10, 0.9, rng); });
    const MatrixXd S9 = second_moments(i9);
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) EXPECT_NEAR(S9(i, j), i == j ? 1.0 : 0.9, 0.02);
    }
}

TEST(Samplers, Type2Moments)
{
    std::mt19937_64 rng(2);
    for (double r : {0.0, 0.5, 0.9}) {
        const MatrixXd draws = collect(100000, 20, [&] { return ar1_block_noise(20, 10, r, rng); });
        const MatrixXd S = second_moments(draws);
        for (int i = 0; i < 20; ++i) {
            for (int j = 0; j < 20; ++j) {
                const double expect = i / 10 == j / 10 ? std::pow(r, std::abs(i - j)) : 0.0;
                EXPECT_NEAR(S(i, j), expect, 0.02) << r << " " << i << " " << j;
            }
        }
    }
}

TEST(Samplers, Type2AtZeroCorrelationIsWhite)
{
    std::mt19937_64 rng(3);
    const MatrixXd draws = collect(50000, 10, [&] { return ar1_block_noise(10, 5, 0.0, rng); });
    EXPECT_LT((second_moments(draws) - MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 0.03);
}
