#include "sos/core.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sos;

TEST(CenterData, TwoPointSymmetry)
{
    MatrixXd raw(2, 2);
    raw << 1, 4, 3, 6;
    const auto c = center_data(raw);
    MatrixXd expect(2, 2);
    expect << -1, -1, 1, 1;
    EXPECT_EQ(c.X, expect);
    EXPECT_EQ(c.column_means, Eigen::Vector2d(2, 5));
    EXPECT_FALSE(c.column_scales);
}

TEST(CenterData, AlreadyCentered)
{
    MatrixXd raw(3, 2);
    raw << -1, 2, 0, -4, 1, 2;
    const auto c = center_data(raw);
    EXPECT_EQ(c.X, raw);
    EXPECT_EQ(c.column_means, Eigen::Vector2d::Zero());
}

TEST(CenterData, ZeroVarianceColumnWithScaling)
{
    MatrixXd raw = MatrixXd::Ones(2, 2);
    try {
        center_data(raw, true);
        FAIL() << "expected an error";
    } catch (const DataError& e) {
        EXPECT_EQ(e.code(), "zero_variance_column");
        EXPECT_NE(std::string(e.what()).find("column 0"), std::string::npos);
    }
}

TEST(CenterData, ScalesAndRoundTrip)
{
    MatrixXd raw(4, 2);
    raw << 1, 10, 2, 30, 3, 20, 6, 0;
    const auto c = center_data(raw, true);
    ASSERT_TRUE(c.column_scales);
    for (Eigen::Index j = 0; j < 2; ++j) {
        EXPECT_NEAR(c.X.col(j).sum(), 0.0, 1e-12);
        EXPECT_NEAR(c.X.col(j).squaredNorm() / 3.0, 1.0, 1e-12);
    }
    MatrixXd back = (c.X.array().rowwise() * c.column_scales->transpose().array()).matrix();
    back.rowwise() += c.column_means.transpose();
    EXPECT_LT((back - raw).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((apply_centering(raw, c.column_means, c.column_scales) - c.X).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BuildIndicator, Basic)
{
    const auto ind = build_indicator<double>({"a", "b", "a"}, {"a", "b"});
    MatrixXd Y(3, 2);
    Y << 1, 0, 0, 1, 1, 0;
    EXPECT_EQ(ind.Y, Y);
    EXPECT_EQ(ind.counts, (std::vector<Eigen::Index>{2, 1}));
    EXPECT_DOUBLE_EQ(ind.D(0), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(ind.D(1), 1.0 / 3.0);
}

TEST(BuildIndicator, VocabOrderRespected)
{
    const auto ind = build_indicator<double>({"b", "a"}, {"a", "b"});
    MatrixXd Y(2, 2);
    Y << 0, 1, 1, 0;
    EXPECT_EQ(ind.Y, Y);
}

TEST(BuildIndicator, Errors)
{
    EXPECT_THROW(build_indicator<double>({"a", "c"}, {"a", "b"}), DataError);
    try {
        build_indicator<double>({"a", "a"}, {"a", "b"});
        FAIL();
    } catch (const DataError& e) {
        EXPECT_EQ(e.code(), "empty_class");
    }
}

TEST(BuildIndicator, ClassSumsMatchDenseProducts)
{
    const auto ind = build_indicator<double>({"x", "y", "y", "z", "x"}, {"x", "y", "z"});
    const VectorXd v = VectorXd::LinSpaced(5, 1, 5);
    const Eigen::Vector3d th(0.5, -1, 2);
    EXPECT_EQ(ind.class_sums(v), ind.Y.transpose() * v);
    EXPECT_EQ(ind.expand(th), ind.Y * th);
    EXPECT_EQ(ind.Y.transpose() * ind.Y, MatrixXd(Eigen::Vector3d(2, 2, 1).asDiagonal()));
}

TEST(MakeDataset, SingleClassRejected)
{
    try {
        make_dataset<double>(MatrixXd::Zero(3, 2), {"a", "a", "a"});
        FAIL();
    } catch (const DataError& e) {
        EXPECT_EQ(e.code(), "too_few_classes");
    }
}

TEST(MakeDataset, FirstAppearanceVocab)
{
    const auto ds = make_dataset<double>(MatrixXd::Zero(3, 1), {"z", "a", "z"});
    EXPECT_EQ(ds.label_vocab, (std::vector<std::string>{"z", "a"}));
    EXPECT_THROW(make_dataset<double>(MatrixXd::Zero(2, 1), {"a", "b", "c"}), DataError);
}

TEST(CenterData, CenteredProductsSumToZero)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(3.0, 2.0);
    const MatrixXd raw = MatrixXd::NullaryExpr(7, 4, [&] { return normal(rng); });
    const auto c = center_data(raw);
    const VectorXd beta = VectorXd::NullaryExpr(4, [&] { return normal(rng); });
    EXPECT_NEAR((c.X * beta).sum(), 0.0, 1e-12);
}
