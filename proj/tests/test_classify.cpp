#include "sos/classify.hpp"

#include "sos/datagen.hpp"

#include <gtest/gtest.h>

using namespace sos;

namespace {

SosModel<double> toy_model(const MatrixXd& B, const MatrixXd& centroids, const VectorXd& means)
{
    SosModel<double> m;
    m.B = B;
    m.centroids = centroids;
    m.column_means = means;
    for (Eigen::Index k = 0; k < centroids.rows(); ++k) m.label_vocab.push_back("k" + std::to_string(k));
    return m;
}

} // namespace

TEST(Project, Examples)
{
    const VectorXd means = Eigen::Vector3d(1, 2, 3);
    MatrixXd B(3, 2);
    B << 1, 0, 0, 2, 1, 1;
    const auto m = toy_model(B, MatrixXd::Zero(2, 2), means);
    EXPECT_EQ(project(m, MatrixXd(means.transpose())).Z, MatrixXd::Zero(1, 2));

    const auto zero = toy_model(MatrixXd::Zero(3, 2), MatrixXd::Zero(2, 2), means);
    EXPECT_EQ(project(zero, MatrixXd(MatrixXd::Random(4, 3))).Z, MatrixXd::Zero(4, 2));

    const MatrixXd raw = MatrixXd::Random(5, 3);
    const auto id = toy_model(MatrixXd::Identity(3, 3), MatrixXd::Zero(2, 3), VectorXd::Zero(3));
    EXPECT_EQ(project(id, raw).Z, raw);
    EXPECT_THROW(project(id, MatrixXd(MatrixXd::Zero(2, 4))), DataError);
}

TEST(FitCentroids, Examples)
{
    MatrixXd Z(2, 2);
    Z << 1, 2, 3, 4;
    EXPECT_EQ(fit_centroids<double>({Z, std::vector<Eigen::Index>{1, 0}}, 2), (MatrixXd(2, 2) << 3, 4, 1, 2).finished());

    MatrixXd Z2(4, 1);
    Z2 << -1, 5, 1, 7;
    const ProjectedData<double> pd{Z2, std::vector<Eigen::Index>{0, 1, 0, 1}};
    EXPECT_EQ(fit_centroids(pd, 2), Eigen::Vector2d(0, 6));

    MatrixXd Z3(4, 1);
    Z3 << 5, 1, 7, -1;
    EXPECT_EQ(fit_centroids<double>({Z3, std::vector<Eigen::Index>{1, 0, 1, 0}}, 2), Eigen::Vector2d(0, 6));
    EXPECT_THROW(fit_centroids<double>({Z3, std::vector<Eigen::Index>{0, 0, 0, 0}}, 2), DataError);
}

TEST(Predict, CentroidAndTieRule)
{
    MatrixXd C(3, 2);
    C << 0, 0, 2, 0, 0, 5;
    const std::vector<std::string> vocab{"a", "b", "c"};
    MatrixXd Z(3, 2);
    Z << 2, 0, 1, 0, 0, 5;
    const auto pred = predict_projected<double>(Z, C, vocab);
    EXPECT_EQ(pred.labels, (std::vector<std::string>{"b", "a", "c"}));
    EXPECT_EQ(pred.distances(0, 1), 0.0);
    EXPECT_EQ(pred.distances(1, 0), pred.distances(1, 1));
}

TEST(Predict, MatchesBruteForceAndSignFlips)
{
    SynthSpec spec;
    spec.K = 3;
    spec.p = 300;
    spec.seed = 3;
    spec.n_test_per_class = 40;
    const auto data = sample_type1(spec);
    SosFitConfig<double> cfg;
    cfg.lambda = 0.05;
    const auto model = fit_sos(data.train, cfg);
    const auto pred = predict(model, data.test.features);

    const MatrixXd Z = (data.test.features.rowwise() - model.column_means.transpose()) * model.B;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        Eigen::Index best = 0;
        double bd = 1e300;
        for (Eigen::Index k = 0; k < 3; ++k) {
            const double dist = (Z.row(i) - model.centroids.row(k)).norm();
            if (dist < bd) bd = dist, best = k;
        }
        EXPECT_EQ(pred.labels[i], model.label_vocab[best]);
    }

    auto flipped = model;
    flipped.B.col(0) *= -1;
    flipped.Theta.col(0) *= -1;
    const auto Ytr = build_indicator<double>(data.train.labels, data.train.label_vocab);
    flipped.centroids = fit_centroids<double>(project(flipped, data.train.features).Z, Ytr.class_of, 3);
    const auto pf = predict(flipped, data.test.features);
    EXPECT_EQ(pf.labels, pred.labels);
    EXPECT_LT((pf.distances - pred.distances).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Evaluate, Examples)
{
    const std::vector<std::string> truth{"a", "b", "a"};
    MatrixXd B(3, 2);
    B << 0, 0, 1, 0, 0, -2;
    const auto perfect = evaluate(truth, truth, B, 1.5);
    EXPECT_EQ(perfect.numErr, 0);
    EXPECT_EQ(perfect.fracErr, 0.0);
    EXPECT_EQ(perfect.feats, 2);
    EXPECT_DOUBLE_EQ(perfect.fracFeats, 2.0 / 3.0);
    EXPECT_EQ(perfect.time, 1.5);

    const auto m = evaluate<double>({"b", "b", "a"}, truth, B);
    EXPECT_EQ(m.numErr, 1);
    EXPECT_DOUBLE_EQ(m.fracErr, 1.0 / 3.0);

    MatrixXd dust(2, 1);
    dust << 1e-13, 2e-12;
    EXPECT_EQ(count_features(dust), 1);
    EXPECT_THROW(evaluate<double>({"a"}, truth, B), DataError);
}
