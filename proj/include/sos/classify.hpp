#pragma once

#include "sos/sos.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace sos {

template <class Scalar>
struct ProjectedData
{
    Matrix<Scalar> Z;
    std::optional<std::vector<Eigen::Index>> class_of;
};

// Entries at or below this magnitude count as zero when tallying features.
inline constexpr double kFeatureZero = 1e-12;

template <class Scalar>
ProjectedData<Scalar> project(const SosModel<Scalar>& model, const Matrix<Scalar>& raw)
{
    const Matrix<Scalar> X = apply_centering(raw, model.column_means, model.column_scales);
    return {X * model.B, std::nullopt};
}

template <class Scalar>
Matrix<Scalar> fit_centroids(const ProjectedData<Scalar>& train, Eigen::Index K)
{
    if (!train.class_of) throw DataError("missing_labels", "centroids need labelled projected data");
    return fit_centroids<Scalar>(train.Z, *train.class_of, K);
}

template <class Scalar>
struct Prediction
{
    std::vector<Eigen::Index> class_index;
    std::vector<std::string> labels;
    Matrix<Scalar> distances; // m x K
};

/// Nearest centroid in the projected space; ties go to the lowest class index.
template <class Scalar>
Prediction<Scalar> predict_projected(const Matrix<Scalar>& Z, const Matrix<Scalar>& centroids,
                                     const std::vector<std::string>& vocab)
{
    check_dims(Z.cols() == centroids.cols(), "projected dimension does not match centroids");
    const Eigen::Index m = Z.rows(), K = centroids.rows();
    Prediction<Scalar> out;
    out.distances.resize(m, K);
    out.class_index.resize(m);
    out.labels.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 0; k < K; ++k) {
            out.distances(i, k) = (Z.row(i) - centroids.row(k)).norm();
            if (out.distances(i, k) < out.distances(i, best)) best = k;
        }
        out.class_index[i] = best;
        out.labels[i] = vocab[best];
    }
    return out;
}

template <class Scalar>
Prediction<Scalar> predict(const SosModel<Scalar>& model, const Matrix<Scalar>& raw)
{
    return predict_projected<Scalar>(project(model, raw).Z, model.centroids, model.label_vocab);
}

struct Metrics
{
    long numErr = 0;
    double fracErr = 0.0;
    long feats = 0;
    double fracFeats = 0.0;
    double time = 0.0;
};

/// Rows of B with any entry above the zero threshold.
template <class Scalar>
long count_features(const Matrix<Scalar>& B)
{
    long feats = 0;
    for (Eigen::Index j = 0; j < B.rows(); ++j) {
        if ((B.row(j).array().abs() > Scalar(kFeatureZero)).any()) ++feats;
    }
    return feats;
}

template <class Scalar>
Metrics evaluate(const std::vector<std::string>& predicted, const std::vector<std::string>& truth,
                 const Matrix<Scalar>& B, double seconds = 0.0)
{
    check_dims(predicted.size() == truth.size(), "prediction count does not match truth count");
    Metrics m;
    for (std::size_t i = 0; i < truth.size(); ++i) m.numErr += predicted[i] != truth[i];
    m.fracErr = truth.empty() ? 0.0 : double(m.numErr) / double(truth.size());
    m.feats = count_features(B);
    m.fracFeats = B.rows() ? double(m.feats) / double(B.rows()) : 0.0;
    m.time = seconds;
    return m;
}

} // namespace sos
