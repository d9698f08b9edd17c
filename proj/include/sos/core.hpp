#pragma once

#include "sos/types.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace sos {

/// Raw labelled observations. Rows of `features` are observations.
template <class Scalar>
struct Dataset
{
    Matrix<Scalar> features;
    std::vector<std::string> labels;
    std::vector<std::string> label_vocab;

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index p() const { return features.cols(); }
    Eigen::Index K() const { return static_cast<Eigen::Index>(label_vocab.size()); }
};

/// Distinct labels in order of first appearance.
inline std::vector<std::string> first_appearance_vocab(const std::vector<std::string>& labels)
{
    std::vector<std::string> vocab;
    for (const auto& l : labels) {
        if (std::find(vocab.begin(), vocab.end(), l) == vocab.end()) vocab.push_back(l);
    }
    return vocab;
}

/// Builds a validated dataset. Without an explicit vocabulary the class order
/// is the order of first appearance in `labels`.
template <class Scalar>
Dataset<Scalar> make_dataset(Matrix<Scalar> features,
                             std::vector<std::string> labels,
                             std::optional<std::vector<std::string>> vocab = std::nullopt)
{
    if (features.rows() != static_cast<Eigen::Index>(labels.size())) {
        throw DataError("dimension_mismatch",
                        "feature rows (" + std::to_string(features.rows()) +
                            ") != label count (" + std::to_string(labels.size()) + ")");
    }
    auto resolved = vocab ? std::move(*vocab) : first_appearance_vocab(labels);
    Dataset<Scalar> ds{std::move(features), std::move(labels), std::move(resolved)};

    if (ds.K() < 2) throw DataError("too_few_classes", "need at least 2 classes, got " + std::to_string(ds.K()));
    if (ds.n() < ds.K()) throw DataError("too_few_observations", "fewer observations than classes");
    if (ds.p() < 1) throw DataError("no_features", "dataset has no feature columns");

    std::unordered_map<std::string, Eigen::Index> index;
    for (Eigen::Index i = 0; i < ds.K(); ++i) index.emplace(ds.label_vocab[i], i);
    std::vector<Eigen::Index> counts(ds.K(), 0);
    for (const auto& l : ds.labels) {
        auto it = index.find(l);
        if (it == index.end()) throw DataError("unseen_label", "label '" + l + "' not in vocabulary");
        ++counts[it->second];
    }
    for (Eigen::Index i = 0; i < ds.K(); ++i) {
        if (counts[i] == 0) {
            throw DataError("empty_class", "class with no observations: '" + ds.label_vocab[i] + "'");
        }
    }
    return ds;
}

/// Column-centered features plus the statistics needed to reproduce the
/// transform on new rows.
template <class Scalar>
struct CenteredData
{
    Matrix<Scalar> X;
    Vector<Scalar> column_means;
    std::optional<Vector<Scalar>> column_scales;
};

template <class Scalar>
CenteredData<Scalar> center_data(const Matrix<Scalar>& raw, bool scale = false)
{
    const Eigen::Index n = raw.rows(), p = raw.cols();
    if (n < 1 || p < 1) throw DataError("empty_data", "center_data needs n >= 1 and p >= 1");

    CenteredData<Scalar> out;
    out.column_means = raw.colwise().mean().transpose();
    out.X = raw.rowwise() - out.column_means.transpose();
    if (scale) {
        Vector<Scalar> sd(p);
        for (Eigen::Index j = 0; j < p; ++j) {
            const Scalar ss = out.X.col(j).squaredNorm();
            sd(j) = n > 1 ? std::sqrt(ss / Scalar(n - 1)) : Scalar(0);
            const Scalar floor = Scalar(1e-12) * (Scalar(1) + std::abs(out.column_means(j)));
            if (!(sd(j) > floor)) {
                throw DataError("zero_variance_column", "zero-variance column " + std::to_string(j));
            }
        }
        out.X.array().rowwise() /= sd.transpose().array();
        out.column_scales = std::move(sd);
    }
    return out;
}

/// Applies stored centering (and scaling) statistics to new raw rows.
template <class Scalar>
Matrix<Scalar> apply_centering(const Matrix<Scalar>& raw,
                               const Vector<Scalar>& means,
                               const std::optional<Vector<Scalar>>& scales)
{
    check_dims(raw.cols() == means.size(),
               "data has " + std::to_string(raw.cols()) + " columns, model expects " +
                   std::to_string(means.size()));
    Matrix<Scalar> X = raw.rowwise() - means.transpose();
    if (scales) X.array().rowwise() /= scales->transpose().array();
    return X;
}

/// One-hot class membership and the diagonal of (1/n) Y^T Y.
template <class Scalar>
struct ClassIndicator
{
    Matrix<Scalar> Y;
    std::vector<Eigen::Index> counts;
    Vector<Scalar> D;
    std::vector<Eigen::Index> class_of;

    Eigen::Index n() const { return Y.rows(); }
    Eigen::Index K() const { return Y.cols(); }

    /// Y^T v without touching the dense indicator.
    Vector<Scalar> class_sums(const Vector<Scalar>& v) const
    {
        Vector<Scalar> s = Vector<Scalar>::Zero(K());
        for (Eigen::Index i = 0; i < n(); ++i) s(class_of[i]) += v(i);
        return s;
    }

    /// Y theta without touching the dense indicator.
    Vector<Scalar> expand(const Vector<Scalar>& theta) const
    {
        Vector<Scalar> out(n());
        for (Eigen::Index i = 0; i < n(); ++i) out(i) = theta(class_of[i]);
        return out;
    }
};

template <class Scalar>
ClassIndicator<Scalar> build_indicator(const std::vector<std::string>& labels,
                                       const std::vector<std::string>& vocab)
{
    const auto n = static_cast<Eigen::Index>(labels.size());
    const auto K = static_cast<Eigen::Index>(vocab.size());
    std::unordered_map<std::string, Eigen::Index> index;
    for (Eigen::Index k = 0; k < K; ++k) index.emplace(vocab[k], k);

    ClassIndicator<Scalar> ind;
    ind.Y = Matrix<Scalar>::Zero(n, K);
    ind.counts.assign(K, 0);
    ind.class_of.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        auto it = index.find(labels[i]);
        if (it == index.end()) throw DataError("unseen_label", "label '" + labels[i] + "' not in vocabulary");
        ind.Y(i, it->second) = Scalar(1);
        ind.class_of[i] = it->second;
        ++ind.counts[it->second];
    }
    ind.D.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        if (ind.counts[k] == 0) throw DataError("empty_class", "class with no observations: '" + vocab[k] + "'");
        ind.D(k) = Scalar(ind.counts[k]) / Scalar(n);
    }
    return ind;
}

} // namespace sos
