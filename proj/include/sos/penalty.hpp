#pragma once

#include "sos/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sos {

// The Tikhonov matrix Omega of the generalized elastic net, kept in whichever
// structural form it was supplied in. Nothing outside this header ever forms
// a dense Omega for the structured variants.
template <class Scalar>
struct IdentityOmega
{};

template <class Scalar>
struct DiagonalOmega
{
    Vector<Scalar> u;
};

// Omega = R R^T
template <class Scalar>
struct LowRankOmega
{
    Matrix<Scalar> R;
};

template <class Scalar>
struct DenseOmega
{
    Matrix<Scalar> Omega;
};

template <class Scalar>
class Penalty
{
public:
    using variant_t = std::variant<IdentityOmega<Scalar>, DiagonalOmega<Scalar>,
                                   LowRankOmega<Scalar>, DenseOmega<Scalar>>;

    Penalty() : v_(IdentityOmega<Scalar>{}) {}

    static Penalty identity() { return Penalty(IdentityOmega<Scalar>{}); }

    static Penalty diagonal(Vector<Scalar> u)
    {
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            if (!(u(i) >= Scalar(0))) {
                throw UsageError("invalid_penalty", "diagonal penalty entry " + std::to_string(i) + " is negative");
            }
        }
        return Penalty(DiagonalOmega<Scalar>{std::move(u)});
    }

    static Penalty low_rank(Matrix<Scalar> R)
    {
        if (R.cols() > R.rows()) {
            throw UsageError("invalid_penalty", "low-rank factor has more columns than rows");
        }
        return Penalty(LowRankOmega<Scalar>{std::move(R)});
    }

    /// Validates symmetry (1e-12 relative) and PSD (eigenvalues >= -1e-10 ||Omega||).
    static Penalty dense(Matrix<Scalar> Omega)
    {
        if (Omega.rows() != Omega.cols()) throw UsageError("invalid_penalty", "dense penalty must be square");
        const Scalar scale = std::max(Omega.cwiseAbs().maxCoeff(), Scalar(1e-300));
        if ((Omega - Omega.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale) {
            throw UsageError("invalid_penalty", "dense penalty is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(Omega, Eigen::EigenvaluesOnly);
        const Scalar norm = es.eigenvalues().cwiseAbs().maxCoeff();
        if (es.eigenvalues().minCoeff() < Scalar(-1e-10) * norm) {
            throw UsageError("invalid_penalty", "dense penalty is not positive semidefinite");
        }
        return Penalty(DenseOmega<Scalar>{std::move(Omega)});
    }

    const variant_t& variant() const { return v_; }

    bool is_identity() const { return std::holds_alternative<IdentityOmega<Scalar>>(v_); }
    bool is_diagonal() const { return std::holds_alternative<DiagonalOmega<Scalar>>(v_); }
    bool is_low_rank() const { return std::holds_alternative<LowRankOmega<Scalar>>(v_); }
    bool is_dense() const { return std::holds_alternative<DenseOmega<Scalar>>(v_); }

    const DiagonalOmega<Scalar>& as_diagonal() const { return std::get<DiagonalOmega<Scalar>>(v_); }
    const LowRankOmega<Scalar>& as_low_rank() const { return std::get<LowRankOmega<Scalar>>(v_); }
    const DenseOmega<Scalar>& as_dense() const { return std::get<DenseOmega<Scalar>>(v_); }

    /// Dimension p, or nullopt for the dimension-free identity.
    std::optional<Eigen::Index> dim() const
    {
        if (is_diagonal()) return as_diagonal().u.size();
        if (is_low_rank()) return as_low_rank().R.rows();
        if (is_dense()) return as_dense().Omega.rows();
        return std::nullopt;
    }

    /// Diagonal entries of Omega. Identity/Diagonal only.
    Vector<Scalar> diagonal_entries(Eigen::Index p) const
    {
        if (is_identity()) return Vector<Scalar>::Ones(p);
        return as_diagonal().u;
    }

    std::string kind_name() const
    {
        static const char* names[] = {"identity", "diagonal", "lowrank", "dense"};
        return names[v_.index()];
    }

    /// Dense Omega, for tests and small problems only.
    Matrix<Scalar> to_dense(Eigen::Index p) const
    {
        if (is_identity()) return Matrix<Scalar>::Identity(p, p);
        if (is_diagonal()) return as_diagonal().u.asDiagonal();
        if (is_low_rank()) return as_low_rank().R * as_low_rank().R.transpose();
        return as_dense().Omega;
    }

    void check_dim(Eigen::Index p) const
    {
        if (auto d = dim(); d && *d != p) {
            throw DataError("dimension_mismatch", "penalty has dimension " + std::to_string(*d) +
                                                      ", problem has p = " + std::to_string(p));
        }
    }

private:
    explicit Penalty(variant_t v) : v_(std::move(v)) {}

    variant_t v_;
};

/// Omega * beta in O(p), O(rp) or O(p^2) depending on the structure.
template <class Scalar>
Vector<Scalar> omega_matvec(const Penalty<Scalar>& pen, const Vector<Scalar>& beta)
{
    pen.check_dim(beta.size());
    return std::visit(
        [&](const auto& om) -> Vector<Scalar> {
            using T = std::decay_t<decltype(om)>;
            if constexpr (std::is_same_v<T, IdentityOmega<Scalar>>) {
                return beta;
            } else if constexpr (std::is_same_v<T, DiagonalOmega<Scalar>>) {
                return om.u.cwiseProduct(beta);
            } else if constexpr (std::is_same_v<T, LowRankOmega<Scalar>>) {
                return om.R * (om.R.transpose() * beta);
            } else {
                return om.Omega * beta;
            }
        },
        pen.variant());
}

/// out += scale * Omega beta, without temporaries of length p.
template <class Scalar>
void omega_matvec_add(const Penalty<Scalar>& pen, const Vector<Scalar>& beta, Scalar scale, Vector<Scalar>& out)
{
    pen.check_dim(beta.size());
    std::visit(
        [&](const auto& om) {
            using T = std::decay_t<decltype(om)>;
            if constexpr (std::is_same_v<T, IdentityOmega<Scalar>>) {
                out += scale * beta;
            } else if constexpr (std::is_same_v<T, DiagonalOmega<Scalar>>) {
                out.array() += scale * om.u.array() * beta.array();
            } else if constexpr (std::is_same_v<T, LowRankOmega<Scalar>>) {
                const Vector<Scalar> t = om.R.transpose() * beta;
                out.noalias() += scale * (om.R * t);
            } else {
                out.noalias() += scale * (om.Omega * beta);
            }
        },
        pen.variant());
}

/// beta^T Omega beta.
template <class Scalar>
Scalar omega_quadform(const Penalty<Scalar>& pen, const Vector<Scalar>& beta)
{
    pen.check_dim(beta.size());
    return std::visit(
        [&](const auto& om) -> Scalar {
            using T = std::decay_t<decltype(om)>;
            if constexpr (std::is_same_v<T, IdentityOmega<Scalar>>) {
                return beta.squaredNorm();
            } else if constexpr (std::is_same_v<T, DiagonalOmega<Scalar>>) {
                return (om.u.array() * beta.array().square()).sum();
            } else if constexpr (std::is_same_v<T, LowRankOmega<Scalar>>) {
                return (om.R.transpose() * beta).squaredNorm();
            } else {
                return beta.dot(om.Omega * beta);
            }
        },
        pen.variant());
}

/// Upper bound on ||2 (X^T X + gamma Omega)||_2 from the triangle inequality
/// and ||X^T X|| <= ||X||_F^2. Costs O(np) plus O(p), O(rp) or O(p^2).
template <class Scalar>
Scalar lipschitz_bound(const Penalty<Scalar>& pen, const Matrix<Scalar>& X, Scalar gamma)
{
    if (gamma < Scalar(0)) throw UsageError("invalid_gamma", "gamma must be nonnegative");
    pen.check_dim(X.cols());
    const Scalar omega_norm = std::visit(
        [&](const auto& om) -> Scalar {
            using T = std::decay_t<decltype(om)>;
            if constexpr (std::is_same_v<T, IdentityOmega<Scalar>>) {
                return Scalar(1);
            } else if constexpr (std::is_same_v<T, DiagonalOmega<Scalar>>) {
                return om.u.size() ? om.u.maxCoeff() : Scalar(0);
            } else if constexpr (std::is_same_v<T, LowRankOmega<Scalar>>) {
                return om.R.squaredNorm();
            } else {
                return om.Omega.norm();
            }
        },
        pen.variant());
    return Scalar(2) * gamma * omega_norm + Scalar(2) * X.squaredNorm();
}

/// Factorized M = mu I + 2 gamma Omega. Built once per (Omega, mu, gamma),
/// immutable afterwards, so one instance can serve concurrent solves.
template <class Scalar>
class ShiftedPenaltySolver
{
public:
    ShiftedPenaltySolver(const Penalty<Scalar>& pen, Scalar mu, Scalar gamma)
        : pen_(pen), mu_(mu), gamma_(gamma)
    {
        if (!(mu > Scalar(0))) throw UsageError("invalid_mu", "mu must be positive");
        if (gamma < Scalar(0)) throw UsageError("invalid_gamma", "gamma must be nonnegative");
        if (gamma == Scalar(0)) return;
        if (pen.is_diagonal()) {
            inv_diag_ = (Vector<Scalar>::Constant(pen.as_diagonal().u.size(), mu) +
                         Scalar(2) * gamma * pen.as_diagonal().u)
                            .cwiseInverse();
        } else if (pen.is_low_rank()) {
            const auto& R = pen.as_low_rank().R;
            Matrix<Scalar> inner = Matrix<Scalar>::Identity(R.cols(), R.cols());
            inner.noalias() += (Scalar(2) * gamma / mu) * (R.transpose() * R);
            inner_.compute(inner);
            if (inner_.info() != Eigen::Success) {
                throw SolverError("factorization_failed", "inner low-rank system is not positive definite");
            }
        } else if (pen.is_dense()) {
            const auto& Om = pen.as_dense().Omega;
            Matrix<Scalar> M = Scalar(2) * gamma * Om;
            M.diagonal().array() += mu;
            dense_.compute(M);
            if (dense_.info() != Eigen::Success) {
                throw SolverError("factorization_failed", "mu I + 2 gamma Omega is not positive definite");
            }
        }
    }

    Scalar mu() const { return mu_; }
    Scalar gamma() const { return gamma_; }
    const Penalty<Scalar>& penalty() const { return pen_; }

    /// out = M^{-1} v. Identity and diagonal penalties need no temporaries.
    void apply_into(const Vector<Scalar>& v, Vector<Scalar>& out) const
    {
        pen_.check_dim(v.size());
        if (gamma_ == Scalar(0)) {
            out = v / mu_;
        } else if (pen_.is_identity()) {
            out = v / (mu_ + Scalar(2) * gamma_);
        } else if (pen_.is_diagonal()) {
            out = inv_diag_.cwiseProduct(v);
        } else {
            out = apply(v);
        }
    }

    /// M^{-1} V for a vector or a p x m block.
    template <class Derived>
    Matrix<Scalar> apply(const Eigen::MatrixBase<Derived>& V) const
    {
        pen_.check_dim(V.rows());
        if (gamma_ == Scalar(0)) return V / mu_;
        if (pen_.is_identity()) return V / (mu_ + Scalar(2) * gamma_);
        if (pen_.is_diagonal()) return inv_diag_.asDiagonal() * V;
        if (pen_.is_low_rank()) {
            const auto& R = pen_.as_low_rank().R;
            Matrix<Scalar> out = V / mu_;
            Matrix<Scalar> t = inner_.solve(R.transpose() * V);
            out.noalias() -= (Scalar(2) * gamma_ / (mu_ * mu_)) * (R * t);
            return out;
        }
        return dense_.solve(V);
    }

private:
    Penalty<Scalar> pen_;
    Scalar mu_;
    Scalar gamma_;
    Vector<Scalar> inv_diag_;
    Eigen::LLT<Matrix<Scalar>> inner_;
    Eigen::LLT<Matrix<Scalar>> dense_;
};

/// (mu I + 2 gamma Omega)^{-1} v, factorizing on the spot.
template <class Scalar>
Vector<Scalar> m_inverse_apply(const Penalty<Scalar>& pen, Scalar mu, Scalar gamma, const Vector<Scalar>& v)
{
    return ShiftedPenaltySolver<Scalar>(pen, mu, gamma).apply(v);
}

// ---------------------------------------------------------------------------
// Matern covariance penalties

template <class Scalar>
struct MaternParams
{
    Scalar sigma2 = 1;
    Scalar rho = 1;
    Scalar nu = Scalar(0.5);
    // Added to the covariance diagonal; defaults to 1e-8 * sigma2.
    std::optional<Scalar> jitter;

    Scalar effective_jitter() const { return jitter ? *jitter : Scalar(1e-8) * sigma2; }

    void validate() const
    {
        if (!(sigma2 > 0) || !(rho > 0) || !(nu > 0)) {
            throw UsageError("invalid_matern", "Matern sigma2, rho and nu must be positive");
        }
        if (jitter && *jitter < 0) throw UsageError("invalid_matern", "Matern jitter must be nonnegative");
    }
};

/// General-nu evaluation through the modified Bessel function of the second kind.
template <class Scalar>
Scalar matern_covariance_bessel(Scalar d, const MaternParams<Scalar>& prm)
{
    if (d <= Scalar(0)) return prm.sigma2;
    const double nu = static_cast<double>(prm.nu);
    const double a = std::sqrt(2.0 * nu) * static_cast<double>(d / prm.rho);
    // K_nu underflows long before the product does anything useful.
    if (a > 700.0) return Scalar(0);
    const double c = std::pow(2.0, 1.0 - nu) / std::tgamma(nu) * std::pow(a, nu) * std::cyl_bessel_k(nu, a);
    return prm.sigma2 * static_cast<Scalar>(c);
}

/// Matern covariance at distance d. C(0) = sigma2 by continuity; nu in
/// {1/2, 3/2, 5/2} use the closed forms, anything else the Bessel K route.
template <class Scalar>
Scalar matern_covariance(Scalar d, const MaternParams<Scalar>& prm)
{
    if (d <= Scalar(0)) return prm.sigma2;
    const Scalar s = d / prm.rho;
    if (prm.nu == Scalar(0.5)) return prm.sigma2 * std::exp(-s);
    if (prm.nu == Scalar(1.5)) {
        const Scalar a = std::sqrt(Scalar(3)) * s;
        return prm.sigma2 * (Scalar(1) + a) * std::exp(-a);
    }
    if (prm.nu == Scalar(2.5)) {
        const Scalar a = std::sqrt(Scalar(5)) * s;
        return prm.sigma2 * (Scalar(1) + a + a * a / Scalar(3)) * std::exp(-a);
    }
    return matern_covariance_bessel(d, prm);
}

using Point3 = std::array<double, 3>;

/// 1-D channel layout: point i sits at (0, 0, i + 1).
inline std::vector<Point3> channel_positions(Eigen::Index p, double spacing = 1.0)
{
    std::vector<Point3> pos(p);
    for (Eigen::Index i = 0; i < p; ++i) pos[i] = {0.0, 0.0, spacing * double(i + 1)};
    return pos;
}

/// Omega = C^{-1} with C_ij the Matern covariance of the distance between
/// positions i and j, C += jitter I. Result is symmetrized.
template <class Scalar>
Penalty<Scalar> build_matern_omega(const std::vector<Point3>& positions, const MaternParams<Scalar>& prm)
{
    prm.validate();
    const auto p = static_cast<Eigen::Index>(positions.size());
    if (p < 1) throw UsageError("invalid_matern", "no positions given");
    Matrix<Scalar> C(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        C(i, i) = prm.sigma2 + prm.effective_jitter();
        for (Eigen::Index j = 0; j < i; ++j) {
            const double dx = positions[i][0] - positions[j][0];
            const double dy = positions[i][1] - positions[j][1];
            const double dz = positions[i][2] - positions[j][2];
            const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
            if (d == 0.0) {
                throw DataError("duplicate_position",
                                "positions " + std::to_string(j) + " and " + std::to_string(i) + " coincide");
            }
            C(i, j) = C(j, i) = matern_covariance(static_cast<Scalar>(d), prm);
        }
    }
    Eigen::LLT<Matrix<Scalar>> llt(C);
    if (llt.info() != Eigen::Success) {
        throw DataError("singular_covariance", "Matern covariance is numerically singular; increase the jitter");
    }
    Matrix<Scalar> Omega = llt.solve(Matrix<Scalar>::Identity(p, p));
    if (!Omega.allFinite()) {
        throw DataError("singular_covariance", "Matern covariance is numerically singular; increase the jitter");
    }
    Matrix<Scalar> sym = Scalar(0.5) * (Omega + Omega.transpose());
    return Penalty<Scalar>::dense(std::move(sym));
}

/// Best rank-r PSD approximation of a dense penalty, as a factor R with
/// R R^T = sum_{i<=r} lambda_i u_i u_i^T (eigenvalues descending, clipped at 0,
/// each u_i signed so its first nonzero entry is positive).
template <class Scalar>
Penalty<Scalar> low_rank_truncate(const Penalty<Scalar>& dense, Eigen::Index r)
{
    if (!dense.is_dense()) throw UsageError("invalid_penalty", "low_rank_truncate needs a dense penalty");
    const auto& Om = dense.as_dense().Omega;
    const Eigen::Index p = Om.rows();
    if (r < 1 || r > p) {
        throw UsageError("invalid_rank", "rank " + std::to_string(r) + " outside [1, " + std::to_string(p) + "]");
    }
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(Om);
    if (es.info() != Eigen::Success) throw SolverError("eigensolver_failed", "eigendecomposition failed");
    const Scalar tiny = Scalar(1e-14);
    Matrix<Scalar> R(p, r);
    for (Eigen::Index k = 0; k < r; ++k) {
        const Eigen::Index src = p - 1 - k; // eigenvalues come ascending
        Vector<Scalar> u = es.eigenvectors().col(src);
        for (Eigen::Index i = 0; i < p; ++i) {
            if (std::abs(u(i)) > tiny) {
                if (u(i) < 0) u = -u;
                break;
            }
        }
        R.col(k) = std::sqrt(std::max(es.eigenvalues()(src), Scalar(0))) * u;
    }
    return Penalty<Scalar>::low_rank(std::move(R));
}

} // namespace sos
