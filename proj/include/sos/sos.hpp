#pragma once

#include "sos/core.hpp"
#include "sos/ennet.hpp"
#include "sos/penalty.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sos {

/// Scoring vectors found so far: Q = [e, theta_1, ..., theta_{k-1}], all
/// D-orthonormal (theta_i^T diag(D) theta_j = delta_ij; e^T diag(D) e = 1).
template <class Scalar>
struct ScoringState
{
    Matrix<Scalar> Q;
    Vector<Scalar> D;

    static ScoringState initial(const Vector<Scalar>& D)
    {
        return {Matrix<Scalar>::Ones(D.size(), 1), D};
    }

    Eigen::Index K() const { return Q.rows(); }
    // 1-based index of the direction currently being fitted.
    Eigen::Index k() const { return Q.cols(); }

    void push(const Vector<Scalar>& theta)
    {
        Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
        Q.col(Q.cols() - 1) = theta;
    }

    /// (I - Q Q^T diag(D)) v, applied twice to keep conjugacy tight.
    Vector<Scalar> project(const Vector<Scalar>& v) const
    {
        Vector<Scalar> w = v;
        for (int pass = 0; pass < 2; ++pass) w -= Q * (Q.transpose() * D.cwiseProduct(w));
        return w;
    }

    Scalar d_norm2(const Vector<Scalar>& v) const { return v.dot(D.cwiseProduct(v)); }
};

template <class Scalar>
struct ThetaUpdate
{
    Vector<Scalar> theta;
    bool degenerate = false;
};

/// Any feasible theta: first standard basis vector that survives
/// D-Gram-Schmidt against the columns of Q, D-normalized.
template <class Scalar>
Vector<Scalar> feasible_fallback_theta(const ScoringState<Scalar>& state)
{
    const Eigen::Index K = state.K();
    for (Eigen::Index j = 0; j < K; ++j) {
        Vector<Scalar> v = Vector<Scalar>::Unit(K, j);
        for (Eigen::Index c = 0; c < state.Q.cols(); ++c) {
            const auto q = state.Q.col(c);
            v -= (q.dot(state.D.cwiseProduct(v)) / q.dot(state.D.cwiseProduct(q))) * q;
        }
        v = state.project(v);
        const Scalar nrm2 = state.d_norm2(v);
        if (nrm2 > Scalar(1e-10) * state.D(j)) return v / std::sqrt(nrm2);
    }
    throw SolverError("no_feasible_theta", "no feasible scoring vector remains (k > K - 1)");
}

/// Exact minimizer of ||Y theta - X beta||^2 over feasible theta:
///   w = (I - Q Q^T diag(D)) diag(D)^{-1} Y^T X beta,  theta = w / sqrt(w^T diag(D) w).
/// When w vanishes every feasible theta is optimal and the fallback is returned
/// with `degenerate` set.
template <class Scalar>
ThetaUpdate<Scalar> update_theta(const ClassIndicator<Scalar>& Y, const Vector<Scalar>& Xbeta,
                                 const ScoringState<Scalar>& state)
{
    check_dims(Xbeta.size() == Y.n(), "X beta length does not match indicator rows");
    const Vector<Scalar> sums = Y.class_sums(Xbeta);
    const Vector<Scalar> w = state.project(sums.cwiseQuotient(state.D));
    const Scalar nrm2 = state.d_norm2(w);
    const Scalar eps = Scalar(1e-12) * Scalar(Y.n());
    if (nrm2 > eps * eps) return {w / std::sqrt(nrm2), false};
    return {feasible_fallback_theta(state), true};
}

/// Projection of an arbitrary start vector onto the feasible set.
template <class Scalar>
Vector<Scalar> project_to_feasible(const Vector<Scalar>& v, const ScoringState<Scalar>& state)
{
    const Vector<Scalar> w = state.project(v);
    const Scalar nrm2 = state.d_norm2(w);
    if (nrm2 > Scalar(1e-20)) return w / std::sqrt(nrm2);
    return feasible_fallback_theta(state);
}

/// ||Y theta - X beta||^2 + gamma beta^T Omega beta + lambda ||beta||_1.
template <class Scalar>
Scalar sos_objective(const Matrix<Scalar>& X, const ClassIndicator<Scalar>& Y, const Vector<Scalar>& theta,
                     const Vector<Scalar>& beta, Scalar gamma, Scalar lambda, const Penalty<Scalar>& omega)
{
    const Vector<Scalar> r = Y.expand(theta) - X * beta;
    return r.squaredNorm() + gamma * omega_quadform(omega, beta) + lambda * beta.template lpNorm<1>();
}

/// d = -2 X^T Y theta.
template <class Scalar>
Vector<Scalar> linear_term(const Matrix<Scalar>& X, const ClassIndicator<Scalar>& Y, const Vector<Scalar>& theta)
{
    return Scalar(-2) * (X.transpose() * Y.expand(theta));
}

/// Solves A beta = d by conjugate gradients with matrix-free A products.
template <class Scalar>
Vector<Scalar> solve_normal_system(const Subproblem<Scalar>& sub, Scalar rel_tol = Scalar(1e-8))
{
    const Vector<Scalar>& b = sub.d();
    Vector<Scalar> x = Vector<Scalar>::Zero(sub.p());
    const Scalar bnorm = b.norm();
    if (bnorm == Scalar(0)) return x;
    Vector<Scalar> r = b;
    Vector<Scalar> dir = r;
    Scalar rr = r.squaredNorm();
    const Eigen::Index max_iter = 10 * sub.p();
    for (Eigen::Index it = 0; it < max_iter; ++it) {
        const Vector<Scalar> Ad = sub.apply_A(dir);
        const Scalar curv = dir.dot(Ad);
        if (!(curv > Scalar(0))) throw SolverError("singular_system", "A is not positive definite");
        const Scalar step = rr / curv;
        x.noalias() += step * dir;
        r.noalias() -= step * Ad;
        const Scalar rr_next = r.squaredNorm();
        if (std::sqrt(rr_next) <= rel_tol * bnorm) return x;
        dir = r + (rr_next / rr) * dir;
        rr = rr_next;
    }
    throw SolverError("cg_not_converged", "A beta = d did not converge in " + std::to_string(max_iter) + " iterations");
}

/// lambda_bar = ((b*)^T d - 1/2 (b*)^T A b*) / ||b*||_1 with A b* = d. Falls
/// back to ||d||_inf when that is not positive. The lambda of `sub` is ignored.
template <class Scalar>
Scalar compute_lambda_bar(const Subproblem<Scalar>& sub)
{
    const Vector<Scalar> b = solve_normal_system(sub);
    const Scalar l1 = b.template lpNorm<1>();
    if (l1 > Scalar(0)) {
        const Scalar value = (b.dot(sub.d()) - Scalar(0.5) * sub.a_quadform(b)) / l1;
        if (value > Scalar(0) && std::isfinite(value)) return value;
    }
    const Scalar dinf = sub.d().size() ? sub.d().template lpNorm<Eigen::Infinity>() : Scalar(0);
    if (!(dinf > Scalar(0))) throw SolverError("trivial_subproblem", "trivial subproblem: d = 0");
    return dinf;
}

enum class ThetaInit { FixedProjection, Random };

template <class Scalar>
struct SosFitConfig
{
    // Number of directions; nullopt means K - 1.
    std::optional<int> q;
    Scalar gamma = Scalar(1e-3);
    Scalar lambda = Scalar(1e-3);
    Penalty<Scalar> omega = Penalty<Scalar>::identity();
    // Free-form description of omega kept for the model file.
    std::string omega_label = "identity";
    SolverId solver = SolverId::Fista;
    SolverOptions<Scalar> inner;
    int max_outer = 250;
    Scalar outer_tol = Scalar(1e-3);
    ThetaInit theta_init = ThetaInit::FixedProjection;
    std::uint64_t seed = 0;
    bool scale = false;

    int resolved_q(Eigen::Index K) const { return q ? *q : static_cast<int>(K - 1); }

    void validate(Eigen::Index K) const
    {
        const int qq = resolved_q(K);
        if (qq < 1 || qq > K - 1) {
            throw UsageError("invalid_q", "q = " + std::to_string(qq) + " outside [1, K-1] = [1, " +
                                              std::to_string(K - 1) + "]");
        }
        if (gamma < Scalar(0)) throw UsageError("invalid_gamma", "gamma must be nonnegative");
        if (lambda < Scalar(0)) throw UsageError("invalid_lambda", "lambda must be nonnegative");
        if (max_outer < 1) throw UsageError("invalid_option", "max_outer must be >= 1");
        if (!(outer_tol > Scalar(0))) throw UsageError("invalid_option", "outer_tol must be positive");
        inner.validate();
    }
};

template <class Scalar>
struct DirectionFit
{
    Vector<Scalar> theta;
    Vector<Scalar> beta;
    // The scoring vector beta was solved against (d = -2 X^T Y theta_solved).
    Vector<Scalar> theta_solved;
    // F(theta^0, 0) followed by F after every outer iteration.
    std::vector<Scalar> objective_trace;
    int outer_iterations = 0;
    long inner_iterations = 0;
    bool converged = false;
    bool last_inner_converged = false;
    // Inner results rejected for raising the subproblem objective above the warm start.
    int rejected_inner = 0;
    Scalar final_objective = Scalar(0);
    Scalar final_kkt = Scalar(0);
    Scalar d_inf = Scalar(0);
};

/// Initial theta for direction k per config.
template <class Scalar, class Rng>
Vector<Scalar> initial_theta(const ScoringState<Scalar>& state, ThetaInit init, Rng& rng)
{
    const Eigen::Index K = state.K();
    Vector<Scalar> v(K);
    if (init == ThetaInit::FixedProjection) {
        for (Eigen::Index i = 0; i < K; ++i) v(i) = Scalar(i + 1);
    } else {
        std::normal_distribution<double> normal(0.0, 1.0);
        for (Eigen::Index i = 0; i < K; ++i) v(i) = static_cast<Scalar>(normal(rng));
    }
    return project_to_feasible(v, state);
}

/// Block coordinate descent for one discriminant pair (theta_k, beta_k),
/// alternating an elastic-net beta solve (warm-started) with the exact
/// theta update. Stops on relative change of the full objective.
template <class Scalar>
DirectionFit<Scalar> fit_direction(const Matrix<Scalar>& X, const ClassIndicator<Scalar>& Y,
                                   const ScoringState<Scalar>& state, const SosFitConfig<Scalar>& config,
                                   const Vector<Scalar>& theta0)
{
    const Eigen::Index p = X.cols();
    config.omega.check_dim(p);
    SolverOptions<Scalar> opts = config.inner;
    opts.record_trace = false;
    if (!opts.alpha && (config.solver == SolverId::Ista || config.solver == SolverId::Fista)) {
        const Scalar L = lipschitz_bound(config.omega, X, config.gamma);
        opts.alpha = L > Scalar(0) ? Scalar(1) / L : Scalar(1);
    }
    std::optional<AdmmXSolver<Scalar>> admm;
    if (config.solver == SolverId::Admm) admm.emplace(X, config.gamma, config.omega, opts.mu);

    DirectionFit<Scalar> fit;
    Vector<Scalar> theta = theta0;
    Vector<Scalar> beta = Vector<Scalar>::Zero(p);
    Scalar F_prev = sos_objective(X, Y, theta, beta, config.gamma, config.lambda, config.omega);
    fit.objective_trace.push_back(F_prev);

    for (int t = 0; t < config.max_outer; ++t) {
        const Subproblem<Scalar> sub(X, linear_term(X, Y, theta), config.gamma, config.lambda, config.omega);
        auto res = solve(config.solver, sub, opts, &beta, admm ? &*admm : nullptr);
        fit.inner_iterations += res.iterations;
        fit.last_inner_converged = res.converged;
        // Keep the warm start when the inner solver failed to improve on it.
        if (objective_F(sub, res.beta) <= objective_F(sub, beta)) {
            beta = std::move(res.beta);
        } else {
            ++fit.rejected_inner;
        }
        if ((beta.array() == Scalar(0)).all()) {
            throw SolverError("trivial_direction",
                              "trivial direction: beta = 0 after the subproblem solve (lambda too large)");
        }
        fit.theta_solved = theta;
        fit.final_kkt = kkt_residual(sub, beta);
        fit.d_inf = sub.d().template lpNorm<Eigen::Infinity>();

        const Vector<Scalar> Xbeta = X * beta;
        auto upd = update_theta(Y, Xbeta, state);
        if (upd.degenerate) {
            throw SolverError("degenerate_theta", "degenerate theta update after a nonzero beta (||X beta|| = " +
                                                      std::to_string(double(Xbeta.norm())) + ")");
        }
        theta = std::move(upd.theta);
        const Scalar F = sos_objective(X, Y, theta, beta, config.gamma, config.lambda, config.omega);
        fit.objective_trace.push_back(F);
        fit.outer_iterations = t + 1;
        const Scalar rel = std::abs(F_prev - F) / std::max(std::abs(F_prev), std::numeric_limits<Scalar>::min());
        F_prev = F;
        if (rel <= config.outer_tol) {
            fit.converged = true;
            break;
        }
    }

    // Sign convention: first nonzero entry of beta positive, theta follows.
    for (Eigen::Index i = 0; i < p; ++i) {
        if (beta(i) != Scalar(0)) {
            if (beta(i) < Scalar(0)) {
                beta = -beta;
                theta = -theta;
                fit.theta_solved = -fit.theta_solved;
            }
            break;
        }
    }
    fit.theta = std::move(theta);
    fit.beta = std::move(beta);
    fit.final_objective = F_prev;
    return fit;
}

template <class Scalar>
struct SosModel
{
    Matrix<Scalar> B;         // p x q
    Matrix<Scalar> Theta;     // K x q
    Matrix<Scalar> centroids; // K x q
    Vector<Scalar> column_means;
    std::optional<Vector<Scalar>> column_scales;
    std::vector<std::string> label_vocab;
    SosFitConfig<Scalar> config;
    std::vector<DirectionFit<Scalar>> directions;
    double fit_seconds = 0.0;

    Eigen::Index p() const { return B.rows(); }
    Eigen::Index q() const { return B.cols(); }
    Eigen::Index K() const { return static_cast<Eigen::Index>(label_vocab.size()); }
};

/// Mean projected row per class.
template <class Scalar>
Matrix<Scalar> fit_centroids(const Matrix<Scalar>& Z, const std::vector<Eigen::Index>& class_of, Eigen::Index K)
{
    check_dims(static_cast<Eigen::Index>(class_of.size()) == Z.rows(), "label count does not match projected rows");
    Matrix<Scalar> C = Matrix<Scalar>::Zero(K, Z.cols());
    std::vector<Eigen::Index> counts(K, 0);
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        C.row(class_of[i]) += Z.row(i);
        ++counts[class_of[i]];
    }
    for (Eigen::Index k = 0; k < K; ++k) {
        if (counts[k] == 0) throw DataError("empty_class", "class " + std::to_string(k) + " has no observations");
        C.row(k) /= Scalar(counts[k]);
    }
    return C;
}

/// Sequentially fits q discriminant pairs, each D-conjugate to the previous
/// ones, then the class centroids in the projected space.
template <class Scalar>
SosModel<Scalar> fit_sos(const Dataset<Scalar>& ds, const SosFitConfig<Scalar>& config)
{
    const auto start = std::chrono::steady_clock::now();
    config.validate(ds.K());
    auto centered = center_data(ds.features, config.scale);
    const auto Y = build_indicator<Scalar>(ds.labels, ds.label_vocab);
    const int q = config.resolved_q(ds.K());

    SosModel<Scalar> model;
    model.B.resize(ds.p(), q);
    model.Theta.resize(ds.K(), q);
    model.label_vocab = ds.label_vocab;
    model.config = config;

    std::mt19937_64 rng(config.seed);
    auto state = ScoringState<Scalar>::initial(Y.D);
    for (int k = 0; k < q; ++k) {
        const Vector<Scalar> theta0 = initial_theta(state, config.theta_init, rng);
        DirectionFit<Scalar> fit;
        try {
            fit = fit_direction(centered.X, Y, state, config, theta0);
        } catch (const Error& e) {
            throw Error(e.kind(), e.code(), "direction " + std::to_string(k + 1) + ": " + e.what());
        }
        model.B.col(k) = fit.beta;
        model.Theta.col(k) = fit.theta;
        state.push(fit.theta);
        model.directions.push_back(std::move(fit));
    }
    model.centroids = fit_centroids<Scalar>(centered.X * model.B, Y.class_of, ds.K());
    model.column_means = std::move(centered.column_means);
    model.column_scales = std::move(centered.column_scales);
    model.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return model;
}

/// lambda_bar for the first direction of a dataset, using theta^0 from the
/// configured initialization.
template <class Scalar>
Scalar dataset_lambda_bar(const Dataset<Scalar>& ds, const SosFitConfig<Scalar>& config)
{
    const auto centered = center_data(ds.features, config.scale);
    const auto Y = build_indicator<Scalar>(ds.labels, ds.label_vocab);
    std::mt19937_64 rng(config.seed);
    const auto state = ScoringState<Scalar>::initial(Y.D);
    const Vector<Scalar> theta0 = initial_theta(state, config.theta_init, rng);
    const Subproblem<Scalar> sub(centered.X, linear_term(centered.X, Y, theta0), config.gamma, Scalar(0),
                                 config.omega);
    return compute_lambda_bar(sub);
}

} // namespace sos
