#pragma once

#include "sos/penalty.hpp"
#include "sos/types.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace sos {

// Generalized elastic net subproblem
//
//   F(beta) = 1/2 beta^T A beta + d^T beta + lambda ||beta||_1,
//   A = 2 (X^T X + gamma Omega).
//
// A is never formed; every product goes through X and the penalty. The
// subproblem borrows X and the penalty, which must outlive it.
namespace detail {

// Products with a wide X in column blocks. The transposed product walks the
// blocks backwards, so a forward pass followed by a transposed one starts the
// second pass on columns the first just left in cache.
inline constexpr Eigen::Index kColumnBlock = 512;

template <class Scalar>
void forward_product(const Matrix<Scalar>& X, const Vector<Scalar>& v, Vector<Scalar>& out)
{
    const Eigen::Index p = X.cols();
    if (p <= kColumnBlock) {
        out.noalias() = X * v;
        return;
    }
    out.setZero(X.rows());
    for (Eigen::Index j = 0; j < p; j += kColumnBlock) {
        const Eigen::Index w = std::min(kColumnBlock, p - j);
        out.noalias() += X.middleCols(j, w) * v.segment(j, w);
    }
}

// out += scale * X^T u
template <class Scalar>
void backward_product_add(const Matrix<Scalar>& X, const Vector<Scalar>& u, Scalar scale, Vector<Scalar>& out)
{
    const Eigen::Index p = X.cols();
    if (p <= kColumnBlock) {
        out.noalias() += scale * (X.transpose() * u);
        return;
    }
    for (Eigen::Index j = ((p - 1) / kColumnBlock) * kColumnBlock; j >= 0; j -= kColumnBlock) {
        const Eigen::Index w = std::min(kColumnBlock, p - j);
        out.segment(j, w).noalias() += scale * (X.middleCols(j, w).transpose() * u);
    }
}

} // namespace detail

template <class Scalar>
class Subproblem
{
public:
    Subproblem(const Matrix<Scalar>& X, Vector<Scalar> d, Scalar gamma, Scalar lambda, const Penalty<Scalar>& omega)
        : X_(&X), d_(std::move(d)), gamma_(gamma), lambda_(lambda), omega_(&omega)
    {
        check_dims(d_.size() == X.cols(), "d has length " + std::to_string(d_.size()) + ", X has " +
                                              std::to_string(X.cols()) + " columns");
        omega.check_dim(X.cols());
        if (gamma < Scalar(0)) throw UsageError("invalid_gamma", "gamma must be nonnegative");
        if (lambda < Scalar(0)) throw UsageError("invalid_lambda", "lambda must be nonnegative");
    }
    // Holds references; temporaries would dangle.
    Subproblem(Matrix<Scalar>&&, Vector<Scalar>, Scalar, Scalar, const Penalty<Scalar>&) = delete;
    Subproblem(const Matrix<Scalar>&, Vector<Scalar>, Scalar, Scalar, Penalty<Scalar>&&) = delete;

    const Matrix<Scalar>& X() const { return *X_; }
    const Vector<Scalar>& d() const { return d_; }
    Scalar gamma() const { return gamma_; }
    Scalar lambda() const { return lambda_; }
    const Penalty<Scalar>& omega() const { return *omega_; }
    Eigen::Index p() const { return X_->cols(); }

    Subproblem with_lambda(Scalar lambda) const { return Subproblem(*X_, d_, gamma_, lambda, *omega_); }

    /// A v, matrix-free.
    Vector<Scalar> apply_A(const Vector<Scalar>& v) const
    {
        Vector<Scalar> Xv = (*X_) * v;
        Vector<Scalar> out = Scalar(2) * (X_->transpose() * Xv);
        if (gamma_ != Scalar(0)) out.noalias() += Scalar(2) * gamma_ * omega_matvec(*omega_, v);
        return out;
    }

    /// out = A beta + d, with Xv (length n) as scratch.
    void grad_into(const Vector<Scalar>& beta, Vector<Scalar>& Xv, Vector<Scalar>& out) const
    {
        detail::forward_product(*X_, beta, Xv);
        out = d_;
        detail::backward_product_add(*X_, Xv, Scalar(2), out);
        if (gamma_ != Scalar(0)) omega_matvec_add(*omega_, beta, Scalar(2) * gamma_, out);
    }

    /// v^T A v.
    Scalar a_quadform(const Vector<Scalar>& v) const
    {
        Scalar q = Scalar(2) * ((*X_) * v).squaredNorm();
        if (gamma_ != Scalar(0)) q += Scalar(2) * gamma_ * omega_quadform(*omega_, v);
        return q;
    }

    /// Dense A, for tests only.
    Matrix<Scalar> dense_A() const
    {
        return Scalar(2) * (X_->transpose() * (*X_) + gamma_ * omega_->to_dense(p()));
    }

private:
    const Matrix<Scalar>* X_;
    Vector<Scalar> d_;
    Scalar gamma_;
    Scalar lambda_;
    const Penalty<Scalar>* omega_;
};

enum class SolverId { Ista, IstaBt, Fista, FistaBt, Admm };

/// CLI names follow the published method names.
inline std::string solver_name(SolverId id)
{
    switch (id) {
    case SolverId::Ista: return "sdap";
    case SolverId::IstaBt: return "sdapbt";
    case SolverId::Fista: return "sdaap";
    case SolverId::FistaBt: return "sdaapbt";
    case SolverId::Admm: return "sdad";
    }
    return "unknown";
}

inline SolverId parse_solver(const std::string& name)
{
    for (auto id : {SolverId::Ista, SolverId::IstaBt, SolverId::Fista, SolverId::FistaBt, SolverId::Admm}) {
        if (solver_name(id) == name) return id;
    }
    throw UsageError("unknown_solver", "unknown solver '" + name + "'");
}

enum class StepKind { Constant, Backtracking };

template <class Scalar>
struct SolverOptions
{
    int max_iter = 1000;
    Scalar tol = Scalar(1e-5);
    StepKind step = StepKind::Constant;
    // Constant step; defaults to 1 / lipschitz_bound.
    std::optional<Scalar> alpha;
    Scalar L0 = Scalar(0.25);
    Scalar eta = Scalar(1.25);
    Scalar mu = Scalar(2.5);
    // FISTA-bt: use the descent-lemma acceptance test instead of the
    // (L/2) I - A quadratic-form test.
    bool classical_bt_test = false;
    bool record_trace = true;

    void validate() const
    {
        if (max_iter < 1) throw UsageError("invalid_option", "max_iter must be >= 1");
        if (!(tol >= Scalar(0))) throw UsageError("invalid_option", "tol must be nonnegative");
        if (alpha && !(*alpha > Scalar(0))) throw UsageError("invalid_option", "step alpha must be positive");
        if (!(L0 > Scalar(0))) throw UsageError("invalid_option", "L0 must be positive");
        if (!(eta > Scalar(1))) throw UsageError("invalid_option", "eta must exceed 1");
        if (!(mu > Scalar(0))) throw UsageError("invalid_option", "mu must be positive");
    }
};

template <class Scalar>
struct SolverResult
{
    Vector<Scalar> beta;
    int iterations = 0;
    // trace[t] = F(beta^t); trace[0] is the starting point. ADMM records the y-iterates.
    std::vector<Scalar> objective_trace;
    bool converged = false;
    SolverId solver_id = SolverId::Ista;
    // Final Lipschitz estimate for the backtracking variants.
    Scalar final_L = Scalar(0);
};

// ---------------------------------------------------------------------------

/// sign(y) max(|y| - tau, 0), entrywise.
template <class Derived>
auto soft_threshold(const Eigen::MatrixBase<Derived>& y, typename Derived::Scalar tau)
{
    using Scalar = typename Derived::Scalar;
    Vector<Scalar> out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const Scalar a = std::abs(y(i)) - tau;
        out(i) = a > Scalar(0) ? (y(i) > Scalar(0) ? a : -a) : Scalar(0);
    }
    return out;
}

template <class Derived, class Scalar>
void soft_threshold_into(const Eigen::MatrixBase<Derived>& y, Scalar tau, Vector<Scalar>& out)
{
    out.resize(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const Scalar yi = y(i);
        const Scalar a = std::abs(yi) - tau;
        out(i) = a > Scalar(0) ? (yi > Scalar(0) ? a : -a) : Scalar(0);
    }
}

template <class Scalar>
Vector<Scalar> grad_f(const Subproblem<Scalar>& sub, const Vector<Scalar>& beta)
{
    check_dims(beta.size() == sub.p(), "beta length does not match subproblem");
    Vector<Scalar> g = sub.apply_A(beta);
    g += sub.d();
    return g;
}

/// Smooth part 1/2 beta^T A beta + d^T beta.
template <class Scalar>
Scalar smooth_f(const Subproblem<Scalar>& sub, const Vector<Scalar>& beta)
{
    return Scalar(0.5) * sub.a_quadform(beta) + sub.d().dot(beta);
}

template <class Scalar>
Scalar objective_F(const Subproblem<Scalar>& sub, const Vector<Scalar>& beta)
{
    check_dims(beta.size() == sub.p(), "beta length does not match subproblem");
    return smooth_f(sub, beta) + sub.lambda() * beta.template lpNorm<1>();
}

/// Largest coordinatewise distance of -grad f(beta) from lambda * d|beta|.
template <class Scalar>
Scalar kkt_residual(const Subproblem<Scalar>& sub, const Vector<Scalar>& beta)
{
    const Vector<Scalar> g = grad_f(sub, beta);
    const Scalar lam = sub.lambda();
    Scalar worst = 0;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        Scalar r;
        if (beta(i) > Scalar(0)) r = std::abs(g(i) + lam);
        else if (beta(i) < Scalar(0)) r = std::abs(g(i) - lam);
        else r = std::max(std::abs(g(i)) - lam, Scalar(0));
        worst = std::max(worst, r);
    }
    return worst;
}

namespace detail {

template <class Scalar>
Scalar relative_change(const Vector<Scalar>& next, const Vector<Scalar>& prev)
{
    return (next - prev).norm() / std::max(Scalar(1), prev.norm());
}

// A small step alone does not certify optimality when L is large, so
// convergence also requires the KKT residual to be within the tol-scaled bound.
template <class Scalar>
bool kkt_certified(const Subproblem<Scalar>& sub, const Vector<Scalar>& beta, Scalar tol)
{
    return kkt_residual(sub, beta) <= Scalar(100) * tol * (Scalar(1) + sub.d().template lpNorm<Eigen::Infinity>());
}

template <class Scalar>
void check_finite(Scalar value, int iteration)
{
    if (!std::isfinite(value)) {
        throw SolverError("divergence", "non-finite objective at iteration " + std::to_string(iteration));
    }
}

template <class Scalar>
Scalar default_step(const Subproblem<Scalar>& sub, const SolverOptions<Scalar>& opts)
{
    if (opts.alpha) return *opts.alpha;
    const Scalar L = lipschitz_bound(sub.omega(), sub.X(), sub.gamma());
    return L > Scalar(0) ? Scalar(1) / L : Scalar(1);
}

template <class Scalar>
Vector<Scalar> start_point(const Subproblem<Scalar>& sub, const Vector<Scalar>* beta0)
{
    if (!beta0) return Vector<Scalar>::Zero(sub.p());
    check_dims(beta0->size() == sub.p(), "beta0 length does not match subproblem");
    return *beta0;
}

constexpr int kMaxBacktracks = 100;

} // namespace detail

template <class Scalar>
struct BacktrackResult
{
    Vector<Scalar> beta;
    Scalar L;
    int trials;
};

/// One backtracking proximal-gradient step from x. Grows L_prev by powers of
/// eta until
///   F(x+) <= f(x) + grad f(x)^T (x+ - x) + L/2 ||x+ - x||^2 + g(x+).
template <class Scalar>
BacktrackResult<Scalar> backtrack_step(const Subproblem<Scalar>& sub, const Vector<Scalar>& x, Scalar L_prev,
                                       Scalar eta)
{
    if (!(L_prev > Scalar(0))) throw UsageError("invalid_option", "L must be positive");
    if (!(eta > Scalar(1))) throw UsageError("invalid_option", "eta must exceed 1");
    const Vector<Scalar> g = grad_f(sub, x);
    Scalar L = L_prev;
    for (int k = 0; k <= detail::kMaxBacktracks; ++k) {
        Vector<Scalar> next = soft_threshold(x - g / L, sub.lambda() / L);
        const Vector<Scalar> step = next - x;
        // The l1 term appears on both sides and cancels. f is quadratic, so
        // f(x+) - f(x) - g^T s = s^T A s / 2 exactly; comparing that directly
        // avoids cancellation once steps are tiny.
        const Scalar curvature = sub.a_quadform(step);
        if (!std::isfinite(curvature)) break;
        if (curvature <= L * step.squaredNorm()) return {std::move(next), L, k};
        L *= eta;
    }
    throw SolverError("backtracking_failed", "backtracking failed after " +
                                                 std::to_string(detail::kMaxBacktracks) + " increases");
}

/// Proximal gradient (ISTA). Constant step 1/L~ or backtracking per opts.step.
template <class Scalar>
SolverResult<Scalar> solve_ista(const Subproblem<Scalar>& sub, const SolverOptions<Scalar>& opts,
                                const Vector<Scalar>* beta0 = nullptr)
{
    opts.validate();
    const bool bt = opts.step == StepKind::Backtracking;
    SolverResult<Scalar> res;
    res.solver_id = bt ? SolverId::IstaBt : SolverId::Ista;
    Vector<Scalar> beta = detail::start_point(sub, beta0);
    const Scalar alpha = bt ? Scalar(0) : detail::default_step(sub, opts);
    Scalar L = bt ? opts.L0 : Scalar(1) / alpha;
    if (opts.record_trace) res.objective_trace.push_back(objective_F(sub, beta));

    Vector<Scalar> next(sub.p()), g(sub.p()), Xv(sub.X().rows());
    for (int t = 0; t < opts.max_iter; ++t) {
        if (bt) {
            auto step = backtrack_step(sub, beta, L, opts.eta);
            next = std::move(step.beta);
            L = step.L;
        } else {
            sub.grad_into(beta, Xv, g);
            soft_threshold_into(beta - alpha * g, sub.lambda() * alpha, next);
        }
        if (!next.allFinite()) detail::check_finite(std::numeric_limits<Scalar>::infinity(), t + 1);
        if (opts.record_trace) {
            const Scalar F = objective_F(sub, next);
            detail::check_finite(F, t + 1);
            res.objective_trace.push_back(F);
        }
        const Scalar change = detail::relative_change(next, beta);
        beta.swap(next);
        res.iterations = t + 1;
        if (change <= opts.tol && detail::kkt_certified(sub, beta, opts.tol)) {
            res.converged = true;
            break;
        }
    }
    res.beta = std::move(beta);
    res.final_L = L;
    return res;
}

template <class Scalar>
SolverResult<Scalar> solve_fista_bt(const Subproblem<Scalar>& sub, const SolverOptions<Scalar>& opts,
                                    const Vector<Scalar>* beta0 = nullptr);

/// Accelerated proximal gradient with momentum t / (t + 3).
template <class Scalar>
SolverResult<Scalar> solve_fista(const Subproblem<Scalar>& sub, const SolverOptions<Scalar>& opts,
                                 const Vector<Scalar>* beta0 = nullptr)
{
    if (opts.step == StepKind::Backtracking) return solve_fista_bt(sub, opts, beta0);
    opts.validate();
    SolverResult<Scalar> res;
    res.solver_id = SolverId::Fista;
    Vector<Scalar> beta = detail::start_point(sub, beta0);
    Vector<Scalar> prev = beta;
    const Scalar alpha = detail::default_step(sub, opts);
    if (opts.record_trace) res.objective_trace.push_back(objective_F(sub, beta));

    Vector<Scalar> y(sub.p()), g(sub.p()), next(sub.p()), Xv(sub.X().rows());
    for (int t = 0; t < opts.max_iter; ++t) {
        const Scalar omega = Scalar(t) / Scalar(t + 3);
        y = beta + omega * (beta - prev);
        sub.grad_into(y, Xv, g);
        soft_threshold_into(y - alpha * g, sub.lambda() * alpha, next);
        if (!next.allFinite()) detail::check_finite(std::numeric_limits<Scalar>::infinity(), t + 1);
        if (opts.record_trace) {
            const Scalar F = objective_F(sub, next);
            detail::check_finite(F, t + 1);
            res.objective_trace.push_back(F);
        }
        const Scalar change = detail::relative_change(next, beta);
        prev.swap(beta);
        beta.swap(next);
        res.iterations = t + 1;
        if (change <= opts.tol && detail::kkt_certified(sub, beta, opts.tol)) {
            res.converged = true;
            break;
        }
    }
    res.beta = std::move(beta);
    res.final_L = Scalar(1) / alpha;
    return res;
}

/// Accelerated proximal gradient with backtracking. A trial step from the
/// extrapolated point y is accepted when
///   (beta+ - y)^T ((L/2) I - A) (beta+ - y) >= 0,
/// or, with classical_bt_test, when the descent lemma holds at beta+.
/// L never decreases within a run.
template <class Scalar>
SolverResult<Scalar> solve_fista_bt(const Subproblem<Scalar>& sub, const SolverOptions<Scalar>& opts,
                                    const Vector<Scalar>* beta0)
{
    opts.validate();
    SolverResult<Scalar> res;
    res.solver_id = SolverId::FistaBt;
    Vector<Scalar> beta = detail::start_point(sub, beta0);
    Vector<Scalar> prev = beta;
    Scalar L = opts.L0;
    if (opts.record_trace) res.objective_trace.push_back(objective_F(sub, beta));

    Vector<Scalar> y(sub.p()), g(sub.p()), next(sub.p()), delta(sub.p()), Xv(sub.X().rows());
    for (int t = 0; t < opts.max_iter; ++t) {
        const Scalar omega = Scalar(t) / Scalar(t + 3);
        y = beta + omega * (beta - prev);
        sub.grad_into(y, Xv, g);
        bool accepted = false;
        for (int k = 0; k <= detail::kMaxBacktracks; ++k) {
            soft_threshold_into(y - g / L, sub.lambda() / L, next);
            delta = next - y;
            const Scalar curvature = sub.a_quadform(delta);
            const Scalar budget = opts.classical_bt_test ? L * delta.squaredNorm()
                                                         : Scalar(0.5) * L * delta.squaredNorm();
            if (!std::isfinite(curvature)) break;
            if (curvature <= budget) {
                accepted = true;
                break;
            }
            L *= opts.eta;
        }
        if (!accepted) {
            throw SolverError("backtracking_failed", "backtracking failed at iteration " + std::to_string(t + 1));
        }
        if (opts.record_trace) {
            const Scalar F = objective_F(sub, next);
            detail::check_finite(F, t + 1);
            res.objective_trace.push_back(F);
        }
        const Scalar change = detail::relative_change(next, beta);
        prev.swap(beta);
        beta.swap(next);
        res.iterations = t + 1;
        if (change <= opts.tol && detail::kkt_certified(sub, beta, opts.tol)) {
            res.converged = true;
            break;
        }
    }
    res.beta = std::move(beta);
    res.final_L = L;
    return res;
}

// ---------------------------------------------------------------------------
// ADMM

/// Solves (mu I + A) x = b. For identity, diagonal and low-rank penalties this
/// uses the Sherman-Morrison-Woodbury identity
///   (M + 2 X^T X)^{-1} = M^{-1} - 2 M^{-1} X^T (I + 2 X M^{-1} X^T)^{-1} X M^{-1},
///   M = mu I + 2 gamma Omega,
/// so only an n x n system is factorized. Dense penalties get a Cholesky
/// factorization of the full p x p matrix.
template <class Scalar>
class AdmmXSolver
{
public:
    AdmmXSolver(const Matrix<Scalar>& X, Scalar gamma, const Penalty<Scalar>& omega, Scalar mu)
        : X_(&X), mu_(mu)
    {
        if (!(mu > Scalar(0))) throw UsageError("invalid_mu", "mu must be positive");
        omega.check_dim(X.cols());
        if (omega.is_dense()) {
            Matrix<Scalar> K = Scalar(2) * (X.transpose() * X);
            K.noalias() += Scalar(2) * gamma * omega.as_dense().Omega;
            K.diagonal().array() += mu;
            dense_.compute(K);
            if (dense_.info() != Eigen::Success) {
                throw SolverError("factorization_failed", "mu I + A is not positive definite");
            }
            structured_ = false;
            return;
        }
        structured_ = true;
        M_.emplace(omega, mu, gamma);
        Matrix<Scalar> S;
        if (gamma == Scalar(0) || !omega.is_low_rank()) {
            // M is diagonal: keep its inverse diagonal and stream X twice
            // per solve instead of storing M^{-1} X^T.
            M_->apply_into(Vector<Scalar>::Ones(X.cols()), m_inv_diag_);
            S = Scalar(2) * (X * m_inv_diag_.asDiagonal() * X.transpose());
        } else {
            W_ = M_->apply(X.transpose()); // p x n
            S = Scalar(2) * (X * W_);
        }
        S.diagonal().array() += Scalar(1);
        inner_.compute(S);
        if (inner_.info() != Eigen::Success) {
            throw SolverError("factorization_failed", "I + 2 X M^{-1} X^T is not positive definite");
        }
    }

    bool structured() const { return structured_; }

    Vector<Scalar> solve(const Vector<Scalar>& b) const
    {
        Vector<Scalar> x;
        solve_into(b, x);
        return x;
    }

    /// x = (mu I + A)^{-1} b; only length-n temporaries on the structured path.
    void solve_into(const Vector<Scalar>& b, Vector<Scalar>& x) const
    {
        check_dims(b.size() == X_->cols(), "right-hand side length does not match X");
        if (!structured_) {
            x = dense_.solve(b);
            return;
        }
        if (m_inv_diag_.size()) {
            x = m_inv_diag_.cwiseProduct(b);
            Vector<Scalar> t;
            detail::forward_product(*X_, x, t);
            const Vector<Scalar> s = inner_.solve(t);
            x = b;
            detail::backward_product_add(*X_, s, Scalar(-2), x);
            x.array() *= m_inv_diag_.array();
            return;
        }
        M_->apply_into(b, x);
        const Vector<Scalar> s = inner_.solve((*X_) * x);
        x.noalias() -= Scalar(2) * (W_ * s);
    }

private:
    const Matrix<Scalar>* X_;
    Scalar mu_;
    bool structured_ = true;
    std::optional<ShiftedPenaltySolver<Scalar>> M_;
    Vector<Scalar> m_inv_diag_;
    Matrix<Scalar> W_;
    Eigen::LLT<Matrix<Scalar>> inner_;
    Eigen::LLT<Matrix<Scalar>> dense_;
};

/// x solving (mu I + A) x = b, factorizing on the spot.
template <class Scalar>
Vector<Scalar> admm_x_update(const Subproblem<Scalar>& sub, Scalar mu, const Vector<Scalar>& b)
{
    return AdmmXSolver<Scalar>(sub.X(), sub.gamma(), sub.omega(), mu).solve(b);
}

/// ADMM on the split x = y. With the +d^T beta convention the x-update
/// right-hand side is -d + mu y - z. Returns the sparse y iterate.
///
/// `prebuilt`, when given, must have been constructed from the same X, gamma,
/// penalty and mu; it lets repeated solves share one factorization.
template <class Scalar>
SolverResult<Scalar> solve_admm(const Subproblem<Scalar>& sub, const SolverOptions<Scalar>& opts,
                                const Vector<Scalar>* beta0 = nullptr,
                                const AdmmXSolver<Scalar>* prebuilt = nullptr)
{
    opts.validate();
    const Scalar mu = opts.mu;
    std::optional<AdmmXSolver<Scalar>> own;
    if (!prebuilt) own.emplace(sub.X(), sub.gamma(), sub.omega(), mu);
    const AdmmXSolver<Scalar>& xsolver = prebuilt ? *prebuilt : *own;
    SolverResult<Scalar> res;
    res.solver_id = SolverId::Admm;
    Vector<Scalar> y = detail::start_point(sub, beta0);
    Vector<Scalar> x = y;
    Vector<Scalar> z = Vector<Scalar>::Zero(sub.p());
    if (opts.record_trace) res.objective_trace.push_back(objective_F(sub, y));

    Vector<Scalar> rhs(sub.p()), y_next(sub.p());
    for (int t = 0; t < opts.max_iter; ++t) {
        rhs = -sub.d() + mu * y - z;
        xsolver.solve_into(rhs, x);
        soft_threshold_into(x + z / mu, sub.lambda() / mu, y_next);
        z += mu * (x - y_next);
        if (!z.allFinite() || !y_next.allFinite()) {
            detail::check_finite(std::numeric_limits<Scalar>::infinity(), t + 1);
        }
        if (opts.record_trace) {
            const Scalar F = objective_F(sub, y_next);
            detail::check_finite(F, t + 1);
            res.objective_trace.push_back(F);
        }
        const Scalar primal = (x - y_next).norm();
        const Scalar dual = mu * (y_next - y).norm();
        y.swap(y_next);
        res.iterations = t + 1;
        if (primal <= opts.tol * std::max({Scalar(1), x.norm(), y.norm()}) &&
            dual <= opts.tol * std::max(Scalar(1), z.norm()) && detail::kkt_certified(sub, y, opts.tol)) {
            res.converged = true;
            break;
        }
    }
    res.beta = std::move(y);
    return res;
}

/// Dispatch by solver id. The step kind in opts is overridden by the id.
template <class Scalar>
SolverResult<Scalar> solve(SolverId id, const Subproblem<Scalar>& sub, SolverOptions<Scalar> opts,
                           const Vector<Scalar>* beta0 = nullptr,
                           const AdmmXSolver<Scalar>* admm_factor = nullptr)
{
    switch (id) {
    case SolverId::Ista:
        opts.step = StepKind::Constant;
        return solve_ista(sub, opts, beta0);
    case SolverId::IstaBt:
        opts.step = StepKind::Backtracking;
        return solve_ista(sub, opts, beta0);
    case SolverId::Fista:
        opts.step = StepKind::Constant;
        return solve_fista(sub, opts, beta0);
    case SolverId::FistaBt:
        return solve_fista_bt(sub, opts, beta0);
    case SolverId::Admm:
        return solve_admm(sub, opts, beta0, admm_factor);
    }
    throw UsageError("unknown_solver", "unknown solver id");
}

} // namespace sos
