#include "sos/ennet.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sos;
using sos::testing::gaussian;
using sos::testing::x_for_A;

namespace {

const auto kIdentity = Penalty<double>::identity();

// A = I exactly: X = I / sqrt(2), gamma = 0.
MatrixXd identity_A_X(Eigen::Index p) { return MatrixXd::Identity(p, p) / std::sqrt(2.0); }

SolverOptions<double> tight(int max_iter = 20000, double tol = 1e-12)
{
    SolverOptions<double> o;
    o.max_iter = max_iter;
    o.tol = tol;
    return o;
}

const SolverId kAll[] = {SolverId::Ista, SolverId::IstaBt, SolverId::Fista, SolverId::FistaBt, SolverId::Admm};

} // namespace

TEST(SoftThreshold, Examples)
{
    EXPECT_EQ(soft_threshold(Eigen::Vector3d(2, -0.5, 1), 1.0), Eigen::Vector3d(1, 0, 0));
    const Eigen::Vector3d y(0.3, -7, 0);
    EXPECT_EQ(soft_threshold(y, 0.0), y);
    EXPECT_EQ(soft_threshold(Eigen::Vector2d(-3, 0.2), 0.5), Eigen::Vector2d(-2.5, 0));
}

TEST(GradF, WideXMatchesDenseProduct)
{
    std::mt19937_64 rng(22);
    for (Eigen::Index p : {511, 512, 513, 1500}) {
        const MatrixXd X = gaussian(7, p, rng);
        VectorXd u = gaussian(p, rng).cwiseAbs();
        const auto pen = Penalty<double>::diagonal(u);
        const Subproblem<double> sub(X, gaussian(p, rng), 0.3, 0.1, pen);
        const VectorXd beta = gaussian(p, rng);
        VectorXd g, Xv;
        sub.grad_into(beta, Xv, g);
        const VectorXd expect = sub.dense_A() * beta + sub.d();
        EXPECT_LT((g - expect).norm(), 1e-10 * expect.norm()) << p;
        EXPECT_LT((grad_f(sub, beta) - expect).norm(), 1e-10 * expect.norm()) << p;
    }
}

TEST(SoftThreshold, MinimizesProxObjectiveOnGrid)
{
    for (double yi : {-2.3, -0.4, 0.0, 0.05, 1.7}) {
        for (double tau : {0.0, 0.1, 0.5, 2.0}) {
            const double x = soft_threshold(Eigen::Matrix<double, 1, 1>(yi), tau)(0);
            double best = 0, best_val = 1e300;
            for (double g = -4; g <= 4; g += 1e-4) {
                const double v = tau * std::abs(g) + 0.5 * (g - yi) * (g - yi);
                if (v < best_val) best_val = v, best = g;
            }
            EXPECT_NEAR(x, best, 1e-4);
            EXPECT_EQ(x == 0.0, std::abs(yi) <= tau);
        }
    }
}

TEST(GradF, Examples)
{
    const MatrixXd X = MatrixXd::Identity(2, 2);
    const Subproblem<double> sub(X, Eigen::Vector2d(1, -1), 0.5, 0.0, kIdentity);
    EXPECT_EQ(grad_f(sub, VectorXd(Eigen::Vector2d(1, 2))), Eigen::Vector2d(4, 5));
    EXPECT_EQ(grad_f(sub, VectorXd(VectorXd::Zero(2))), sub.d());
}

TEST(GradF, MatchesFiniteDifferences)
{
    std::mt19937_64 rng(21);
    const MatrixXd X = gaussian(4, 5, rng);
    const auto pen = sos::testing::random_penalty(1, 5, rng);
    const Subproblem<double> sub(X, gaussian(5, rng), 0.7, 0.0, pen);
    const VectorXd b = gaussian(5, rng);
    const VectorXd g = grad_f(sub, b);
    const double h = 1e-6;
    for (int i = 0; i < 5; ++i) {
        VectorXd bp = b, bm = b;
        bp(i) += h;
        bm(i) -= h;
        const double fd = (smooth_f(sub, bp) - smooth_f(sub, bm)) / (2 * h);
        EXPECT_NEAR(fd, g(i), 1e-5 * std::max(1.0, std::abs(g(i))));
    }
}

TEST(ObjectiveF, Examples)
{
    std::mt19937_64 rng(22);
    const MatrixXd X = gaussian(3, 4, rng);
    const Subproblem<double> sub(X, gaussian(4, rng), 0.1, 0.3, kIdentity);
    EXPECT_EQ(objective_F(sub, VectorXd(VectorXd::Zero(4))), 0.0);

    const MatrixXd Xi = identity_A_X(2);
    const Subproblem<double> s2(Xi, Eigen::Vector2d(-1, 0), 0.0, 0.0, kIdentity);
    EXPECT_NEAR(objective_F(s2, VectorXd(Eigen::Vector2d(1, 0))), -0.5, 1e-15);
}

TEST(ObjectiveF, SolverOutputIsMinimal)
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index p = 2 + trial % 5;
        const MatrixXd X = gaussian(3, p, rng);
        const Subproblem<double> sub(X, gaussian(p, rng), 0.05, 0.4, kIdentity);
        const auto res = solve_fista(sub, tight());
        ASSERT_LT(kkt_residual(sub, res.beta), 1e-8);
        const double best = objective_F(sub, res.beta);
        for (int k = 0; k < 50; ++k) {
            EXPECT_GE(objective_F(sub, VectorXd(res.beta + 0.1 * gaussian(p, rng))), best - 1e-12);
        }
    }
}

TEST(SolveIsta, LargeLambdaGivesZero)
{
    std::mt19937_64 rng(24);
    const MatrixXd X = gaussian(5, 6, rng);
    const VectorXd d = gaussian(6, rng);
    const Subproblem<double> sub(X, d, 0.1, d.lpNorm<Eigen::Infinity>(), kIdentity);
    const auto res = solve_ista(sub, SolverOptions<double>{});
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.iterations, 1);
    EXPECT_TRUE((res.beta.array() == 0).all());
}

TEST(SolveIsta, ClosedFormSoftThreshold)
{
    const MatrixXd X = identity_A_X(2);
    const Subproblem<double> sub(X, Eigen::Vector2d(-2, 0), 0.0, 1.0, kIdentity);
    for (SolverId id : kAll) {
        const auto res = solve(id, sub, tight());
        EXPECT_LT((res.beta - Eigen::Vector2d(1, 0)).norm(), 1e-6) << solver_name(id);
        EXPECT_LT(kkt_residual(sub, res.beta), 1e-6) << solver_name(id);
    }
}

TEST(SolveIsta, TraceIsMonotone)
{
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index p = 2 + trial % 8;
        const MatrixXd X = gaussian(4, p, rng);
        const auto pen = sos::testing::random_penalty(trial % 4, p, rng);
        const Subproblem<double> sub(X, gaussian(p, rng), 0.1, 0.2, pen);
        for (SolverId id : {SolverId::Ista, SolverId::IstaBt}) {
            const auto res = solve(id, sub, tight(500));
            for (std::size_t t = 1; t < res.objective_trace.size(); ++t) {
                const double prev = res.objective_trace[t - 1];
                EXPECT_LE(res.objective_trace[t], prev + 1e-12 * std::max(1.0, std::abs(prev)));
            }
        }
    }
}

TEST(SolveIsta, DivergenceReported)
{
    std::mt19937_64 rng(26);
    const MatrixXd X = gaussian(4, 3, rng) * 10;
    const Subproblem<double> sub(X, gaussian(3, rng), 0.0, 0.0, kIdentity);
    auto o = tight(5000);
    o.alpha = 10.0;
    try {
        solve_ista(sub, o);
        FAIL() << "expected divergence";
    } catch (const SolverError& e) {
        EXPECT_EQ(e.code(), "divergence");
        EXPECT_NE(std::string(e.what()).find("iteration"), std::string::npos);
    }
}

TEST(BacktrackStep, StationarySmoothPartAcceptsImmediately)
{
    const MatrixXd X = MatrixXd::Zero(2, 3);
    const Subproblem<double> sub(X, VectorXd::Zero(3), 0.0, 0.6, kIdentity);
    const VectorXd x = Eigen::Vector3d(1, -0.2, 3);
    for (double L : {0.25, 1.0, 7.0}) {
        const auto r = backtrack_step(sub, x, L, 1.25);
        EXPECT_EQ(r.L, L);
        EXPECT_EQ(r.trials, 0);
        EXPECT_EQ(r.beta, soft_threshold(x, 0.6 / L));
    }
}

TEST(BacktrackStep, LargeLAcceptedAtOnce)
{
    std::mt19937_64 rng(27);
    const MatrixXd X = gaussian(3, 4, rng);
    const Subproblem<double> sub(X, gaussian(4, rng), 0.2, 0.1, kIdentity);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sub.dense_A(), Eigen::EigenvaluesOnly);
    const double normA = es.eigenvalues().maxCoeff();
    const auto r = backtrack_step(sub, VectorXd(gaussian(4, rng)), normA, 1.25);
    EXPECT_EQ(r.L, normA);
}

TEST(BacktrackStep, ScalarHandComputation)
{
    const MatrixXd X = identity_A_X(1);
    const Subproblem<double> sub(X, VectorXd::Zero(1), 0.0, 0.0, kIdentity);
    const VectorXd x = VectorXd::Ones(1);
    // f(x) = x^2 / 2, so the test holds exactly when L >= 1.
    double L = 0.25;
    while (L < 1.0) L *= 1.25;
    const auto r = backtrack_step(sub, x, 0.25, 1.25);
    EXPECT_DOUBLE_EQ(r.L, L);
    EXPECT_DOUBLE_EQ(r.beta(0), 1.0 - 1.0 / L);
}

TEST(SolveIstaBt, ConvergesAtTightTolerance)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const MatrixXd X = gaussian(6, 12, rng) / std::sqrt(6.0);
        const Subproblem<double> sub(X, gaussian(12, rng), 1e-2, 0.2, kIdentity);
        const auto res = solve(SolverId::IstaBt, sub, tight(200000, 1e-12));
        EXPECT_TRUE(res.converged);
        EXPECT_LT(kkt_residual(sub, res.beta), 1e-8);
        // L stays within a factor eta of the true curvature.
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(sub.dense_A(), Eigen::EigenvaluesOnly);
        EXPECT_LE(res.final_L, 1.25 * es.eigenvalues().maxCoeff() + 1e-12);
    }
}

TEST(SolveFista, FirstStepMatchesIsta)
{
    std::mt19937_64 rng(28);
    const MatrixXd X = gaussian(4, 5, rng);
    const Subproblem<double> sub(X, gaussian(5, rng), 0.1, 0.3, kIdentity);
    auto o = tight(1);
    const VectorXd b0 = gaussian(5, rng);
    EXPECT_EQ(solve_fista(sub, o, &b0).beta, solve_ista(sub, o, &b0).beta);
}

TEST(SolveFistaBt, AcceptanceTestExamples)
{
    // With a zero difference or L >= 2 ||A|| the quadratic form is nonnegative.
    std::mt19937_64 rng(29);
    const MatrixXd X = gaussian(3, 4, rng);
    const Subproblem<double> sub(X, gaussian(4, rng), 0.2, 0.0, kIdentity);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sub.dense_A(), Eigen::EigenvaluesOnly);
    const double L = 2 * es.eigenvalues().maxCoeff();
    for (int k = 0; k < 20; ++k) {
        const VectorXd delta = gaussian(4, rng);
        EXPECT_GE(0.5 * L * delta.squaredNorm() - sub.a_quadform(delta), -1e-10);
    }
    EXPECT_EQ(sub.a_quadform(VectorXd::Zero(4)), 0.0);

    auto o = tight();
    o.L0 = L;
    const auto res = solve_fista_bt(sub, o);
    EXPECT_EQ(res.final_L, L);
}

TEST(SolveFistaBt, AgreesWithIsta)
{
    std::mt19937_64 rng(30);
    for (int trial = 0; trial < 10; ++trial) {
        const MatrixXd X = gaussian(3, 4, rng);
        const Subproblem<double> sub(X, gaussian(4, rng), 0.5, 0.2, kIdentity);
        const auto a = solve(SolverId::Ista, sub, tight(100000, 1e-13));
        for (bool classical : {false, true}) {
            auto o = tight();
            o.classical_bt_test = classical;
            const auto b = solve(SolverId::FistaBt, sub, o);
            EXPECT_LT((a.beta - b.beta).norm(), 1e-4);
        }
    }
}

TEST(AdmmXUpdate, Examples)
{
    MatrixXd X1(1, 2);
    X1 << 1, 0;
    const Subproblem<double> s1(X1, VectorXd::Zero(2), 0.0, 0.0, kIdentity);
    EXPECT_LT((admm_x_update(s1, 1.0, VectorXd(Eigen::Vector2d(3, 2))) - Eigen::Vector2d(1, 2)).norm(), 1e-14);

    std::mt19937_64 rng(31);
    for (int kind = 0; kind < 4; ++kind) {
        const auto pen = sos::testing::random_penalty(kind, 5, rng);
        const MatrixXd Z = MatrixXd::Zero(2, 5);
        const Subproblem<double> s0(Z, VectorXd::Zero(5), 0.3, 0.0, pen);
        const VectorXd b = gaussian(5, rng);
        EXPECT_LT((admm_x_update(s0, 1.5, b) - m_inverse_apply(pen, 1.5, 0.3, b)).norm(), 1e-12);
    }
}

TEST(AdmmXUpdate, StructuredMatchesDense)
{
    std::mt19937_64 rng(32);
    for (int kind = 0; kind < 3; ++kind) {
        const MatrixXd X = gaussian(3, 7, rng);
        const auto pen = sos::testing::random_penalty(kind, 7, rng);
        const Subproblem<double> sub(X, VectorXd::Zero(7), 0.4, 0.0, pen);
        const AdmmXSolver<double> xs(X, 0.4, pen, 2.5);
        EXPECT_TRUE(xs.structured());
        const VectorXd b = gaussian(7, rng);
        MatrixXd K = sub.dense_A();
        K.diagonal().array() += 2.5;
        const VectorXd ref = K.llt().solve(b);
        EXPECT_LT((xs.solve(b) - ref).norm(), 1e-8 * ref.norm());
    }
}

TEST(AdmmXUpdate, WideXDiagonalPenaltyMatchesDense)
{
    std::mt19937_64 rng(33);
    for (int kind : {0, 1}) {
        const Eigen::Index p = 1200;
        const MatrixXd X = gaussian(5, p, rng);
        const auto pen = kind == 0 ? kIdentity : Penalty<double>::diagonal(VectorXd(gaussian(p, rng).cwiseAbs()));
        const Subproblem<double> sub(X, VectorXd::Zero(p), 0.4, 0.0, pen);
        const VectorXd b = gaussian(p, rng);
        MatrixXd K = sub.dense_A();
        K.diagonal().array() += 2.5;
        const VectorXd expect = K.llt().solve(b);
        EXPECT_LT((admm_x_update(sub, 2.5, b) - expect).norm(), 1e-10 * expect.norm());
    }
}

TEST(SolveAdmm, RidgeLimit)
{
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Index p = 2 + trial;
        const MatrixXd X = gaussian(3, p, rng);
        const Subproblem<double> sub(X, gaussian(p, rng), 0.5, 0.0, kIdentity);
        const VectorXd ref = -sub.dense_A().llt().solve(sub.d());
        const auto res = solve_admm(sub, tight(5000, 1e-10));
        EXPECT_LT((res.beta - ref).norm(), 1e-5 * std::max(1.0, ref.norm()));
    }
}

TEST(SolveAdmm, ZeroDataFixedPoint)
{
    std::mt19937_64 rng(34);
    const MatrixXd X = gaussian(3, 4, rng);
    const Subproblem<double> sub(X, VectorXd::Zero(4), 0.5, 0.1, kIdentity);
    const auto res = solve_admm(sub, SolverOptions<double>{});
    EXPECT_EQ(res.iterations, 1);
    EXPECT_TRUE(res.converged);
    EXPECT_TRUE((res.beta.array() == 0).all());
}

TEST(Solvers, AgreeOnRandomInstances)
{
    std::mt19937_64 rng(35);
    for (int trial = 0; trial < 10; ++trial) {
        const MatrixXd X = gaussian(3, 4, rng);
        const Subproblem<double> sub(X, gaussian(4, rng), 0.3, 0.25, kIdentity);
        const auto ref = solve(SolverId::Ista, sub, tight(200000, 1e-14));
        for (SolverId id : kAll) {
            const auto res = solve(id, sub, tight());
            EXPECT_LT((res.beta - ref.beta).norm(), 1e-4) << solver_name(id);
        }
    }
}

TEST(Solvers, LowRankAndDenseGiveSameIterates)
{
    std::mt19937_64 rng(36);
    const MatrixXd X = gaussian(4, 6, rng);
    const MatrixXd R = gaussian(6, 2, rng);
    const auto lr = Penalty<double>::low_rank(R);
    const auto dn = Penalty<double>::dense(R * R.transpose());
    const VectorXd d = gaussian(6, rng);
    const Subproblem<double> a(X, d, 0.3, 0.2, lr), b(X, d, 0.3, 0.2, dn);
    for (SolverId id : {SolverId::IstaBt, SolverId::FistaBt, SolverId::Admm}) {
        auto o = tight(50, 0.0);
        const auto ra = solve(id, a, o), rb = solve(id, b, o);
        ASSERT_EQ(ra.objective_trace.size(), rb.objective_trace.size());
        for (std::size_t t = 0; t < ra.objective_trace.size(); ++t) {
            EXPECT_NEAR(ra.objective_trace[t], rb.objective_trace[t], 1e-10 * std::max(1.0, std::abs(ra.objective_trace[t])));
        }
        EXPECT_LT((ra.beta - rb.beta).norm(), 1e-10 * std::max(1.0, ra.beta.norm()));
    }
}

TEST(KktResidual, Examples)
{
    const MatrixXd X = identity_A_X(2);
    const Subproblem<double> sub(X, Eigen::Vector2d(-2, 0), 0.0, 1.0, kIdentity);
    EXPECT_NEAR(kkt_residual(sub, VectorXd(Eigen::Vector2d(1, 0))), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(kkt_residual(sub, VectorXd(VectorXd::Zero(2))), 1.0);

    const Subproblem<double> small(X, Eigen::Vector2d(-0.5, 0.9), 0.0, 1.0, kIdentity);
    EXPECT_EQ(kkt_residual(small, VectorXd(VectorXd::Zero(2))), 0.0);
}

TEST(KktResidual, ConvergedResultsSatisfyBound)
{
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index p = 3 + trial;
        const MatrixXd X = gaussian(5, p, rng);
        const auto pen = sos::testing::random_penalty(trial % 4, p, rng);
        const Subproblem<double> sub(X, gaussian(p, rng), 0.1, 0.5, pen);
        for (SolverId id : kAll) {
            SolverOptions<double> o;
            o.max_iter = 20000;
            const auto res = solve(id, sub, o);
            if (!res.converged) continue;
            EXPECT_LE(kkt_residual(sub, res.beta), 100 * o.tol * (1 + sub.d().lpNorm<Eigen::Infinity>()))
                << solver_name(id);
        }
    }
}

TEST(SolverOptions, Validation)
{
    const MatrixXd X = MatrixXd::Ones(2, 2);
    const Subproblem<double> sub(X, VectorXd::Ones(2), 0.0, 0.0, kIdentity);
    SolverOptions<double> o;
    o.eta = 1.0;
    EXPECT_THROW(solve(SolverId::IstaBt, sub, o), UsageError);
    o = {};
    o.mu = 0.0;
    EXPECT_THROW(solve(SolverId::Admm, sub, o), UsageError);
    EXPECT_THROW(Subproblem<double>(X, VectorXd::Ones(3), 0.0, 0.0, kIdentity), DataError);
    EXPECT_THROW(Subproblem<double>(X, VectorXd::Ones(2), -1.0, 0.0, kIdentity), UsageError);
    EXPECT_EQ(parse_solver("sdad"), SolverId::Admm);
    EXPECT_THROW(parse_solver("lasso"), UsageError);
}
