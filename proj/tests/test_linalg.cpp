#include "cls/linalg.hpp"
#include "cls/rng.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>

using namespace cls;

namespace {

Vector random_ball_vector(std::size_t d, Rng& rng) {
    Vector x(static_cast<Eigen::Index>(d));
    for (auto& v : x) v = rng.normal();
    return x / x.norm() * rng.uniform();
}

struct Dense {
    Matrix V;
    Vector b;
    Dense(std::size_t d, double lambda)
        : V(Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) * lambda),
          b(Vector::Zero(static_cast<Eigen::Index>(d))) {}
    void add(const Vector& x, double r) {
        V += x * x.transpose();
        b += r * x;
    }
};

double rel(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace

TEST(RidgeState, InitIsDiagonal) {
    RidgeState s(2, 4.0);
    EXPECT_TRUE(s.V().isApprox(Matrix::Identity(2, 2) * 4.0));
    EXPECT_TRUE(s.factor().isApprox(Matrix::Identity(2, 2) * 2.0));
    EXPECT_EQ(s.theta_hat(), Vector::Zero(2));
    RidgeState one(1, 1.0);
    EXPECT_DOUBLE_EQ(one.width(Vector::Ones(1)), 1.0);
}

TEST(RidgeState, SingleUpdate) {
    RidgeState s(2, 1.0);
    s.update(Vector::Unit(2, 0), 1.0);
    Matrix expect(2, 2);
    expect << 2, 0, 0, 1;
    EXPECT_EQ(s.V(), expect);
    EXPECT_DOUBLE_EQ(s.b()(0), 1.0);
    EXPECT_DOUBLE_EQ(s.b()(1), 0.0);
    EXPECT_DOUBLE_EQ(s.theta_hat()(0), 0.5);
    EXPECT_DOUBLE_EQ(s.theta_hat()(1), 0.0);
}

TEST(RidgeState, ZeroVectorIsNoOp) {
    RidgeState s(3, 1.5);
    Rng rng(1);
    s.update(random_ball_vector(3, rng), 0.3);
    const Matrix V = s.V(), L = s.factor();
    const Vector b = s.b();
    s.update(Vector::Zero(3), 5.0);
    EXPECT_EQ(s.V(), V);
    EXPECT_EQ(s.factor(), L);
    EXPECT_EQ(s.b(), b);
    EXPECT_DOUBLE_EQ(s.width(Vector::Zero(3)), 0.0);
}

TEST(RidgeState, FreshWidthIsScaledNorm) {
    RidgeState s(4, 2.5);
    Rng rng(2);
    const Vector x = random_ball_vector(4, rng);
    EXPECT_NEAR(s.width(x), x.norm() / std::sqrt(2.5), 1e-15);
}

TEST(RidgeState, FactorTracksDenseAccumulation) {
    Rng rng(3);
    RidgeState s(8, 0.7);
    Dense dense(8, 0.7);
    for (int i = 0; i < 500; ++i) {
        const Vector x = random_ball_vector(8, rng);
        s.update(x, rng.normal());
        dense.add(x, 0.0);
    }
    const Matrix LLt = s.factor() * s.factor().transpose();
    EXPECT_LE((LLt - dense.V).norm() / dense.V.norm(), 1e-8);
    EXPECT_LE((s.V() - dense.V).norm() / dense.V.norm(), 1e-12);
}

TEST(RidgeState, ThetaHatMatchesDenseLu) {
    Rng rng(4);
    RidgeState s(6, 1.3);
    Dense dense(6, 1.3);
    for (int i = 0; i < 50; ++i) {
        const Vector x = random_ball_vector(6, rng);
        const double r = rng.normal();
        s.update(x, r);
        dense.add(x, r);
    }
    const Vector oracle = dense.V.partialPivLu().solve(dense.b);
    EXPECT_LE((s.theta_hat() - oracle).norm() / oracle.norm(), 1e-10);
}

TEST(RidgeState, WidthMatchesDenseInverse) {
    Rng rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t d = 1 + rng.index(10);
        const double lambda = rng.uniform(0.1, 5.0);
        RidgeState s(d, lambda);
        Dense dense(d, lambda);
        const int n = static_cast<int>(rng.index(200));
        for (int i = 0; i < n; ++i) {
            const Vector x = random_ball_vector(d, rng);
            s.update(x, 0.0);
            dense.add(x, 0.0);
        }
        const Matrix inv = dense.V.inverse();
        const Vector x = random_ball_vector(d, rng);
        ASSERT_LE(rel(s.width(x), std::sqrt(x.dot(inv * x))), 1e-9);
        ASSERT_LE(rel(s.norm(x), std::sqrt(x.dot(dense.V * x))), 1e-9);
    }
}

TEST(RidgeState, WidthIsNonincreasing) {
    Rng rng(6);
    RidgeState s(5, 0.5);
    const Vector probe = random_ball_vector(5, rng);
    double prev = s.width(probe);
    for (int i = 0; i < 300; ++i) {
        s.update(random_ball_vector(5, rng), 0.0);
        const double w = s.width(probe);
        ASSERT_LE(w, prev * (1.0 + 1e-12));
        prev = w;
    }
}

TEST(RidgeState, RefactorizeAfterManyUpdates) {
    Rng rng(7);
    RidgeState s(6, 1.0);
    for (int i = 0; i < 10000; ++i) s.update(random_ball_vector(6, rng), rng.normal());
    const Vector x = random_ball_vector(6, rng);
    const double before = s.width(x);
    s.refactorize();
    EXPECT_LE(rel(s.width(x), before), 1e-9);
    EXPECT_EQ(s.update_count(), 0u);
    EXPECT_EQ(s.observation_count(), 10000u);
}

TEST(RidgeState, RefactorizeFreshStateIsExact) {
    RidgeState s(3, 2.0);
    const Matrix L = s.factor();
    s.refactorize();
    EXPECT_EQ(s.factor(), L);
}

TEST(RidgeState, RefactorizeRepairsDrift) {
    Rng rng(8);
    RidgeState s(4, 1.0);
    for (int i = 0; i < 20; ++i) s.update(random_ball_vector(4, rng), 0.0);
    s.mutable_factor()(2, 1) += 1e-3;
    EXPECT_GT(s.factor_residual(), 1e-6);
    s.refactorize();
    EXPECT_LE(s.factor_residual(), 1e-12);
}

TEST(RidgeState, SamplePosteriorBasics) {
    Rng rng(9);
    RidgeState s(3, 1.0);
    for (int i = 0; i < 10; ++i) s.update(random_ball_vector(3, rng), rng.normal());
    const Vector th = s.theta_hat();
    Rng r1(10);
    EXPECT_EQ(s.sample_posterior(th, 0.0, r1), th);
    Rng a(11), b(11);
    EXPECT_EQ(s.sample_posterior(th, 1.0, a), s.sample_posterior(th, 1.0, b));
}

TEST(RidgeState, SamplerCovarianceMatchesScaledInverse) {
    Rng rng(12);
    RidgeState s(3, 1.0);
    Dense dense(3, 1.0);
    for (int i = 0; i < 30; ++i) {
        const Vector x = random_ball_vector(3, rng);
        s.update(x, 0.0);
        dense.add(x, 0.0);
    }
    const double v = 1.7;
    const Vector th = Vector::Zero(3);
    const int n = 100000;
    Matrix cov = Matrix::Zero(3, 3);
    Vector mean = Vector::Zero(3);
    for (int i = 0; i < n; ++i) {
        const Vector z = s.sample_posterior(th, v, rng);
        mean += z;
        cov += z * z.transpose();
    }
    mean /= n;
    cov = cov / n - mean * mean.transpose();
    const Matrix oracle = v * v * dense.V.inverse();
    const double tol = 5e-2 * v * v * dense.V.inverse().cwiseAbs().maxCoeff();
    EXPECT_LE((cov - oracle).cwiseAbs().maxCoeff(), tol);
}

TEST(ShadowState, DominatesOrdinaryWidthWhenLambdaAtMostK) {
    Rng rng(13);
    for (int rep = 0; rep < 100; ++rep) {
        const std::size_t d = 1 + rng.index(5);
        const std::size_t k = 1 + rng.index(6);
        const double lambda = rng.uniform(0.05, static_cast<double>(k));
        RidgeState ordinary(d, lambda);
        ShadowState shadow(d, lambda, k);
        Matrix dense = Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) * lambda;
        for (int i = 0; i < 40; ++i) {
            const Vector x = random_ball_vector(d, rng);
            ordinary.update(x, 0.0);
            shadow.update(x);
            dense += lambda / static_cast<double>(k) * x * x.transpose();
        }
        const Vector x = random_ball_vector(d, rng);
        ASSERT_GE(shadow.width(x), ordinary.width(x) * (1.0 - 1e-12));
        ASSERT_LE(rel(shadow.width_squared(x), x.dot(dense.inverse() * x)), 1e-9);
    }
}

TEST(RidgeModel, BlockDiagonalMatchesDenseEmbedding) {
    Rng rng(14);
    const std::size_t d = 3, M = 2;
    RidgeModel model(d, M, 0.8);
    Matrix dense = Matrix::Identity(6, 6) * 0.8;
    Vector b = Vector::Zero(6);
    for (int i = 0; i < 25; ++i) {
        const std::size_t block = rng.index(M);
        const Vector x = random_ball_vector(d, rng);
        const double r = rng.normal();
        model.update(block, x, r);
        Vector e = Vector::Zero(6);
        e.segment(static_cast<Eigen::Index>(block * d), 3) = x;
        dense += e * e.transpose();
        b += r * e;
    }
    EXPECT_LE(dense.block(0, 3, 3, 3).norm(), 0.0);
    EXPECT_TRUE(model.block(0).V().isApprox(dense.block(0, 0, 3, 3), 1e-14));
    EXPECT_TRUE(model.block(1).V().isApprox(dense.block(3, 3, 3, 3), 1e-14));
    const Vector oracle = dense.ldlt().solve(b);
    EXPECT_LE((model.theta_hat() - oracle).norm() / oracle.norm(), 1e-10);
    const Vector v = Vector::Random(6);
    EXPECT_LE(rel(model.norm(v), std::sqrt(v.dot(dense * v))), 1e-10);
}
