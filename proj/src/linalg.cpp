#include "cls/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cls {

namespace {

constexpr double kDiagonalTolerance = 1e-10;

}  // namespace

RidgeState::RidgeState(std::size_t d, double lambda, double update_weight)
    : lambda_(lambda), weight_(update_weight) {
    if (d < 1) throw std::invalid_argument("RidgeState: dimension must be >= 1");
    if (!(lambda > 0.0)) throw std::invalid_argument("RidgeState: lambda must be > 0");
    if (!(update_weight > 0.0)) throw std::invalid_argument("RidgeState: update weight must be > 0");
    const auto n = static_cast<Eigen::Index>(d);
    V_ = lambda * Matrix::Identity(n, n);
    b_ = Vector::Zero(n);
    L_ = std::sqrt(lambda) * Matrix::Identity(n, n);
}

void RidgeState::update(const Eigen::Ref<const Vector>& x, double r) {
    const Eigen::Index n = V_.rows();
    if (x.size() != n) throw std::invalid_argument("RidgeState::update: dimension mismatch");
    if (x.isZero(0.0)) return;

    V_.noalias() += weight_ * x * x.transpose();
    b_.noalias() += r * x;
    ++observations_;

    // Rank-one update of L L^T by u u^T, u = sqrt(w) x. Zero entries of u
    // leave the corresponding column untouched.
    Vector u = std::sqrt(weight_) * x;
    for (Eigen::Index k = 0; k < n; ++k) {
        if (u(k) == 0.0) continue;
        const double lkk = L_(k, k);
        const double rk = std::hypot(lkk, u(k));
        const double c = rk / lkk;
        const double s = u(k) / lkk;
        L_(k, k) = rk;
        const Eigen::Index tail = n - k - 1;
        if (tail > 0) {
            auto col = L_.col(k).tail(tail);
            auto rest = u.tail(tail);
            col = (col + s * rest) / c;
            rest = c * rest - s * col;
        }
    }

    ++update_count_;
    if (update_count_ >= kRefactorPeriod || !diagonal_consistent()) refactorize();
}

bool RidgeState::diagonal_consistent() const {
    for (Eigen::Index i = 0; i < V_.rows(); ++i) {
        const double reconstructed = L_.row(i).head(i + 1).squaredNorm();
        if (std::abs(reconstructed - V_(i, i)) > kDiagonalTolerance * V_(i, i)) return false;
    }
    return true;
}

Vector RidgeState::theta_hat() const {
    Vector y = L_.triangularView<Eigen::Lower>().solve(b_);
    L_.triangularView<Eigen::Lower>().transpose().solveInPlace(y);
    return y;
}

double RidgeState::width_squared(const Eigen::Ref<const Vector>& x) const {
    if (x.size() != V_.rows()) throw std::invalid_argument("RidgeState::width: dimension mismatch");
    const Vector y = L_.triangularView<Eigen::Lower>().solve(x);
    return std::max(y.squaredNorm(), 0.0);
}

double RidgeState::width(const Eigen::Ref<const Vector>& x) const { return std::sqrt(width_squared(x)); }

double RidgeState::norm(const Eigen::Ref<const Vector>& v) const {
    if (v.size() != V_.rows()) throw std::invalid_argument("RidgeState::norm: dimension mismatch");
    return std::sqrt(std::max(v.dot(V_ * v), 0.0));
}

Vector RidgeState::sample_posterior(const Vector& theta_hat, double v, Rng& rng) const {
    if (v < 0.0) throw std::invalid_argument("sample_posterior: scale must be >= 0");
    if (theta_hat.size() != V_.rows()) throw std::invalid_argument("sample_posterior: dimension mismatch");
    if (v == 0.0) return theta_hat;
    Vector eta(V_.rows());
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta(i) = rng.normal();
    L_.triangularView<Eigen::Lower>().transpose().solveInPlace(eta);
    return theta_hat + v * eta;
}

void RidgeState::refactorize() {
    Eigen::LLT<Matrix> llt(V_);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("RidgeState::refactorize: V is not positive definite");
    L_ = llt.matrixL();
    update_count_ = 0;
}

double RidgeState::factor_residual() const {
    return (L_ * L_.transpose() - V_).norm() / V_.norm();
}

ShadowState::ShadowState(std::size_t d, double lambda, std::size_t k)
    : state_(d, lambda, lambda / static_cast<double>(k == 0 ? 1 : k)) {
    if (k < 1) throw std::invalid_argument("ShadowState: k must be >= 1");
}

RidgeModel::RidgeModel(std::size_t d, std::size_t num_blocks, double lambda) {
    if (num_blocks < 1) throw std::invalid_argument("RidgeModel: need at least one block");
    blocks_.reserve(num_blocks);
    for (std::size_t j = 0; j < num_blocks; ++j) blocks_.emplace_back(d, lambda);
}

Vector RidgeModel::theta_hat() const {
    const auto d = static_cast<Eigen::Index>(dim());
    Vector out(static_cast<Eigen::Index>(ambient_dim()));
    for (std::size_t j = 0; j < blocks_.size(); ++j)
        out.segment(static_cast<Eigen::Index>(j) * d, d) = blocks_[j].theta_hat();
    return out;
}

double RidgeModel::norm(const Vector& v) const {
    if (v.size() != static_cast<Eigen::Index>(ambient_dim()))
        throw std::invalid_argument("RidgeModel::norm: dimension mismatch");
    const auto d = static_cast<Eigen::Index>(dim());
    double sq = 0.0;
    for (std::size_t j = 0; j < blocks_.size(); ++j) {
        const double nj = blocks_[j].norm(v.segment(static_cast<Eigen::Index>(j) * d, d));
        sq += nj * nj;
    }
    return std::sqrt(sq);
}

}  // namespace cls
