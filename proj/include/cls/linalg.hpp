#pragma once

#include "cls/core.hpp"
#include "cls/rng.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <vector>

namespace cls {

/// Incremental ridge-regression sufficient statistics.
///
/// Maintains V = lambda I + w * sum x x^T, b = sum r x and a lower Cholesky
/// factor L with L L^T = V. The factor is updated in O(d^2) per observation
/// and rebuilt from V every kRefactorPeriod updates, or earlier when the
/// diagonal residual check detects drift.
class RidgeState {
public:
    static constexpr std::size_t kRefactorPeriod = 256;

    /// `update_weight` scales every x x^T term (1 for the ordinary statistics).
    RidgeState(std::size_t d, double lambda, double update_weight = 1.0);

    std::size_t dim() const { return static_cast<std::size_t>(V_.rows()); }
    double lambda() const { return lambda_; }
    double update_weight() const { return weight_; }
    std::size_t update_count() const { return update_count_; }
    std::size_t observation_count() const { return observations_; }

    const Matrix& V() const { return V_; }
    const Vector& b() const { return b_; }
    const Matrix& factor() const { return L_; }
    /// Direct access to the factor, for fault-injection tests.
    Matrix& mutable_factor() { return L_; }

    /// V += w x x^T and b += r x. A zero vector leaves the state untouched.
    void update(const Eigen::Ref<const Vector>& x, double r);

    /// Solution of V theta = b.
    Vector theta_hat() const;

    /// sqrt(x^T V^-1 x), with the quadratic form clamped at zero.
    double width(const Eigen::Ref<const Vector>& x) const;
    double width_squared(const Eigen::Ref<const Vector>& x) const;

    /// ||v||_V = sqrt(v^T V v).
    double norm(const Eigen::Ref<const Vector>& v) const;

    /// theta_hat + v * L^-T eta with eta standard normal from `rng`, a draw
    /// from N(theta_hat, v^2 V^-1). Returns `theta_hat` exactly when v == 0.
    Vector sample_posterior(const Vector& theta_hat, double v, Rng& rng) const;

    /// Rebuilds the factor from V. Throws std::runtime_error if V has lost
    /// positive definiteness.
    void refactorize();

    /// ||L L^T - V||_F / ||V||_F.
    double factor_residual() const;

private:
    bool diagonal_consistent() const;

    double lambda_;
    double weight_;
    Matrix V_;
    Vector b_;
    Matrix L_;
    std::size_t update_count_ = 0;
    std::size_t observations_ = 0;
};

/// Statistics under the scaled matrix lambda I + (lambda / k) sum x x^T used
/// by the potential bound for lambda <= k.
class ShadowState {
public:
    ShadowState(std::size_t d, double lambda, std::size_t k);

    void update(const Eigen::Ref<const Vector>& x) { state_.update(x, 0.0); }
    double width(const Eigen::Ref<const Vector>& x) const { return state_.width(x); }
    double width_squared(const Eigen::Ref<const Vector>& x) const { return state_.width_squared(x); }
    const Matrix& V() const { return state_.V(); }

private:
    RidgeState state_;
};

/// Block-diagonal ridge statistics: one RidgeState per block of an embedded
/// (d * M)-dimensional feature space. With a single block this is a plain
/// RidgeState.
class RidgeModel {
public:
    RidgeModel(std::size_t d, std::size_t num_blocks, double lambda);

    std::size_t dim() const { return blocks_.front().dim(); }
    std::size_t num_blocks() const { return blocks_.size(); }
    std::size_t ambient_dim() const { return dim() * num_blocks(); }
    double lambda() const { return blocks_.front().lambda(); }

    const RidgeState& block(std::size_t j) const { return blocks_.at(j); }
    RidgeState& block(std::size_t j) { return blocks_.at(j); }

    void update(std::size_t block, const Eigen::Ref<const Vector>& x, double r) { blocks_.at(block).update(x, r); }

    /// Concatenated per-block estimates (ambient dimension).
    Vector theta_hat() const;
    /// ||v||_V for an ambient-dimension vector v.
    double norm(const Vector& v) const;

private:
    std::vector<RidgeState> blocks_;
};

}  // namespace cls
