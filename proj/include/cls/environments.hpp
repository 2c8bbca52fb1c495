#pragma once

#include "cls/core.hpp"
#include "cls/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <unordered_map>
#include <vector>

namespace cls {

/// A synthetic semi-bandit with known expected rewards.
///
/// One instance is one trial: it owns its randomness, keyed by the trial
/// index, so rewards depend only on (trial, round, arm) and every policy run
/// on the same trial faces the same realizations.
class Environment {
public:
    virtual ~Environment() = default;

    /// Ambient dimensions and constants; `d` is the embedded dimension.
    virtual const ProblemParams& params() const = 0;
    virtual std::size_t base_dim() const = 0;
    virtual std::size_t num_blocks() const = 0;

    virtual RoundContext round(std::size_t t) = 0;
    /// Realized reward of `arm` in the round described by `ctx`.
    virtual double reward(const RoundContext& ctx, std::size_t arm) const = 0;
    /// True expected reward of every arm of `ctx`.
    virtual std::vector<double> expected_rewards(const RoundContext& ctx) const = 0;
    /// Ambient-dimension true parameter when the environment has one.
    virtual std::optional<Vector> theta_star() const { return std::nullopt; }
};

/// Value of the best feasible super arm under the given expected rewards.
double optimal_value(const RoundContext& ctx, const std::vector<double>& expected);

// ---------------------------------------------------------------------------
// Clustered environment

enum class ClusterLayout {
    Contiguous,   ///< arm i in cluster 1 + floor(i (d - 1) / N)
    Interleaved,  ///< arm i in cluster 1 + (i mod (d - 1))
};

struct ClusteredEnvConfig {
    std::size_t d = 11;
    std::size_t N = 2000;
    std::size_t k = 100;
    std::size_t T = 10;
    double angle = std::numbers::pi / 2.0;
    ClusterLayout layout = ClusterLayout::Contiguous;
    std::uint64_t seed = 0;

    void validate() const;
};

/// e_0 cos(angle) + e_j sin(angle), for cluster j in [1, d - 1].
Vector clustered_features(const ClusteredEnvConfig& cfg, std::size_t cluster);
/// Cluster (in [1, d - 1]) of arm i.
std::size_t cluster_of(const ClusteredEnvConfig& cfg, std::size_t arm);
/// Uniform draw on the unit sphere in R^d.
Vector random_unit_vector(std::size_t d, Rng& rng);
/// +1 with probability (1 + theta*^T x) / 2, else -1.
double clustered_reward(const Vector& theta_star, const Eigen::Ref<const Vector>& x, Rng& rng);

class ClusteredEnvironment final : public Environment {
public:
    ClusteredEnvironment(const ClusteredEnvConfig& cfg, std::size_t trial);
    /// Fixed true parameter, for tests.
    ClusteredEnvironment(const ClusteredEnvConfig& cfg, std::size_t trial, Vector theta_star);

    const ProblemParams& params() const override { return params_; }
    std::size_t base_dim() const override { return cfg_.d; }
    std::size_t num_blocks() const override { return 1; }
    RoundContext round(std::size_t t) override;
    double reward(const RoundContext& ctx, std::size_t arm) const override;
    std::vector<double> expected_rewards(const RoundContext& ctx) const override;
    std::optional<Vector> theta_star() const override { return theta_; }

    const ClusteredEnvConfig& config() const { return cfg_; }

private:
    ClusteredEnvConfig cfg_;
    std::size_t trial_;
    ProblemParams params_;
    Vector theta_;
    Matrix features_;
};

// ---------------------------------------------------------------------------
// Promotion environment

/// User feature vectors, one column per user.
struct UserFeatureTable {
    Matrix features;

    std::size_t num_users() const { return static_cast<std::size_t>(features.cols()); }
    std::size_t dim() const { return static_cast<std::size_t>(features.rows()); }
};

/// Sparse (user, promotion slot) -> reward map; absent pairs are 0.
class RewardTable {
public:
    struct Entry {
        std::uint32_t user;
        std::uint32_t slot;
        double reward;
    };

    void set(std::uint32_t user, std::uint32_t slot, double reward);
    double get(std::uint32_t user, std::uint32_t slot) const;
    bool contains(std::uint32_t user, std::uint32_t slot) const;
    std::size_t size() const { return map_.size(); }
    /// Entries sorted by (user, slot).
    std::vector<Entry> entries() const;

private:
    static std::uint64_t key(std::uint32_t user, std::uint32_t slot) {
        return (static_cast<std::uint64_t>(user) << 32) | slot;
    }
    std::unordered_map<std::uint64_t, double> map_;
};

double promotion_reward(const RewardTable& table, std::size_t user, std::size_t promotion);

struct PromotionEnvConfig {
    std::size_t k = 20;
    std::size_t users_per_round = 0;  ///< 0 means 100 k
    std::size_t num_promotions = 10;
    std::size_t T = 20;
    double R = 2.5;
    double S = 1.0;
    std::uint64_t seed = 0;

    std::size_t resolved_users_per_round() const { return users_per_round == 0 ? 100 * k : users_per_round; }
    void validate() const;
};

/// Each round samples users uniformly with replacement from the pool and
/// offers every (user slot, promotion) pair as a block-embedded arm.
class PromotionEnvironment final : public Environment {
public:
    PromotionEnvironment(const PromotionEnvConfig& cfg, std::shared_ptr<const UserFeatureTable> users,
                         std::shared_ptr<const RewardTable> rewards, std::size_t trial);

    const ProblemParams& params() const override { return params_; }
    std::size_t base_dim() const override { return users_->dim(); }
    std::size_t num_blocks() const override { return cfg_.num_promotions; }
    RoundContext round(std::size_t t) override;
    double reward(const RoundContext& ctx, std::size_t arm) const override;
    std::vector<double> expected_rewards(const RoundContext& ctx) const override;

    /// Pool indices of the users sampled for round t (after round(t)).
    const std::vector<std::size_t>& sampled_users() const { return sampled_; }

private:
    void require_current(const RoundContext& ctx) const;

    PromotionEnvConfig cfg_;
    std::shared_ptr<const UserFeatureTable> users_;
    std::shared_ptr<const RewardTable> rewards_;
    std::size_t trial_;
    ProblemParams params_;
    std::size_t current_t_ = 0;
    std::vector<std::size_t> sampled_;
};

}  // namespace cls
