#include "cls/environments.hpp"

#include "cls/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cls {

namespace {

// Substream tags; changing them changes every seeded result.
constexpr std::uint64_t kThetaTag = 0x7468657461ULL;
constexpr std::uint64_t kRewardTag = 0x726577617264ULL;
constexpr std::uint64_t kUsersTag = 0x7573657273ULL;

}  // namespace

double optimal_value(const RoundContext& ctx, const std::vector<double>& expected) {
    if (expected.size() != ctx.num_arms())
        throw MissingGroundTruth("optimal_value: expected rewards do not cover every arm");
    if (ctx.constraint().k() == 0) return 0.0;
    return select(expected, ctx.constraint()).objective;
}

void ClusteredEnvConfig::validate() const {
    if (d < 2) throw std::invalid_argument("clustered environment: d must be >= 2");
    if (!(angle > 0.0 && angle <= std::numbers::pi / 2.0))
        throw std::invalid_argument("clustered environment: angle must lie in (0, pi/2]");
    if (N < 1 || k < 1 || k > N) throw std::invalid_argument("clustered environment: need 1 <= k <= N");
    if (T < 1) throw std::invalid_argument("clustered environment: T must be >= 1");
}

Vector clustered_features(const ClusteredEnvConfig& cfg, std::size_t cluster) {
    if (cluster < 1 || cluster > cfg.d - 1)
        throw std::out_of_range("clustered_features: cluster must lie in [1, d - 1]");
    Vector x = Vector::Zero(static_cast<Eigen::Index>(cfg.d));
    x(0) = std::cos(cfg.angle);
    x(static_cast<Eigen::Index>(cluster)) = std::sin(cfg.angle);
    return x;
}

std::size_t cluster_of(const ClusteredEnvConfig& cfg, std::size_t arm) {
    const std::size_t clusters = cfg.d - 1;
    if (cfg.layout == ClusterLayout::Interleaved) return 1 + arm % clusters;
    return 1 + (arm * clusters) / cfg.N;
}

Vector random_unit_vector(std::size_t d, Rng& rng) {
    Vector v(static_cast<Eigen::Index>(d));
    double n = 0.0;
    do {
        for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
        n = v.norm();
    } while (n == 0.0);
    return v / n;
}

double clustered_reward(const Vector& theta_star, const Eigen::Ref<const Vector>& x, Rng& rng) {
    const double mean = std::clamp(theta_star.dot(x), -1.0, 1.0);
    return rng.uniform() < 0.5 * (1.0 + mean) ? 1.0 : -1.0;
}

ClusteredEnvironment::ClusteredEnvironment(const ClusteredEnvConfig& cfg, std::size_t trial)
    : ClusteredEnvironment(cfg, trial, [&] {
          Rng rng = Rng::stream(cfg.seed, {kThetaTag, trial});
          return random_unit_vector(cfg.d, rng);
      }()) {}

ClusteredEnvironment::ClusteredEnvironment(const ClusteredEnvConfig& cfg, std::size_t trial, Vector theta_star)
    : cfg_(cfg), trial_(trial), theta_(std::move(theta_star)) {
    cfg_.validate();
    if (theta_.size() != static_cast<Eigen::Index>(cfg_.d))
        throw std::invalid_argument("clustered environment: theta* has the wrong dimension");
    params_.d = cfg_.d;
    params_.N = cfg_.N;
    params_.k = cfg_.k;
    params_.T = cfg_.T;
    params_.R = 1.0;
    params_.S = std::max(1.0, theta_.norm());
    features_.resize(static_cast<Eigen::Index>(cfg_.d), static_cast<Eigen::Index>(cfg_.N));
    for (std::size_t i = 0; i < cfg_.N; ++i)
        features_.col(static_cast<Eigen::Index>(i)) = clustered_features(cfg_, cluster_of(cfg_, i));
}

RoundContext ClusteredEnvironment::round(std::size_t t) {
    return RoundContext(t, features_, TopK{cfg_.k});
}

double ClusteredEnvironment::reward(const RoundContext& ctx, std::size_t arm) const {
    Rng rng = Rng::stream(cfg_.seed, {kRewardTag, trial_, ctx.t(), arm});
    return clustered_reward(theta_, ctx.feature(arm), rng);
}

std::vector<double> ClusteredEnvironment::expected_rewards(const RoundContext& ctx) const {
    std::vector<double> out(ctx.num_arms());
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = theta_.dot(ctx.feature(a));
    return out;
}

void RewardTable::set(std::uint32_t user, std::uint32_t slot, double reward) { map_[key(user, slot)] = reward; }

double RewardTable::get(std::uint32_t user, std::uint32_t slot) const {
    auto it = map_.find(key(user, slot));
    return it == map_.end() ? 0.0 : it->second;
}

bool RewardTable::contains(std::uint32_t user, std::uint32_t slot) const { return map_.count(key(user, slot)) > 0; }

std::vector<RewardTable::Entry> RewardTable::entries() const {
    std::vector<Entry> out;
    out.reserve(map_.size());
    for (const auto& [k, r] : map_)
        out.push_back({static_cast<std::uint32_t>(k >> 32), static_cast<std::uint32_t>(k & 0xFFFFFFFFULL), r});
    std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) {
        return a.user != b.user ? a.user < b.user : a.slot < b.slot;
    });
    return out;
}

double promotion_reward(const RewardTable& table, std::size_t user, std::size_t promotion) {
    return table.get(static_cast<std::uint32_t>(user), static_cast<std::uint32_t>(promotion));
}

void PromotionEnvConfig::validate() const {
    if (k < 1) throw std::invalid_argument("promotion environment: k must be >= 1");
    if (resolved_users_per_round() < k)
        throw std::invalid_argument("promotion environment: fewer users per round than k");
    if (num_promotions < 1) throw std::invalid_argument("promotion environment: need at least one promotion");
    if (T < 1) throw std::invalid_argument("promotion environment: T must be >= 1");
}

PromotionEnvironment::PromotionEnvironment(const PromotionEnvConfig& cfg,
                                           std::shared_ptr<const UserFeatureTable> users,
                                           std::shared_ptr<const RewardTable> rewards, std::size_t trial)
    : cfg_(cfg), users_(std::move(users)), rewards_(std::move(rewards)), trial_(trial) {
    cfg_.validate();
    if (!users_ || users_->num_users() == 0) throw std::invalid_argument("promotion environment: empty user pool");
    if (!rewards_) throw std::invalid_argument("promotion environment: missing reward table");
    params_.d = users_->dim() * cfg_.num_promotions;
    params_.N = cfg_.resolved_users_per_round() * cfg_.num_promotions;
    params_.k = cfg_.k;
    params_.T = cfg_.T;
    params_.R = cfg_.R;
    params_.S = cfg_.S;
}

RoundContext PromotionEnvironment::round(std::size_t t) {
    const std::size_t n = cfg_.resolved_users_per_round();
    Rng rng = Rng::stream(cfg_.seed, {kUsersTag, trial_, t});
    sampled_.resize(n);
    Matrix base(static_cast<Eigen::Index>(users_->dim()), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        sampled_[i] = static_cast<std::size_t>(rng.index(users_->num_users()));
        base.col(static_cast<Eigen::Index>(i)) = users_->features.col(static_cast<Eigen::Index>(sampled_[i]));
    }
    current_t_ = t;
    return RoundContext(t, std::move(base), PromotionAssignment{n, cfg_.num_promotions, cfg_.k}, cfg_.num_promotions);
}

void PromotionEnvironment::require_current(const RoundContext& ctx) const {
    if (ctx.t() != current_t_ || ctx.num_base() != sampled_.size())
        throw std::logic_error("promotion environment: context is not the current round");
}

double PromotionEnvironment::reward(const RoundContext& ctx, std::size_t arm) const {
    require_current(ctx);
    return promotion_reward(*rewards_, sampled_[ctx.base_of(arm)], ctx.block_of(arm));
}

std::vector<double> PromotionEnvironment::expected_rewards(const RoundContext& ctx) const {
    require_current(ctx);
    std::vector<double> out(ctx.num_arms());
    for (std::size_t a = 0; a < out.size(); ++a)
        out[a] = promotion_reward(*rewards_, sampled_[ctx.base_of(a)], ctx.block_of(a));
    return out;
}

}  // namespace cls
