#include "cls/core.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cls {

void ProblemParams::validate() const {
    if (d < 1) throw std::invalid_argument("ProblemParams: d must be >= 1");
    if (k < 1 || k > N) throw std::invalid_argument("ProblemParams: need 1 <= k <= N");
    if (T < 1) throw std::invalid_argument("ProblemParams: T must be >= 1");
    if (!(R >= 0.0)) throw std::invalid_argument("ProblemParams: R must be >= 0");
    if (!(S > 0.0)) throw std::invalid_argument("ProblemParams: S must be > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("ProblemParams: delta must lie in (0, 1)");
}

SuperArm::SuperArm(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
    for (std::size_t i = 1; i < indices_.size(); ++i) {
        if (indices_[i - 1] >= indices_[i])
            throw std::invalid_argument("SuperArm: indices must be strictly increasing");
    }
}

bool SuperArm::contains(std::size_t arm) const {
    return std::binary_search(indices_.begin(), indices_.end(), arm);
}

ConstraintFamily::ConstraintFamily(TopK family) : kind_(family) {}

ConstraintFamily::ConstraintFamily(PromotionAssignment family) : kind_(family) {
    if (family.num_users < 1 || family.num_promotions < 1 || family.k < 1)
        throw std::invalid_argument("PromotionAssignment: sizes must be positive");
    if (family.k > family.num_users)
        throw std::invalid_argument("PromotionAssignment: k exceeds the number of users");
}

std::size_t ConstraintFamily::k() const {
    return std::visit([](const auto& f) { return f.k; }, kind_);
}

bool ConstraintFamily::contains(const SuperArm& arm, std::size_t num_arms) const {
    const auto& idx = arm.indices();
    if (!idx.empty() && idx.back() >= num_arms) return false;
    if (const auto* topk = std::get_if<TopK>(&kind_)) return idx.size() == topk->k;

    const auto& promo = std::get<PromotionAssignment>(kind_);
    if (num_arms != promo.num_users * promo.num_promotions) return false;
    if (idx.size() != promo.k) return false;
    std::vector<char> used(promo.num_users, 0);
    for (std::size_t a : idx) {
        char& flag = used[promo.user_of(a)];
        if (flag) return false;
        flag = 1;
    }
    return true;
}

std::size_t enforce_unit_ball(Matrix& columns) {
    constexpr double slack = 1e-12;
    std::size_t renormalized = 0;
    for (Eigen::Index j = 0; j < columns.cols(); ++j) {
        const double norm = columns.col(j).norm();
        if (!std::isfinite(norm) || norm > 1.0 + slack)
            throw std::invalid_argument("feature vector " + std::to_string(j) +
                                        " violates the unit-norm bound (norm " + std::to_string(norm) + ")");
        if (norm > 1.0) {
            columns.col(j) /= norm;
            ++renormalized;
        }
    }
    return renormalized;
}

RoundContext::RoundContext(std::size_t t, Matrix base, ConstraintFamily constraint, std::size_t num_blocks)
    : t_(t), base_(std::move(base)), constraint_(std::move(constraint)), num_blocks_(num_blocks) {
    if (num_blocks_ < 1) throw std::invalid_argument("RoundContext: num_blocks must be >= 1");
    if (base_.rows() < 1 || base_.cols() < 1) throw std::invalid_argument("RoundContext: empty feature set");
    enforce_unit_ball(base_);
    if (const auto* promo = std::get_if<PromotionAssignment>(&constraint_.kind())) {
        if (promo->num_users != num_base() || promo->num_promotions != num_blocks_)
            throw std::invalid_argument("RoundContext: promotion family does not match the block layout");
    } else if (constraint_.k() > num_arms()) {
        throw std::invalid_argument("RoundContext: k exceeds the number of arms");
    }
}

Vector RoundContext::embedded(std::size_t arm) const {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(ambient_dim()));
    out.segment(static_cast<Eigen::Index>(block_of(arm) * dim()), static_cast<Eigen::Index>(dim())) = feature(arm);
    return out;
}

void TrajectoryLog::append(RoundRecord record) {
    const double round_total = std::accumulate(record.rewards.begin(), record.rewards.end(), 0.0);
    record.cumulative_reward = cumulative_reward() + round_total;
    rounds_.push_back(std::move(record));
}

bool TrajectoryLog::has_ground_truth() const {
    return std::all_of(rounds_.begin(), rounds_.end(), [](const RoundRecord& r) {
        return r.optimal_value.has_value() && r.expected.size() == r.chosen.size();
    });
}

namespace {

void require_ground_truth(const TrajectoryLog& log) {
    if (!log.has_ground_truth())
        throw MissingGroundTruth("trajectory lacks true expected rewards or optimal values");
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

std::vector<double> pseudo_regret_increments(const TrajectoryLog& log) {
    require_ground_truth(log);
    std::vector<double> out;
    out.reserve(log.size());
    for (const auto& r : log.rounds()) out.push_back(*r.optimal_value - sum(r.expected));
    return out;
}

double pseudo_regret(const TrajectoryLog& log) {
    const auto inc = pseudo_regret_increments(log);
    return std::accumulate(inc.begin(), inc.end(), 0.0);
}

RegretDecomposition regret_decomposition(const TrajectoryLog& log) {
    require_ground_truth(log);
    RegretDecomposition out;
    for (const auto& r : log.rounds()) {
        if (r.scores.size() != r.chosen.size() || r.estimates.size() != r.chosen.size())
            throw MissingGroundTruth("trajectory lacks per-arm scores or point predictions");
        out.optimality += *r.optimal_value - sum(r.scores);
        for (std::size_t i = 0; i < r.chosen.size(); ++i) {
            out.algorithm += r.scores[i] - r.estimates[i];
            out.estimation += r.estimates[i] - r.expected[i];
        }
    }
    return out;
}

}  // namespace cls
