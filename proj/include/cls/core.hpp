#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace cls {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when an operation needs the true parameter or true expected
/// rewards and the trajectory does not carry them.
class MissingGroundTruth : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Dimensions and constants of a combinatorial linear semi-bandit instance.
struct ProblemParams {
    std::size_t d = 1;      ///< feature dimension (ambient, after block embedding)
    std::size_t N = 1;      ///< arms per round
    std::size_t k = 1;      ///< super-arm size
    std::size_t T = 1;      ///< horizon
    double R = 1.0;         ///< sub-Gaussian noise scale
    double S = 1.0;         ///< bound on the true parameter norm
    double delta = 0.05;    ///< failure probability

    void validate() const;
};

/// Strictly increasing list of chosen arm indices.
class SuperArm {
public:
    SuperArm() = default;
    explicit SuperArm(std::vector<std::size_t> indices);

    const std::vector<std::size_t>& indices() const { return indices_; }
    std::size_t size() const { return indices_.size(); }
    bool contains(std::size_t arm) const;

    friend bool operator==(const SuperArm&, const SuperArm&) = default;

private:
    std::vector<std::size_t> indices_;
};

/// All subsets of exactly k arms.
struct TopK {
    std::size_t k = 1;
};

/// Arm j * num_users + i pairs user slot i with promotion j. A feasible set
/// holds exactly k pairs and uses each user slot at most once.
struct PromotionAssignment {
    std::size_t num_users = 1;
    std::size_t num_promotions = 1;
    std::size_t k = 1;

    std::size_t user_of(std::size_t arm) const { return arm % num_users; }
    std::size_t promotion_of(std::size_t arm) const { return arm / num_users; }
    std::size_t arm_of(std::size_t user, std::size_t promotion) const {
        return promotion * num_users + user;
    }
};

class ConstraintFamily {
public:
    using Kind = std::variant<TopK, PromotionAssignment>;

    ConstraintFamily(TopK family);
    ConstraintFamily(PromotionAssignment family);

    const Kind& kind() const { return kind_; }
    /// Exact size of every feasible super arm.
    std::size_t k() const;
    /// Membership test; `num_arms` bounds the valid index range.
    bool contains(const SuperArm& arm, std::size_t num_arms) const;

private:
    Kind kind_;
};

/// Scales columns whose norm lies in (1, 1 + 1e-12] back onto the unit sphere
/// and throws std::invalid_argument for larger violations. Returns the
/// number of renormalized columns.
std::size_t enforce_unit_ball(Matrix& columns);

/// One round's observable data.
///
/// Feature vectors are stored once per base item (column i of `base`). With
/// `num_blocks` = M > 1, arm j * n + i is the block embedding of base vector
/// i into block j of an (d * M)-dimensional space; the embedded vectors are
/// never materialized except on request.
class RoundContext {
public:
    RoundContext(std::size_t t, Matrix base, ConstraintFamily constraint,
                 std::size_t num_blocks = 1);

    std::size_t t() const { return t_; }
    std::size_t dim() const { return static_cast<std::size_t>(base_.rows()); }
    std::size_t num_blocks() const { return num_blocks_; }
    std::size_t ambient_dim() const { return dim() * num_blocks_; }
    std::size_t num_base() const { return static_cast<std::size_t>(base_.cols()); }
    std::size_t num_arms() const { return num_base() * num_blocks_; }

    std::size_t block_of(std::size_t arm) const { return arm / num_base(); }
    std::size_t base_of(std::size_t arm) const { return arm % num_base(); }
    auto feature(std::size_t arm) const { return base_.col(static_cast<Eigen::Index>(base_of(arm))); }
    /// Dense (d * M)-dimensional embedding of `arm`.
    Vector embedded(std::size_t arm) const;

    const Matrix& base() const { return base_; }
    const ConstraintFamily& constraint() const { return constraint_; }

private:
    std::size_t t_;
    Matrix base_;
    ConstraintFamily constraint_;
    std::size_t num_blocks_;
};

/// Per-round record. Per-arm vectors are aligned with `chosen.indices()`.
struct RoundRecord {
    std::size_t t = 0;
    SuperArm chosen;
    std::vector<double> scores;       ///< estimated rewards used for selection
    std::vector<double> estimates;    ///< point predictions theta_hat^T x
    std::vector<double> rewards;      ///< realized rewards
    std::vector<double> expected;     ///< true expected rewards; empty if unknown
    std::optional<double> optimal_value;
    double cumulative_reward = 0.0;   ///< filled by TrajectoryLog::append

    // Diagnostics over the chosen arms, all under V_{t-1}.
    double width_sum = 0.0;             ///< sum of ||x||_{V^-1}
    double width_sq_sum = 0.0;          ///< sum of ||x||^2_{V^-1}
    double shadow_width_sq_sum = 0.0;   ///< same under the shadow matrix
    std::optional<double> estimation_error;   ///< ||theta_hat - theta*||_V
    std::optional<double> confidence_radius;  ///< beta_t(delta)

    std::vector<double> all_scores;   ///< every arm's score, opt-in
};

class TrajectoryLog {
public:
    /// Appends a round and sets its running cumulative reward.
    void append(RoundRecord record);

    const std::vector<RoundRecord>& rounds() const { return rounds_; }
    std::size_t size() const { return rounds_.size(); }
    bool empty() const { return rounds_.empty(); }
    double cumulative_reward() const { return rounds_.empty() ? 0.0 : rounds_.back().cumulative_reward; }
    bool has_ground_truth() const;

private:
    std::vector<RoundRecord> rounds_;
};

/// Sum over rounds of (optimal value - true value of the chosen set).
double pseudo_regret(const TrajectoryLog& log);

/// Per-round pseudo-regret increments.
std::vector<double> pseudo_regret_increments(const TrajectoryLog& log);

struct RegretDecomposition {
    double optimality = 0.0;  ///< sum of (optimal value - sum of chosen scores)
    double algorithm = 0.0;   ///< sum of (score - point prediction) on chosen arms
    double estimation = 0.0;  ///< sum of (point prediction - true mean) on chosen arms

    double total() const { return optimality + algorithm + estimation; }
};

RegretDecomposition regret_decomposition(const TrajectoryLog& log);

}  // namespace cls
