#pragma once

#include "cls/core.hpp"
#include "cls/linalg.hpp"
#include "cls/oracles.hpp"
#include "cls/rng.hpp"

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cls {

enum class PolicyKind { Greedy, C2UCB, PC2UCB, RoundWiseTS, ArmWiseTS };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);
bool is_ucb(PolicyKind kind);
bool is_thompson(PolicyKind kind);

/// How the exploration scale (alpha_t for UCB kinds, v_t for TS kinds) is set.
struct Schedule {
    enum class Mode {
        Constant,              ///< value is alpha or v
        Theoretical,           ///< alpha_t = beta_t(delta), value is delta
        TheoreticalArmWise,    ///< v_t = beta_t(delta / (4 N T)), value is delta
        TheoreticalRoundWise,  ///< v_t = beta_t(delta / (4 T)), value is delta
    };
    Mode mode = Mode::Constant;
    double value = 0.0;

    static Schedule constant(double scale) { return {Mode::Constant, scale}; }
    static Schedule theoretical(double delta) { return {Mode::Theoretical, delta}; }
    static Schedule theoretical_arm_wise(double delta) { return {Mode::TheoreticalArmWise, delta}; }
    static Schedule theoretical_round_wise(double delta) { return {Mode::TheoreticalRoundWise, delta}; }
};

struct PolicySpec {
    PolicyKind kind = PolicyKind::C2UCB;
    double lambda = 1.0;
    Schedule scale = Schedule::constant(1.0);
    double c = 1.0;  ///< perturbation cap, PC2UCB only

    void validate() const;
};

struct ConfidenceRadius {
    double value = 0.0;
    bool clamped = false;  ///< the log term was negative and clamped at zero
};

/// beta_t(delta) = R sqrt(d ln((1 + k t / lambda) / delta)) + sqrt(lambda) S.
ConfidenceRadius confidence_radius(double t, double delta, const ProblemParams& params, double lambda);
double beta(double t, double delta, const ProblemParams& params, double lambda);

/// alpha_t or v_t for round t under the spec's schedule.
double resolve_scale(const PolicySpec& spec, std::size_t t, const ProblemParams& params);

using ScoreVector = std::vector<double>;

/// Per-block point estimates theta_hat for the current round.
std::vector<Vector> block_estimates(const RidgeModel& model);

/// Round 1: independent standard normals. Later rounds: theta_hat^T x.
ScoreVector score_greedy(const RoundContext& ctx, const RidgeModel& model, std::size_t t, Rng& rng);
ScoreVector score_c2ucb(const RoundContext& ctx, const RidgeModel& model, double alpha);
ScoreVector score_pc2ucb(const RoundContext& ctx, const RidgeModel& model, double alpha, double c, Rng& rng);
ScoreVector score_rwts(const RoundContext& ctx, const RidgeModel& model, double v, Rng& rng);
ScoreVector score_awts(const RoundContext& ctx, const RidgeModel& model, double v, Rng& rng);

struct PolicyDecision {
    SuperArm chosen;
    ScoreVector scores;
    double scale = 0.0;  ///< alpha_t or v_t actually used
};

/// Scores every arm and maximizes over the round's constraint family. Does
/// not touch `model`; feedback is applied by the caller.
PolicyDecision policy_step(const PolicySpec& spec, const RoundContext& ctx, const RidgeModel& model,
                           std::size_t t, const ProblemParams& params, Rng& rng);

}  // namespace cls
