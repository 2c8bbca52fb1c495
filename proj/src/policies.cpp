#include "cls/policies.hpp"

#include <cmath>
#include <stdexcept>

namespace cls {

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::Greedy: return "greedy";
        case PolicyKind::C2UCB: return "c2ucb";
        case PolicyKind::PC2UCB: return "pc2ucb";
        case PolicyKind::RoundWiseTS: return "rwts";
        case PolicyKind::ArmWiseTS: return "awts";
    }
    return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
    for (auto kind : {PolicyKind::Greedy, PolicyKind::C2UCB, PolicyKind::PC2UCB, PolicyKind::RoundWiseTS,
                      PolicyKind::ArmWiseTS}) {
        if (name == to_string(kind)) return kind;
    }
    throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

bool is_ucb(PolicyKind kind) { return kind == PolicyKind::C2UCB || kind == PolicyKind::PC2UCB; }
bool is_thompson(PolicyKind kind) { return kind == PolicyKind::RoundWiseTS || kind == PolicyKind::ArmWiseTS; }

void PolicySpec::validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("PolicySpec: lambda must be > 0");
    if (!(c >= 0.0)) throw std::invalid_argument("PolicySpec: c must be >= 0");
    using Mode = Schedule::Mode;
    if (scale.mode == Mode::Constant) {
        if (!(scale.value >= 0.0)) throw std::invalid_argument("PolicySpec: scale must be >= 0");
        return;
    }
    if (!(scale.value > 0.0 && scale.value < 1.0))
        throw std::invalid_argument("PolicySpec: theoretical schedules need delta in (0, 1)");
    const bool ok = (scale.mode == Mode::Theoretical && is_ucb(kind)) ||
                    (scale.mode == Mode::TheoreticalArmWise && kind == PolicyKind::ArmWiseTS) ||
                    (scale.mode == Mode::TheoreticalRoundWise && kind == PolicyKind::RoundWiseTS);
    if (!ok)
        throw std::invalid_argument("PolicySpec: schedule mode is not legal for policy " +
                                    std::string(to_string(kind)));
}

ConfidenceRadius confidence_radius(double t, double delta, const ProblemParams& params, double lambda) {
    if (!(t >= 0.0)) throw std::invalid_argument("beta: t must be >= 0");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("beta: delta must lie in (0, 1]");
    if (!(lambda > 0.0)) throw std::invalid_argument("beta: lambda must be > 0");
    const double k = static_cast<double>(params.k);
    const double d = static_cast<double>(params.d);
    double log_term = d * std::log((1.0 + k * t / lambda) / delta);
    ConfidenceRadius out;
    if (log_term < 0.0) {
        log_term = 0.0;
        out.clamped = true;
    }
    out.value = params.R * std::sqrt(log_term) + std::sqrt(lambda) * params.S;
    return out;
}

double beta(double t, double delta, const ProblemParams& params, double lambda) {
    return confidence_radius(t, delta, params, lambda).value;
}

double resolve_scale(const PolicySpec& spec, std::size_t t, const ProblemParams& params) {
    const double tt = static_cast<double>(t);
    const double delta = spec.scale.value;
    switch (spec.scale.mode) {
        case Schedule::Mode::Constant: return spec.scale.value;
        case Schedule::Mode::Theoretical: return beta(tt, delta, params, spec.lambda);
        case Schedule::Mode::TheoreticalArmWise:
            return beta(tt, delta / (4.0 * static_cast<double>(params.N) * static_cast<double>(params.T)), params,
                        spec.lambda);
        case Schedule::Mode::TheoreticalRoundWise:
            return beta(tt, delta / (4.0 * static_cast<double>(params.T)), params, spec.lambda);
    }
    return 0.0;
}

std::vector<Vector> block_estimates(const RidgeModel& model) {
    std::vector<Vector> out;
    out.reserve(model.num_blocks());
    for (std::size_t j = 0; j < model.num_blocks(); ++j) out.push_back(model.block(j).theta_hat());
    return out;
}

namespace {

void check_layout(const RoundContext& ctx, const RidgeModel& model) {
    if (ctx.dim() != model.dim() || ctx.num_blocks() != model.num_blocks())
        throw std::invalid_argument("round context and ridge model have different shapes");
}

ScoreVector point_scores(const RoundContext& ctx, const std::vector<Vector>& theta) {
    ScoreVector out(ctx.num_arms());
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = theta[ctx.block_of(a)].dot(ctx.feature(a));
    return out;
}

// Per-arm draws come from a substream keyed by the arm index, so the result
// does not depend on the order in which arms are scored.
Rng arm_stream(std::uint64_t round_seed, std::size_t arm) { return Rng::stream(round_seed, {arm}); }

}  // namespace

ScoreVector score_greedy(const RoundContext& ctx, const RidgeModel& model, std::size_t t, Rng& rng) {
    check_layout(ctx, model);
    if (t <= 1) {
        const std::uint64_t round_seed = rng();
        ScoreVector out(ctx.num_arms());
        for (std::size_t a = 0; a < out.size(); ++a) out[a] = arm_stream(round_seed, a).normal();
        return out;
    }
    return point_scores(ctx, block_estimates(model));
}

ScoreVector score_c2ucb(const RoundContext& ctx, const RidgeModel& model, double alpha) {
    check_layout(ctx, model);
    if (alpha < 0.0) throw std::invalid_argument("score_c2ucb: alpha must be >= 0");
    const auto theta = block_estimates(model);
    ScoreVector out(ctx.num_arms());
    for (std::size_t a = 0; a < out.size(); ++a) {
        const auto x = ctx.feature(a);
        const std::size_t j = ctx.block_of(a);
        out[a] = theta[j].dot(x) + alpha * model.block(j).width(x);
    }
    return out;
}

ScoreVector score_pc2ucb(const RoundContext& ctx, const RidgeModel& model, double alpha, double c, Rng& rng) {
    check_layout(ctx, model);
    if (alpha < 0.0 || c < 0.0) throw std::invalid_argument("score_pc2ucb: alpha and c must be >= 0");
    const auto theta = block_estimates(model);
    const std::uint64_t round_seed = rng();
    ScoreVector out(ctx.num_arms());
    for (std::size_t a = 0; a < out.size(); ++a) {
        const auto x = ctx.feature(a);
        const std::size_t j = ctx.block_of(a);
        const double perturbation = c == 0.0 ? 0.0 : arm_stream(round_seed, a).uniform(0.0, c);
        out[a] = theta[j].dot(x) + (1.0 + perturbation) * alpha * model.block(j).width(x);
    }
    return out;
}

ScoreVector score_rwts(const RoundContext& ctx, const RidgeModel& model, double v, Rng& rng) {
    check_layout(ctx, model);
    if (v < 0.0) throw std::invalid_argument("score_rwts: v must be >= 0");
    auto theta = block_estimates(model);
    // One draw per round; with several blocks the draw factorizes blockwise.
    for (std::size_t j = 0; j < theta.size(); ++j) theta[j] = model.block(j).sample_posterior(theta[j], v, rng);
    return point_scores(ctx, theta);
}

ScoreVector score_awts(const RoundContext& ctx, const RidgeModel& model, double v, Rng& rng) {
    check_layout(ctx, model);
    if (v < 0.0) throw std::invalid_argument("score_awts: v must be >= 0");
    const auto theta = block_estimates(model);
    if (v == 0.0) return point_scores(ctx, theta);
    const std::uint64_t round_seed = rng();
    ScoreVector out(ctx.num_arms());
    for (std::size_t a = 0; a < out.size(); ++a) {
        const std::size_t j = ctx.block_of(a);
        Rng stream = arm_stream(round_seed, a);
        out[a] = model.block(j).sample_posterior(theta[j], v, stream).dot(ctx.feature(a));
    }
    return out;
}

PolicyDecision policy_step(const PolicySpec& spec, const RoundContext& ctx, const RidgeModel& model,
                           std::size_t t, const ProblemParams& params, Rng& rng) {
    spec.validate();
    PolicyDecision out;
    out.scale = spec.kind == PolicyKind::Greedy ? 0.0 : resolve_scale(spec, t, params);
    switch (spec.kind) {
        case PolicyKind::Greedy: out.scores = score_greedy(ctx, model, t, rng); break;
        case PolicyKind::C2UCB: out.scores = score_c2ucb(ctx, model, out.scale); break;
        case PolicyKind::PC2UCB: out.scores = score_pc2ucb(ctx, model, out.scale, spec.c, rng); break;
        case PolicyKind::RoundWiseTS: out.scores = score_rwts(ctx, model, out.scale, rng); break;
        case PolicyKind::ArmWiseTS: out.scores = score_awts(ctx, model, out.scale, rng); break;
    }
    out.chosen = select(out.scores, ctx.constraint()).super_arm;
    return out;
}

}  // namespace cls
