#include "cls/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace cls {

DiagnosticsRecord summarize_diagnostics(const TrajectoryLog& log) {
    DiagnosticsRecord out;
    out.rounds = log.size();
    bool all = true;
    bool known = !log.empty();
    for (const auto& r : log.rounds()) {
        out.potential_sum += r.width_sq_sum;
        out.shadow_potential_sum += r.shadow_width_sq_sum;
        out.width_sum += r.width_sum;
        if (r.estimation_error && r.confidence_radius) {
            const bool inside = *r.estimation_error <= *r.confidence_radius;
            out.containment.emplace_back(inside);
            all = all && inside;
        } else {
            out.containment.emplace_back(std::nullopt);
            known = false;
        }
    }
    if (known) out.contained_all = all;
    if (log.has_ground_truth()) {
        out.pseudo_regret = pseudo_regret(log);
        bool complete = true;
        for (const auto& r : log.rounds())
            complete = complete && r.scores.size() == r.chosen.size() && r.estimates.size() == r.chosen.size();
        if (complete) out.decomposition = regret_decomposition(log);
    }
    return out;
}

double potential_bound(std::size_t d, std::size_t k, std::size_t T) {
    const double dd = static_cast<double>(d);
    return 2.0 * dd * std::log1p(static_cast<double>(k) * static_cast<double>(T) / dd);
}

double shadow_potential_bound(std::size_t d, std::size_t k, std::size_t T, double lambda) {
    const double dd = static_cast<double>(d);
    const double kk = static_cast<double>(k);
    return 2.0 * kk * dd / lambda * std::log1p(kk * static_cast<double>(T) / dd);
}

PotentialBoundReport check_potential_bounds(const DiagnosticsRecord& diag, const ProblemParams& params,
                                            double lambda) {
    PotentialBoundReport out;
    const double k = static_cast<double>(params.k);
    out.ordinary.applies = lambda >= k;
    out.ordinary.lhs = diag.potential_sum;
    out.ordinary.rhs = potential_bound(params.d, params.k, diag.rounds);
    out.shadow.applies = lambda <= k;
    out.shadow.lhs = diag.shadow_potential_sum;
    out.shadow.rhs = shadow_potential_bound(params.d, params.k, diag.rounds, lambda);
    return out;
}

EnvelopeTerms regret_envelope(const ProblemParams& params, const PolicySpec& spec, double delta, std::size_t T) {
    if (!is_ucb(spec.kind))
        throw std::invalid_argument("regret envelope constants are only assembled for the UCB policies");
    const double d = static_cast<double>(params.d);
    const double k = static_cast<double>(params.k);
    const double tt = static_cast<double>(T);
    const double log_term = std::log1p(k * tt / d);
    EnvelopeTerms out;
    out.beta_T = beta(tt, delta, params, spec.lambda);
    out.width_bound = spec.lambda >= k ? std::sqrt(2.0 * d * k * tt * log_term)
                                       : std::sqrt(2.0 * d * k * k * tt * log_term / spec.lambda);
    const double c = spec.kind == PolicyKind::PC2UCB ? spec.c : 0.0;
    out.optimality = 0.0;
    out.estimation = out.beta_T * out.width_bound;
    out.algorithm = (1.0 + c) * out.beta_T * out.width_bound;
    return out;
}

EnvelopeReport check_regret_envelope(const std::vector<TrajectoryLog>& logs, const ProblemParams& params,
                                     const PolicySpec& spec, double delta) {
    EnvelopeReport out;
    out.terms = regret_envelope(params, spec, delta, params.T);
    if (spec.scale.mode != Schedule::Mode::Theoretical)
        out.warnings.emplace_back("envelope assumes alpha_t = beta_t(delta); this run used a constant schedule");
    else if (spec.scale.value != delta)
        out.warnings.emplace_back("schedule delta differs from the envelope delta");
    const double bound = out.terms.total();
    for (const auto& log : logs) {
        const double r = pseudo_regret(log);
        out.regrets.push_back(r);
        if (r <= bound) ++out.under;
    }
    out.fraction = logs.empty() ? 0.0 : static_cast<double>(out.under) / static_cast<double>(logs.size());
    return out;
}

}  // namespace cls
