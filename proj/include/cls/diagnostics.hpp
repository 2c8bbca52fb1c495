#pragma once

#include "cls/core.hpp"
#include "cls/policies.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace cls {

/// Per-trajectory aggregates of the round diagnostics.
struct DiagnosticsRecord {
    std::size_t rounds = 0;
    double potential_sum = 0.0;         ///< sum_t sum_{I_t} ||x||^2_{V_{t-1}^-1}
    double shadow_potential_sum = 0.0;  ///< same under the shadow matrix
    double width_sum = 0.0;             ///< sum_t sum_{I_t} ||x||_{V_{t-1}^-1}
    std::vector<std::optional<bool>> containment;  ///< per round, when theta* is known
    std::optional<bool> contained_all;
    std::optional<double> pseudo_regret;
    std::optional<RegretDecomposition> decomposition;
};

DiagnosticsRecord summarize_diagnostics(const TrajectoryLog& log);

/// 2 d log(1 + k T / d).
double potential_bound(std::size_t d, std::size_t k, std::size_t T);
/// (2 k d / lambda) log(1 + k T / d).
double shadow_potential_bound(std::size_t d, std::size_t k, std::size_t T, double lambda);

struct BoundCheck {
    bool applies = false;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds() const { return !applies || lhs <= rhs; }
    double slack() const { return rhs - lhs; }
};

/// The ordinary-matrix bound applies for lambda >= k, the shadow-matrix
/// bound for lambda <= k. Both are deterministic: any violation is a bug.
struct PotentialBoundReport {
    BoundCheck ordinary;
    BoundCheck shadow;
    bool pass() const { return ordinary.holds() && shadow.holds(); }
};

PotentialBoundReport check_potential_bounds(const DiagnosticsRecord& diag, const ProblemParams& params,
                                            double lambda);

/// Finite-T regret envelope for the UCB policies with alpha_t = beta_t(delta),
/// valid whenever the confidence ellipsoid contains theta* in every round:
///   optimality term  <= 0
///   estimation term  <= beta_T(delta) * W
///   algorithm term   <= (1 + c) beta_T(delta) * W
/// where W bounds sum ||x||_{V^-1}: sqrt(2 d k T log(1 + kT/d)) for lambda >= k
/// and sqrt(2 d k^2 T log(1 + kT/d) / lambda) otherwise.
struct EnvelopeTerms {
    double beta_T = 0.0;
    double width_bound = 0.0;
    double optimality = 0.0;
    double estimation = 0.0;
    double algorithm = 0.0;
    double total() const { return optimality + estimation + algorithm; }
};

/// Throws std::invalid_argument for non-UCB policies.
EnvelopeTerms regret_envelope(const ProblemParams& params, const PolicySpec& spec, double delta, std::size_t T);

struct EnvelopeReport {
    EnvelopeTerms terms;
    std::vector<double> regrets;
    std::size_t under = 0;
    double fraction = 0.0;
    std::vector<std::string> warnings;
};

EnvelopeReport check_regret_envelope(const std::vector<TrajectoryLog>& logs, const ProblemParams& params,
                                     const PolicySpec& spec, double delta);

}  // namespace cls
