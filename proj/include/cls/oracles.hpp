#pragma once

#include "cls/core.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>

namespace cls {

/// Exact maximizer of the sum of per-arm scores over a constraint family.
///
/// Ties are broken identically by every oracle: among maximizing sets the
/// one whose (user, promotion) pairs, ordered by user, are lexicographically
/// smallest wins. For TopK this is the lexicographically smallest index set.
struct OracleResult {
    SuperArm super_arm;
    double objective = 0.0;
};

class EnumerationLimitExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Sum of `scores` at `indices`, accumulated in descending score order so
/// that equal multisets of values give bit-identical objectives.
double objective_of(std::span<const double> scores, std::span<const std::size_t> indices);

OracleResult top_k_select(std::span<const double> scores, std::size_t k);

/// Arm j * num_users + i is user i with promotion j.
OracleResult promotion_select(std::span<const double> scores, std::size_t num_users,
                              std::size_t num_promotions, std::size_t k);

/// Dispatches to the fast oracle for the family.
OracleResult select(std::span<const double> scores, const ConstraintFamily& family);

inline constexpr double kMaxEnumeratedSets = 1e6;

/// Exhaustive reference oracle; throws EnumerationLimitExceeded past
/// kMaxEnumeratedSets feasible sets.
OracleResult brute_force_select(std::span<const double> scores, const ConstraintFamily& family);

}  // namespace cls
