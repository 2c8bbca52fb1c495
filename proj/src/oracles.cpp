#include "cls/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace cls {

double objective_of(std::span<const double> scores, std::span<const std::size_t> indices) {
    std::vector<double> chosen;
    chosen.reserve(indices.size());
    for (std::size_t i : indices) chosen.push_back(scores[i]);
    std::sort(chosen.begin(), chosen.end(), std::greater<>());
    return std::accumulate(chosen.begin(), chosen.end(), 0.0);
}

namespace {

// Strict total order: higher score first, then smaller index.
struct RanksAbove {
    std::span<const double> scores;
    bool operator()(std::size_t a, std::size_t b) const {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    }
};

std::vector<std::size_t> top_indices(std::span<const double> values, std::size_t k) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    RanksAbove cmp{values};
    if (k < order.size()) {
        std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), cmp);
        order.resize(k);
    }
    std::sort(order.begin(), order.end());
    return order;
}

OracleResult make_result(std::span<const double> scores, std::vector<std::size_t> indices) {
    std::sort(indices.begin(), indices.end());
    const double obj = objective_of(scores, indices);
    return {SuperArm(std::move(indices)), obj};
}

double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    double out = 1.0;
    for (std::size_t i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
    return out;
}

// Advances `comb` (strictly increasing, values < n) to the next combination
// in lexicographic order. Returns false after the last one.
bool next_combination(std::vector<std::size_t>& comb, std::size_t n) {
    const std::size_t k = comb.size();
    for (std::size_t pos = k; pos-- > 0;) {
        if (comb[pos] < n - k + pos) {
            ++comb[pos];
            for (std::size_t j = pos + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
            return true;
        }
    }
    return false;
}

}  // namespace

OracleResult top_k_select(std::span<const double> scores, std::size_t k) {
    if (k < 1 || k > scores.size()) throw std::invalid_argument("top_k_select: need 1 <= k <= N");
    return make_result(scores, top_indices(scores, k));
}

OracleResult promotion_select(std::span<const double> scores, std::size_t num_users,
                              std::size_t num_promotions, std::size_t k) {
    if (num_users < 1 || num_promotions < 1) throw std::invalid_argument("promotion_select: empty instance");
    if (scores.size() != num_users * num_promotions)
        throw std::invalid_argument("promotion_select: score count does not match users x promotions");
    if (k < 1 || k > num_users) throw std::invalid_argument("promotion_select: need 1 <= k <= num_users");

    std::vector<double> best(num_users);
    std::vector<std::size_t> best_promotion(num_users, 0);
    for (std::size_t u = 0; u < num_users; ++u) best[u] = scores[u];
    for (std::size_t j = 1; j < num_promotions; ++j) {
        const double* row = scores.data() + j * num_users;
        for (std::size_t u = 0; u < num_users; ++u) {
            if (row[u] > best[u]) {
                best[u] = row[u];
                best_promotion[u] = j;
            }
        }
    }
    std::vector<std::size_t> arms;
    arms.reserve(k);
    for (std::size_t u : top_indices(best, k)) arms.push_back(best_promotion[u] * num_users + u);
    return make_result(scores, std::move(arms));
}

OracleResult select(std::span<const double> scores, const ConstraintFamily& family) {
    if (const auto* topk = std::get_if<TopK>(&family.kind())) return top_k_select(scores, topk->k);
    const auto& promo = std::get<PromotionAssignment>(family.kind());
    return promotion_select(scores, promo.num_users, promo.num_promotions, promo.k);
}

OracleResult brute_force_select(std::span<const double> scores, const ConstraintFamily& family) {
    std::size_t users = scores.size();
    std::size_t promotions = 1;
    const std::size_t k = family.k();
    if (const auto* promo = std::get_if<PromotionAssignment>(&family.kind())) {
        users = promo->num_users;
        promotions = promo->num_promotions;
        if (scores.size() != users * promotions)
            throw std::invalid_argument("brute_force_select: score count does not match the family");
    }
    if (k > users) throw std::invalid_argument("brute_force_select: k exceeds the number of users");
    const double count = binomial(users, k) * std::pow(static_cast<double>(promotions), static_cast<double>(k));
    if (count > kMaxEnumeratedSets)
        throw EnumerationLimitExceeded("brute_force_select: " + std::to_string(count) + " feasible sets");

    // Enumeration runs in increasing tie-break order, so only strict
    // improvements replace the incumbent.
    std::vector<std::size_t> comb(k);
    std::iota(comb.begin(), comb.end(), std::size_t{0});
    std::vector<std::size_t> best_arms;
    double best_value = -std::numeric_limits<double>::infinity();
    std::vector<std::size_t> arms(k);
    do {
        std::vector<std::size_t> assign(k, 0);
        while (true) {
            for (std::size_t i = 0; i < k; ++i) arms[i] = assign[i] * users + comb[i];
            const double value = objective_of(scores, arms);
            if (best_arms.empty() || value > best_value) {
                best_value = value;
                best_arms = arms;
            }
            std::size_t pos = k;
            while (pos > 0 && assign[pos - 1] + 1 == promotions) assign[--pos] = 0;
            if (pos == 0) break;
            ++assign[pos - 1];
        }
    } while (next_combination(comb, users));

    return make_result(scores, std::move(best_arms));
}

}  // namespace cls
