#pragma once

#include "cls/environments.hpp"
#include "cls/rng.hpp"

#include <Eigen/SparseCore>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cls {

/// Malformed ratings input; the message names the offending line(s).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Rating {
    std::uint32_t user;   ///< dense user index
    std::uint32_t movie;  ///< dense movie index
    double rating;
};

/// Ratings with raw ids mapped to dense indices in order of first appearance.
struct RatingsDataset {
    std::vector<Rating> ratings;
    std::vector<std::string> user_ids;
    std::vector<std::string> movie_ids;

    std::size_t num_users() const { return user_ids.size(); }
    std::size_t num_movies() const { return movie_ids.size(); }
};

/// Reads "userId,movieId,rating,timestamp" CSV with one header line.
RatingsDataset parse_ratings(const std::filesystem::path& path);
RatingsDataset parse_ratings(std::istream& in, std::string_view source = "<stream>");

struct TrainTestSplit {
    RatingsDataset train;
    std::vector<std::uint32_t> test_movies;       ///< dense movie index per promotion slot
    std::vector<std::size_t> test_rater_counts;   ///< raters of each test movie
    RewardTable rewards;                          ///< (user, slot) -> rating
};

/// Picks `num_test` movies uniformly among those with a rater count in
/// [min_raters, max_raters]; their ratings move from train to the reward table.
TrainTestSplit split_train_test(const RatingsDataset& ds, std::size_t num_test, std::size_t min_raters,
                                std::size_t max_raters, Rng& rng);

/// users x movies matrix with missing ratings as structural zeros.
Eigen::SparseMatrix<double, Eigen::RowMajor> rating_matrix(const RatingsDataset& ds);

struct TruncatedSvd {
    Matrix U;      ///< rows x rank, orthonormal columns
    Vector sigma;  ///< descending singular values
    Matrix V;      ///< cols x rank, orthonormal columns
};

/// Rank-`rank` SVD by randomized subspace iteration with `power_iters`
/// power iterations and `oversample` extra sketch columns.
TruncatedSvd randomized_svd(const Eigen::SparseMatrix<double, Eigen::RowMajor>& A, std::size_t rank,
                            std::size_t power_iters, Rng& rng, std::size_t oversample = 10);

struct FeatureBuildReport {
    std::vector<std::uint32_t> test_movies;
    std::vector<std::size_t> test_rater_counts;
    std::size_t svd_rank = 0;
    std::size_t power_iters = 0;
    std::size_t oversample = 0;
    double constant_coordinate = 1.0;
    double explained_energy = 0.0;   ///< sum sigma^2 / ||A||_F^2
    double max_raw_norm = 0.0;       ///< before global scaling
    double scale = 1.0;              ///< global factor applied to every vector
};

struct FeatureBuild {
    UserFeatureTable table;
    FeatureBuildReport report;
};

/// User vector = (row of U Sigma, 1), then every vector is divided by the
/// largest norm so the maximum norm is exactly 1.
FeatureBuild build_user_features(const RatingsDataset& train, std::size_t rank, std::size_t power_iters,
                                 Rng& rng, std::size_t oversample = 10);

// Binary tables (little-endian).
//   features: "CLSF", u32 version (1), u32 num_users, u32 d, row-major f64
//   rewards:  "CLSR", u32 count, count x (u32 user, u32 slot, f64 reward)
void write_feature_table(const std::filesystem::path& path, const UserFeatureTable& table);
UserFeatureTable read_feature_table(const std::filesystem::path& path);
void write_reward_table(const std::filesystem::path& path, const RewardTable& table);
RewardTable read_reward_table(const std::filesystem::path& path);

/// Low-rank synthetic ratings for desk-scale promotion experiments.
struct PlantedRatingsConfig {
    std::size_t num_users = 1000;
    std::size_t num_movies = 200;
    std::size_t rank = 5;
    double min_popularity = 0.05;
    double max_popularity = 0.5;
    double noise = 0.5;
};

/// Users and movies get Gaussian latent factors; user u rates movie m with
/// probability min(1, 2 pop_m sigmoid(2 s)) where s is the scaled affinity,
/// and the rating is 3 + s plus noise, snapped to the half-star grid.
RatingsDataset make_planted_ratings(const PlantedRatingsConfig& cfg, Rng& rng);

}  // namespace cls
