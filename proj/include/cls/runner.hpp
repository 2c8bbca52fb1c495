#pragma once

#include "cls/config.hpp"
#include "cls/core.hpp"
#include "cls/diagnostics.hpp"
#include "cls/environments.hpp"
#include "cls/ingest.hpp"
#include "cls/policies.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cls {

/// Inclusive geometric sequence from low to high.
std::vector<double> grid(double low = 1e-2, double high = 1e2, std::size_t n = 5);

enum class EnvironmentKind { Clustered, PromotionSynthetic, PromotionIngested };

std::string_view to_string(EnvironmentKind kind);
EnvironmentKind parse_environment_kind(std::string_view name);

struct ExperimentConfig {
    EnvironmentKind environment = EnvironmentKind::Clustered;
    ClusteredEnvConfig clustered;
    PromotionEnvConfig promotion;

    // promotion-synthetic
    PlantedRatingsConfig planted;
    std::size_t min_raters = 100;
    std::size_t max_raters = 400;
    std::size_t svd_rank = 10;
    std::size_t svd_iters = 4;

    // promotion-ingested
    std::filesystem::path features_path;
    std::filesystem::path rewards_path;

    std::vector<PolicyKind> policies = {PolicyKind::Greedy, PolicyKind::C2UCB, PolicyKind::PC2UCB,
                                        PolicyKind::RoundWiseTS, PolicyKind::ArmWiseTS};
    std::vector<double> lambda_grid = grid();
    std::vector<double> scale_grid = grid();
    bool theoretical = false;  ///< beta_t-based schedules instead of scale_grid
    double delta = 0.05;
    double c = 1.0;
    std::size_t trials = 5;
    std::uint64_t seed = 0;
    bool diagnostics = true;
    bool full_scores = false;

    void validate() const;

    /// Reads the flat key-value format; unknown keys are an error.
    static ExperimentConfig from(const KeyValueConfig& kv);
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Clustered preset: d=11, N=2000, k=100, T=10.
    static ExperimentConfig clustered_preset();
    /// Promotion preset: M=10, T=20, N=100k, real tables on disk.
    static ExperimentConfig promotion_preset(std::size_t k, std::filesystem::path features,
                                             std::filesystem::path rewards);
};

/// One grid point of a policy. param2 is alpha / v (constant schedule) or
/// delta (theoretical schedule); greedy has no second parameter.
struct Cell {
    std::size_t index = 0;
    double lambda = 1.0;
    double param2 = 0.0;
};

std::vector<Cell> cells_for(const ExperimentConfig& cfg, PolicyKind kind);
PolicySpec make_policy_spec(const ExperimentConfig& cfg, PolicyKind kind, const Cell& cell);

/// Builds per-trial environments; shared tables are constructed once.
class EnvironmentFactory {
public:
    explicit EnvironmentFactory(const ExperimentConfig& cfg);

    std::unique_ptr<Environment> make(std::size_t trial) const;
    const ProblemParams& params() const { return params_; }
    /// Present for the synthetic promotion environment.
    const std::optional<FeatureBuildReport>& feature_report() const { return report_; }

private:
    ExperimentConfig cfg_;
    ClusteredEnvConfig clustered_;
    PromotionEnvConfig promotion_;
    std::shared_ptr<const UserFeatureTable> users_;
    std::shared_ptr<const RewardTable> rewards_;
    std::optional<FeatureBuildReport> report_;
    ProblemParams params_;
};

struct RunOptions {
    bool diagnostics = true;
    bool full_scores = false;
    double delta = 0.05;  ///< for the containment radius beta_t(delta)
};

/// Executes T rounds of observe, score, oracle, feedback, ridge update.
/// Randomness of round t is Rng::stream(policy_seed, {t}).
TrajectoryLog run_trajectory(const PolicySpec& spec, Environment& env, std::uint64_t policy_seed,
                             const RunOptions& options = {});

std::uint64_t trajectory_seed(std::uint64_t base, PolicyKind kind, std::size_t cell, std::size_t trial);

std::string trajectory_file_name(PolicyKind kind, std::size_t cell, std::size_t trial);

/// Trajectory CSV: t,cum_reward,avg_reward,pseudo_regret,containment,potential_sum
void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log);

struct CellSummary {
    PolicyKind policy;
    Cell cell;
    std::vector<double> trial_rewards;
    double mean = 0.0;
    bool best = false;
};

struct PolicySummary {
    PolicyKind policy;
    std::size_t best_cell = 0;
    double best_mean = 0.0;
    double best_standard_error = 0.0;
    /// Mean over trials of the best cell's cumulative reward / t.
    std::vector<double> running_average;
};

struct ExperimentSummary {
    std::vector<CellSummary> cells;
    std::vector<PolicySummary> policies;

    const PolicySummary& of(PolicyKind kind) const;
};

struct TrajectoryResult {
    PolicyKind policy;
    std::size_t cell = 0;
    std::size_t trial = 0;
    double cumulative_reward = 0.0;
    std::vector<double> cumulative_by_round;
    std::optional<TrajectoryLog> log;
};

/// Per-policy mean over trials, best cell (first on ties), running averages.
ExperimentSummary tune_and_summarize(const ExperimentConfig& cfg, const std::vector<TrajectoryResult>& results);

void write_summary_csv(std::ostream& out, const ExperimentSummary& summary);
/// policy,t,avg_reward for each policy's best cell.
void write_running_average_csv(std::ostream& out, const ExperimentSummary& summary);

struct RunControl {
    std::size_t threads = 1;
    std::optional<std::filesystem::path> out_dir;
    bool keep_logs = false;
};

struct ExperimentResult {
    ProblemParams params;
    std::vector<TrajectoryResult> trajectories;  ///< ordered by (policy, cell, trial)
    ExperimentSummary summary;
    std::optional<FeatureBuildReport> feature_report;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunControl& control = {});

/// Re-checks an output directory written by run_experiment: round counts,
/// avg_reward = cum_reward / t, the potential bound where it applies, the
/// containment rate and, for theoretical UCB runs, the regret envelope.
struct DirectoryReport {
    std::vector<std::string> lines;
    std::size_t files = 0;
    std::size_t failures = 0;
    bool ok() const { return failures == 0 && files > 0; }
};

DirectoryReport diagnose_directory(const std::filesystem::path& dir);

/// %.17g
std::string format_double(double v);

}  // namespace cls
