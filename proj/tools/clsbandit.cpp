// Command-line front end: run experiments, ingest rating data, re-check outputs.

#include "cls/ingest.hpp"
#include "cls/runner.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <iostream>
#include <thread>

namespace {

int cmd_run(const std::string& config, const std::string& out, std::size_t threads,
            const std::optional<std::uint64_t>& seed) {
    auto cfg = cls::ExperimentConfig::load(config);
    if (seed) cfg.seed = *seed;
    cls::RunControl control;
    control.threads = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
    control.out_dir = out;
    const auto result = cls::run_experiment(cfg, control);
    if (result.feature_report) {
        const auto& r = *result.feature_report;
        std::printf("features: rank %zu, explained energy %.4f, scale %.6g\n", r.svd_rank, r.explained_energy, r.scale);
    }
    std::printf("%-8s %12s %12s %12s\n", "policy", "lambda", "param2", "mean_reward");
    for (const auto& p : result.summary.policies) {
        for (const auto& c : result.summary.cells) {
            if (c.policy != p.policy || !c.best) continue;
            std::printf("%-8s %12.6g %12.6g %12.6f  (se %.4f)\n", std::string(cls::to_string(p.policy)).c_str(),
                        c.cell.lambda, c.cell.param2, c.mean, p.best_standard_error);
        }
    }
    std::printf("wrote %zu trajectories to %s\n", result.trajectories.size(), out.c_str());
    return 0;
}

int cmd_ingest(const std::string& ratings, std::size_t promotions, std::size_t min_raters, std::size_t max_raters,
               std::size_t rank, std::size_t iters, std::uint64_t seed, const std::string& features_out,
               const std::string& rewards_out) {
    const auto ds = cls::parse_ratings(ratings);
    std::printf("parsed %zu ratings: %zu users, %zu movies\n", ds.ratings.size(), ds.num_users(), ds.num_movies());
    cls::Rng split_rng = cls::Rng::stream(seed, {1});
    auto split = cls::split_train_test(ds, promotions, min_raters, max_raters, split_rng);
    cls::Rng svd_rng = cls::Rng::stream(seed, {2});
    auto build = cls::build_user_features(split.train, rank, iters, svd_rng);
    cls::write_feature_table(features_out, build.table);
    cls::write_reward_table(rewards_out, split.rewards);

    const auto& r = build.report;
    std::printf("test movies (slot: movieId, raters):\n");
    for (std::size_t j = 0; j < split.test_movies.size(); ++j)
        std::printf("  %zu: %s, %zu\n", j, ds.movie_ids[split.test_movies[j]].c_str(), split.test_rater_counts[j]);
    std::printf("svd rank %zu, power iterations %zu, oversample %zu\n", r.svd_rank, r.power_iters, r.oversample);
    std::printf("explained energy %.6f, max raw norm %.6g, scale %.6g\n", r.explained_energy, r.max_raw_norm, r.scale);
    std::printf("feature table: %zu users x %zu dims -> %s\n", build.table.num_users(), build.table.dim(),
                features_out.c_str());
    std::printf("reward table: %zu entries -> %s\n", split.rewards.size(), rewards_out.c_str());
    return 0;
}

int cmd_diagnose(const std::string& out) {
    const auto report = cls::diagnose_directory(out);
    for (const auto& line : report.lines) std::puts(line.c_str());
    std::printf("%zu files, %zu with failures\n", report.files, report.failures);
    return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Combinatorial linear semi-bandit experiments"};
    app.require_subcommand(1);

    std::string config, out;
    std::size_t threads = 1;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "run an experiment config and write CSVs");
    run->add_option("--config", config, "key-value config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory")->required();
    run->add_option("--threads", threads, "worker threads (0 = all cores)");
    run->add_option("--seed", seed, "override the config seed");

    std::string ratings, features_out, rewards_out;
    std::size_t promotions = 10, min_raters = 1400, max_raters = 2800, rank = 50, iters = 4;
    std::uint64_t ingest_seed = 0;
    auto* ingest = app.add_subcommand("ingest", "build user features and a reward table from ratings");
    ingest->add_option("--ratings", ratings, "userId,movieId,rating,timestamp CSV")->required()->check(CLI::ExistingFile);
    ingest->add_option("--promotions", promotions, "number of held-out movies");
    ingest->add_option("--min-raters", min_raters, "lower rater-count bound for held-out movies");
    ingest->add_option("--max-raters", max_raters, "upper rater-count bound for held-out movies");
    ingest->add_option("--rank", rank, "SVD rank (feature dimension is rank + 1)");
    ingest->add_option("--iters", iters, "power iterations");
    ingest->add_option("--seed", ingest_seed, "seed for the split and the sketch");
    ingest->add_option("--features-out", features_out, "feature table path")->required();
    ingest->add_option("--rewards-out", rewards_out, "reward table path")->required();

    std::string diag_out;
    auto* diagnose = app.add_subcommand("diagnose", "re-check the CSVs of a finished run");
    diagnose->add_option("--out", diag_out, "output directory of a run")->required()->check(CLI::ExistingDirectory);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) return cmd_run(config, out, threads, seed);
        if (*ingest)
            return cmd_ingest(ratings, promotions, min_raters, max_raters, rank, iters, ingest_seed, features_out,
                              rewards_out);
        if (*diagnose) return cmd_diagnose(diag_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
