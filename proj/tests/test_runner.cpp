#include "cls/diagnostics.hpp"
#include "cls/runner.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>

using namespace cls;

namespace {

// Six fixed arms in the plane with deterministic pseudo-noise.
class PlaneEnvironment final : public Environment {
public:
    PlaneEnvironment() {
        params_.d = 2;
        params_.N = 6;
        params_.k = 2;
        params_.T = 3;
        theta_ = Vector(2);
        theta_ << 0.6, -0.3;
        base_ = Matrix(2, 6);
        base_ << 0.9, 0.1, -0.5, 0.3, 0.0, 0.7,  //
            0.2, 0.8, 0.5, -0.9, 1.0, 0.7;
    }
    const ProblemParams& params() const override { return params_; }
    std::size_t base_dim() const override { return 2; }
    std::size_t num_blocks() const override { return 1; }
    RoundContext round(std::size_t t) override { return RoundContext(t, base_, TopK{2}); }
    double reward(const RoundContext& ctx, std::size_t arm) const override {
        return noisy(ctx.t(), arm);
    }
    std::vector<double> expected_rewards(const RoundContext& ctx) const override {
        std::vector<double> out(ctx.num_arms());
        for (std::size_t a = 0; a < out.size(); ++a) out[a] = theta_.dot(ctx.feature(a));
        return out;
    }
    std::optional<Vector> theta_star() const override { return theta_; }

    double noisy(std::size_t t, std::size_t arm) const {
        return theta_.dot(base_.col(static_cast<Eigen::Index>(arm))) +
               0.3 * std::sin(7.0 * static_cast<double>(t) + static_cast<double>(arm));
    }
    const Matrix& base() const { return base_; }

private:
    ProblemParams params_;
    Vector theta_;
    Matrix base_;
};

// Straight-line C2UCB in two dimensions with a closed-form 2x2 inverse.
struct Reference {
    std::vector<std::array<int, 2>> chosen;
    std::vector<double> cumulative;
};

Reference reference_c2ucb(const PlaneEnvironment& env, double lambda, const std::function<double(int)>& alpha_at) {
    double v00 = lambda, v01 = 0, v11 = lambda, b0 = 0, b1 = 0, cum = 0;
    Reference ref;
    for (int t = 1; t <= 3; ++t) {
        const double det = v00 * v11 - v01 * v01;
        const double i00 = v11 / det, i01 = -v01 / det, i11 = v00 / det;
        const double th0 = i00 * b0 + i01 * b1, th1 = i01 * b0 + i11 * b1;
        const double alpha = alpha_at(t);
        std::array<double, 6> s{};
        for (int a = 0; a < 6; ++a) {
            const double x0 = env.base()(0, a), x1 = env.base()(1, a);
            const double q = x0 * (i00 * x0 + i01 * x1) + x1 * (i01 * x0 + i11 * x1);
            s[a] = th0 * x0 + th1 * x1 + alpha * std::sqrt(q);
        }
        std::array<int, 6> order{0, 1, 2, 3, 4, 5};
        std::stable_sort(order.begin(), order.end(), [&](int p, int q) { return s[p] > s[q]; });
        std::array<int, 2> pick{std::min(order[0], order[1]), std::max(order[0], order[1])};
        ref.chosen.push_back(pick);
        for (int a : pick) {
            const double x0 = env.base()(0, a), x1 = env.base()(1, a);
            const double r = env.noisy(static_cast<std::size_t>(t), static_cast<std::size_t>(a));
            v00 += x0 * x0;
            v01 += x0 * x1;
            v11 += x1 * x1;
            b0 += r * x0;
            b1 += r * x1;
            cum += r;
        }
        ref.cumulative.push_back(cum);
    }
    return ref;
}

ExperimentConfig tiny_clustered() {
    ExperimentConfig cfg;
    cfg.environment = EnvironmentKind::Clustered;
    cfg.clustered.d = 4;
    cfg.clustered.N = 30;
    cfg.clustered.k = 3;
    cfg.clustered.T = 6;
    cfg.clustered.angle = 0.7;
    cfg.lambda_grid = {0.5, 2.0};
    cfg.scale_grid = {0.1, 1.0};
    cfg.trials = 3;
    cfg.seed = 99;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("cls_runner_" + name);
    std::filesystem::remove_all(p);
    return p;
}

}  // namespace

TEST(Grid, Defaults) {
    const auto g = grid();
    ASSERT_EQ(g.size(), 5u);
    const double expect[] = {0.01, 0.1, 1, 10, 100};
    for (int i = 0; i < 5; ++i) EXPECT_NEAR(g[i], expect[i], 1e-15 * expect[i]);
    EXPECT_EQ(g.front(), 0.01);
    EXPECT_EQ(g.back(), 100.0);
}

TEST(Grid, EndpointsAndRatios) {
    EXPECT_EQ(grid(0.3, 7.0, 2), (std::vector<double>{0.3, 7.0}));
    const auto g = grid(0.02, 50.0, 9);
    for (std::size_t i = 2; i < g.size(); ++i) EXPECT_NEAR(g[i] / g[i - 1], g[1] / g[0], 1e-12 * g[1] / g[0]);
    EXPECT_THROW(grid(0.0, 1.0, 3), std::invalid_argument);
    EXPECT_THROW(grid(2.0, 1.0, 3), std::invalid_argument);
    EXPECT_THROW(grid(1.0, 2.0, 1), std::invalid_argument);
}

TEST(RunTrajectory, SingleRoundGreedyBookkeeping) {
    ClusteredEnvConfig cfg;
    cfg.d = 4;
    cfg.N = 12;
    cfg.k = 3;
    cfg.T = 1;
    cfg.angle = 0.8;
    cfg.seed = 3;
    ClusteredEnvironment env(cfg, 0);
    PolicySpec spec{PolicyKind::Greedy, 1.5, Schedule::constant(0.0), 1.0};
    const auto log = run_trajectory(spec, env, 42);
    ASSERT_EQ(log.size(), 1u);
    const auto& r = log.rounds()[0];
    EXPECT_EQ(r.chosen.size(), 3u);
    // Replay the update to check V = lambda I + sum x x^T.
    ClusteredEnvironment replay(cfg, 0);
    const auto ctx = replay.round(1);
    Matrix V = Matrix::Identity(4, 4) * 1.5;
    for (std::size_t a : r.chosen.indices()) V += ctx.feature(a) * ctx.feature(a).transpose();
    RidgeState state(4, 1.5);
    for (std::size_t a : r.chosen.indices()) state.update(ctx.feature(a), 0.0);
    EXPECT_TRUE(state.V().isApprox(V, 1e-15));
    double sum = 0.0;
    for (double x : r.rewards) sum += x;
    EXPECT_EQ(log.cumulative_reward(), sum);
}

TEST(RunTrajectory, SameSeedSameLog) {
    ClusteredEnvConfig cfg;
    cfg.d = 5;
    cfg.N = 40;
    cfg.k = 4;
    cfg.T = 8;
    cfg.seed = 1;
    for (auto kind : {PolicyKind::Greedy, PolicyKind::PC2UCB, PolicyKind::RoundWiseTS, PolicyKind::ArmWiseTS}) {
        PolicySpec spec{kind, 1.0, Schedule::constant(0.5), 1.0};
        ClusteredEnvironment a(cfg, 2), b(cfg, 2);
        std::ostringstream sa, sb;
        write_trajectory_csv(sa, run_trajectory(spec, a, 7));
        write_trajectory_csv(sb, run_trajectory(spec, b, 7));
        EXPECT_EQ(sa.str(), sb.str()) << to_string(kind);
    }
}

TEST(RunTrajectory, MatchesStraightLineReimplementation) {
    for (double lambda : {0.5, 1.0, 3.0}) {
        for (double alpha : {0.0, 0.4, 2.0}) {
            PlaneEnvironment env;
            PolicySpec spec{PolicyKind::C2UCB, lambda, Schedule::constant(alpha), 1.0};
            const auto log = run_trajectory(spec, env, 0);
            const auto ref = reference_c2ucb(env, lambda, [&](int) { return alpha; });
            ASSERT_EQ(log.size(), 3u);
            for (std::size_t t = 0; t < 3; ++t) {
                const auto& idx = log.rounds()[t].chosen.indices();
                EXPECT_EQ(idx[0], static_cast<std::size_t>(ref.chosen[t][0]));
                EXPECT_EQ(idx[1], static_cast<std::size_t>(ref.chosen[t][1]));
                EXPECT_NEAR(log.rounds()[t].cumulative_reward, ref.cumulative[t], 1e-12);
            }
        }
    }
}

TEST(RunTrajectory, TheoreticalAlphaMatchesReimplementation) {
    for (double lambda : {0.5, 2.0}) {
        PlaneEnvironment env;
        const double delta = 0.1;
        PolicySpec spec{PolicyKind::C2UCB, lambda, Schedule::theoretical(delta), 1.0};
        const auto log = run_trajectory(spec, env, 0);
        // R = 1, S = 1, d = 2, k = 2.
        const auto ref = reference_c2ucb(env, lambda, [&](int t) {
            return std::sqrt(2.0 * std::log((1.0 + 2.0 * t / lambda) / delta)) + std::sqrt(lambda);
        });
        for (std::size_t t = 0; t < 3; ++t) {
            const auto& idx = log.rounds()[t].chosen.indices();
            EXPECT_EQ(idx[0], static_cast<std::size_t>(ref.chosen[t][0]));
            EXPECT_EQ(idx[1], static_cast<std::size_t>(ref.chosen[t][1]));
            EXPECT_NEAR(log.rounds()[t].cumulative_reward, ref.cumulative[t], 1e-12);
        }
    }
}

TEST(RunTrajectory, DiagnosticsAreConsistent) {
    ClusteredEnvConfig cfg;
    cfg.d = 5;
    cfg.N = 20;
    cfg.k = 3;
    cfg.T = 30;
    cfg.seed = 4;
    ClusteredEnvironment env(cfg, 1);
    PolicySpec spec{PolicyKind::C2UCB, 2.0, Schedule::theoretical(0.05), 1.0};
    const auto log = run_trajectory(spec, env, 5);
    const auto diag = summarize_diagnostics(log);
    EXPECT_EQ(diag.rounds, 30u);
    EXPECT_GT(diag.potential_sum, 0.0);
    EXPECT_TRUE(std::isfinite(diag.shadow_potential_sum));
    ASSERT_TRUE(diag.decomposition.has_value());
    EXPECT_NEAR(diag.decomposition->total(), *diag.pseudo_regret, 1e-9 * std::max(1.0, *diag.pseudo_regret));
    EXPECT_GE(*diag.pseudo_regret, -1e-12);
    for (const auto& c : diag.containment) EXPECT_TRUE(c.has_value());
    const auto report = check_potential_bounds(diag, env.params(), 2.0);
    EXPECT_TRUE(report.shadow.applies);
    EXPECT_FALSE(report.ordinary.applies);
    EXPECT_TRUE(report.pass());
}

TEST(PotentialBounds, HandEvaluatedSingleRound) {
    DiagnosticsRecord diag;
    diag.rounds = 1;
    diag.potential_sum = 1.0;  // lambda = 1, unit x: ||x||^2 = 1
    ProblemParams p;
    p.d = 1;
    p.k = 1;
    p.N = 1;
    const auto report = check_potential_bounds(diag, p, 1.0);
    EXPECT_TRUE(report.ordinary.applies);
    EXPECT_NEAR(report.ordinary.rhs, 2.0 * std::log(2.0), 1e-15);
    EXPECT_TRUE(report.pass());
    EXPECT_NEAR(report.ordinary.slack(), 1.38629436111989061883446424292 - 1.0, 1e-15);
    DiagnosticsRecord zero;
    zero.rounds = 5;
    EXPECT_TRUE(check_potential_bounds(zero, p, 1.0).pass());
}

TEST(RegretEnvelope, MonotoneInTAndRejectsThompson) {
    ProblemParams p;
    p.d = 5;
    p.N = 20;
    p.k = 3;
    p.T = 50;
    PolicySpec spec{PolicyKind::PC2UCB, 1.0, Schedule::theoretical(0.05), 1.0};
    double prev = 0.0;
    for (std::size_t T = 1; T <= 100; ++T) {
        const auto e = regret_envelope(p, spec, 0.05, T);
        EXPECT_GE(e.total(), prev);
        EXPECT_NEAR(e.algorithm, 2.0 * e.estimation, 1e-12 * e.algorithm);
        prev = e.total();
    }
    spec.kind = PolicyKind::ArmWiseTS;
    EXPECT_THROW(regret_envelope(p, spec, 0.05, 10), std::invalid_argument);
}

TEST(RegretEnvelope, NoiseFreeRunsStayInside) {
    // R = 0: theta_hat stays in the ellipsoid, so every run sits under the envelope.
    ClusteredEnvConfig cfg;
    cfg.d = 4;
    cfg.N = 12;
    cfg.k = 2;
    cfg.T = 20;
    cfg.seed = 8;
    std::vector<TrajectoryLog> logs;
    PolicySpec spec{PolicyKind::C2UCB, 1.0, Schedule::theoretical(0.05), 1.0};
    ProblemParams params;
    for (std::size_t trial = 0; trial < 20; ++trial) {
        ClusteredEnvironment env(cfg, trial);
        logs.push_back(run_trajectory(spec, env, trial));
        params = env.params();
    }
    params.R = 0.0;
    const auto rep = check_regret_envelope(logs, params, spec, 0.05);
    EXPECT_EQ(rep.fraction, 1.0);
    EXPECT_TRUE(rep.warnings.empty());
    PolicySpec constant{PolicyKind::C2UCB, 1.0, Schedule::constant(1.0), 1.0};
    EXPECT_FALSE(check_regret_envelope(logs, params, constant, 0.05).warnings.empty());
}

TEST(Summaries, MeansBestAndRunningAverage) {
    ExperimentConfig cfg;
    cfg.policies = {PolicyKind::Greedy};
    cfg.lambda_grid = {1.0, 2.0};
    cfg.trials = 2;
    std::vector<TrajectoryResult> results = {
        {PolicyKind::Greedy, 0, 0, 2.0, {1.0, 2.0}, std::nullopt},
        {PolicyKind::Greedy, 0, 1, 4.0, {3.0, 4.0}, std::nullopt},
        {PolicyKind::Greedy, 1, 0, 5.0, {2.0, 5.0}, std::nullopt},
        {PolicyKind::Greedy, 1, 1, 5.0, {1.0, 5.0}, std::nullopt},
    };
    const auto s = tune_and_summarize(cfg, results);
    ASSERT_EQ(s.cells.size(), 2u);
    EXPECT_EQ(s.cells[0].mean, 3.0);
    EXPECT_EQ(s.cells[1].mean, 5.0);
    EXPECT_TRUE(s.cells[1].best);
    EXPECT_FALSE(s.cells[0].best);
    const auto& p = s.of(PolicyKind::Greedy);
    EXPECT_EQ(p.best_mean, 5.0);
    EXPECT_EQ(p.best_cell, 1u);
    ASSERT_EQ(p.running_average.size(), 2u);
    EXPECT_EQ(p.running_average[0], 1.5);
    EXPECT_EQ(p.running_average[1], 5.0 / 2.0);
    std::ostringstream csv;
    write_summary_csv(csv, s);
    EXPECT_EQ(csv.str(), "policy,lambda,param2,mean_cum_reward,best\ngreedy,1,0,3,0\ngreedy,2,0,5,1\n");
}

TEST(Cells, GridShapes) {
    auto cfg = tiny_clustered();
    EXPECT_EQ(cells_for(cfg, PolicyKind::Greedy).size(), 2u);
    EXPECT_EQ(cells_for(cfg, PolicyKind::ArmWiseTS).size(), 4u);
    cfg.theoretical = true;
    const auto cells = cells_for(cfg, PolicyKind::RoundWiseTS);
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_EQ(make_policy_spec(cfg, PolicyKind::RoundWiseTS, cells[0]).scale.mode,
              Schedule::Mode::TheoreticalRoundWise);
    EXPECT_EQ(make_policy_spec(cfg, PolicyKind::ArmWiseTS, cells[0]).scale.mode, Schedule::Mode::TheoreticalArmWise);
    EXPECT_EQ(make_policy_spec(cfg, PolicyKind::PC2UCB, cells[0]).scale.mode, Schedule::Mode::Theoretical);
}

TEST(TrajectoryCsv, FormatAndIdentities) {
    ClusteredEnvConfig cfg;
    cfg.d = 3;
    cfg.N = 8;
    cfg.k = 2;
    cfg.T = 4;
    ClusteredEnvironment env(cfg, 0);
    const auto log = run_trajectory({PolicyKind::C2UCB, 1.0, Schedule::theoretical(0.05), 1.0}, env, 1);
    std::ostringstream out;
    write_trajectory_csv(out, log);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "t,cum_reward,avg_reward,pseudo_regret,containment,potential_sum");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::istringstream f(line);
        std::string t, cum, avg, reg, cont, pot;
        std::getline(f, t, ',');
        std::getline(f, cum, ',');
        std::getline(f, avg, ',');
        std::getline(f, reg, ',');
        std::getline(f, cont, ',');
        std::getline(f, pot, ',');
        EXPECT_EQ(std::stoi(t), rows);
        EXPECT_EQ(std::stod(avg), std::stod(cum) / rows);
        EXPECT_TRUE(cont == "1" || cont == "0");
    }
    EXPECT_EQ(rows, 4);
    EXPECT_EQ(out.str().find('\r'), std::string::npos);
    EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}

TEST(Experiment, ConfigParsing) {
    const auto kv = KeyValueConfig::parse(
        "environment = clustered\nclustered.d = 4\nclustered.N = 30\nclustered.k = 3\nclustered.T = 6\n"
        "policies = c2ucb, awts\nlambda_grid = 0.5, 2\nscale_grid = 1\ntrials = 2\nseed = 5\n");
    const auto cfg = ExperimentConfig::from(kv);
    EXPECT_EQ(cfg.policies, (std::vector<PolicyKind>{PolicyKind::C2UCB, PolicyKind::ArmWiseTS}));
    EXPECT_EQ(cfg.clustered.N, 30u);
    EXPECT_EQ(cfg.trials, 2u);
    EXPECT_THROW(ExperimentConfig::from(KeyValueConfig::parse("clustered.dd = 4\n")), ConfigError);
    EXPECT_THROW(ExperimentConfig::from(KeyValueConfig::parse("trials = 0\n")), std::invalid_argument);
    EXPECT_THROW(ExperimentConfig::from(KeyValueConfig::parse("lambda_grid = \n")), std::invalid_argument);
    EXPECT_THROW(ExperimentConfig::from(KeyValueConfig::parse("schedule = fast\n")), ConfigError);
    const auto preset = ExperimentConfig::clustered_preset();
    EXPECT_EQ(preset.clustered.d, 11u);
    EXPECT_EQ(preset.clustered.N, 2000u);
    EXPECT_EQ(preset.clustered.k, 100u);
    EXPECT_EQ(preset.clustered.T, 10u);
    EXPECT_EQ(preset.trials, 5u);
    EXPECT_EQ(preset.c, 1.0);
    const auto promo = ExperimentConfig::promotion_preset(50, "f.bin", "r.bin");
    EXPECT_EQ(promo.promotion.num_promotions, 10u);
    EXPECT_EQ(promo.promotion.T, 20u);
    EXPECT_EQ(promo.promotion.resolved_users_per_round(), 5000u);
}

TEST(Experiment, OutputsIndependentOfThreadsAndOrder) {
    const auto cfg = tiny_clustered();
    const auto d1 = fresh_dir("t1"), d4 = fresh_dir("t4");
    run_experiment(cfg, {1, d1, false});
    run_experiment(cfg, {4, d4, false});
    std::size_t files = 0;
    for (const auto& e : std::filesystem::directory_iterator(d1)) {
        ++files;
        EXPECT_EQ(slurp(e.path()), slurp(d4 / e.path().filename())) << e.path().filename();
    }
    // 5 policies: greedy 2 cells, others 4 cells; 3 trials; plus 3 summary files.
    EXPECT_EQ(files, (2 + 4 * 4) * 3 + 3u);

    // A single trajectory rerun in isolation reproduces its file.
    const auto spec = make_policy_spec(cfg, PolicyKind::ArmWiseTS, cells_for(cfg, PolicyKind::ArmWiseTS)[3]);
    EnvironmentFactory factory(cfg);
    auto env = factory.make(2);
    std::ostringstream csv;
    write_trajectory_csv(csv, run_trajectory(spec, *env, trajectory_seed(cfg.seed, PolicyKind::ArmWiseTS, 3, 2)));
    EXPECT_EQ(csv.str(), slurp(d1 / trajectory_file_name(PolicyKind::ArmWiseTS, 3, 2)));

    const auto report = diagnose_directory(d1);
    EXPECT_TRUE(report.ok());
    std::filesystem::remove_all(d1);
    std::filesystem::remove_all(d4);
}

TEST(Experiment, DiagnoseFlagsTruncatedFile) {
    auto cfg = tiny_clustered();
    cfg.policies = {PolicyKind::C2UCB};
    cfg.theoretical = true;
    const auto dir = fresh_dir("diag");
    run_experiment(cfg, {1, dir, false});
    EXPECT_TRUE(diagnose_directory(dir).ok());
    const auto victim = dir / trajectory_file_name(PolicyKind::C2UCB, 0, 0);
    std::string text = slurp(victim);
    text.erase(text.rfind('\n', text.size() - 2) + 1);
    std::ofstream(victim, std::ios::binary) << text;
    const auto report = diagnose_directory(dir);
    EXPECT_FALSE(report.ok());
    EXPECT_EQ(report.failures, 1u);
    std::filesystem::remove_all(dir);
}

TEST(Experiment, SyntheticPromotionRuns) {
    ExperimentConfig cfg;
    cfg.environment = EnvironmentKind::PromotionSynthetic;
    cfg.planted.num_users = 200;
    cfg.planted.num_movies = 60;
    cfg.min_raters = 10;
    cfg.max_raters = 100;
    cfg.svd_rank = 4;
    cfg.promotion.k = 3;
    cfg.promotion.num_promotions = 2;
    cfg.promotion.T = 4;
    cfg.policies = {PolicyKind::PC2UCB};
    cfg.lambda_grid = {1.0};
    cfg.scale_grid = {1.0};
    cfg.trials = 2;
    const auto result = run_experiment(cfg, {1, std::nullopt, true});
    EXPECT_EQ(result.params.d, 10u);
    EXPECT_EQ(result.params.N, 600u);
    ASSERT_TRUE(result.feature_report.has_value());
    EXPECT_EQ(result.feature_report->test_movies.size(), 2u);
    for (const auto& t : result.trajectories) {
        ASSERT_TRUE(t.log.has_value());
        EXPECT_EQ(t.log->size(), 4u);
        EXPECT_NEAR(regret_decomposition(*t.log).total(), pseudo_regret(*t.log),
                    1e-9 * std::max(1.0, pseudo_regret(*t.log)));
    }
}
