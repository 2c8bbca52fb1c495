#include "cls/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace cls {

namespace {

constexpr std::uint64_t kEnvTag = 0x656e76;
constexpr std::uint64_t kPlantedTag = 0x706c61;
constexpr std::uint64_t kSplitTag = 0x73706c;
constexpr std::uint64_t kSvdTag = 0x737664;
constexpr std::uint64_t kPolicyTag = 0x706f6c;

std::size_t kind_index(PolicyKind kind) { return static_cast<std::size_t>(kind); }

ClusterLayout parse_layout(const std::string& s) {
    if (s == "contiguous") return ClusterLayout::Contiguous;
    if (s == "interleaved") return ClusterLayout::Interleaved;
    throw ConfigError("clustered.layout: expected contiguous or interleaved, got '" + s + "'");
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> grid(double low, double high, std::size_t n) {
    if (!(low > 0.0) || !(high > low) || !std::isfinite(high) || n < 2)
        throw std::invalid_argument("grid: need 0 < low < high and n >= 2");
    std::vector<double> out(n);
    const double step = std::log(high / low) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = low * std::exp(step * static_cast<double>(i));
    out.front() = low;
    out.back() = high;
    return out;
}

std::string_view to_string(EnvironmentKind kind) {
    switch (kind) {
        case EnvironmentKind::Clustered: return "clustered";
        case EnvironmentKind::PromotionSynthetic: return "promotion-synthetic";
        case EnvironmentKind::PromotionIngested: return "promotion-ingested";
    }
    return "?";
}

EnvironmentKind parse_environment_kind(std::string_view name) {
    for (auto k : {EnvironmentKind::Clustered, EnvironmentKind::PromotionSynthetic, EnvironmentKind::PromotionIngested})
        if (to_string(k) == name) return k;
    throw std::invalid_argument("unknown environment '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// ExperimentConfig

void ExperimentConfig::validate() const {
    if (policies.empty()) throw std::invalid_argument("config: no policies");
    if (lambda_grid.empty()) throw std::invalid_argument("config: lambda_grid is empty");
    if (!theoretical && scale_grid.empty()) throw std::invalid_argument("config: scale_grid is empty");
    if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
    for (double l : lambda_grid)
        if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("config: lambda values must be positive");
    for (double s : scale_grid)
        if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("config: scale values must be >= 0");
    if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("config: delta must lie in (0, 1]");
    if (!(c > 0.0) || !std::isfinite(c)) throw std::invalid_argument("config: c must be positive");
    switch (environment) {
        case EnvironmentKind::Clustered: clustered.validate(); break;
        case EnvironmentKind::PromotionSynthetic:
            promotion.validate();
            if (min_raters > max_raters) throw std::invalid_argument("config: min_raters > max_raters");
            if (svd_rank < 1) throw std::invalid_argument("config: svd.rank must be >= 1");
            break;
        case EnvironmentKind::PromotionIngested:
            promotion.validate();
            if (features_path.empty() || rewards_path.empty())
                throw std::invalid_argument("config: promotion-ingested needs ingest.features and ingest.rewards");
            break;
    }
}

ExperimentConfig ExperimentConfig::from(const KeyValueConfig& kv) {
    ExperimentConfig cfg;
    cfg.environment = parse_environment_kind(kv.get_string("environment", "clustered"));
    cfg.seed = kv.get_u64("seed", cfg.seed);
    cfg.trials = kv.get_size("trials", cfg.trials);
    if (kv.has("policies")) {
        cfg.policies.clear();
        for (const auto& name : kv.get_list("policies", {})) cfg.policies.push_back(parse_policy_kind(name));
    }
    cfg.lambda_grid = kv.get_doubles("lambda_grid", cfg.lambda_grid);
    cfg.scale_grid = kv.get_doubles("scale_grid", cfg.scale_grid);
    const auto schedule = kv.get_string("schedule", "constant");
    if (schedule != "constant" && schedule != "theoretical")
        throw ConfigError("schedule: expected constant or theoretical, got '" + schedule + "'");
    cfg.theoretical = schedule == "theoretical";
    cfg.delta = kv.get_double("delta", cfg.delta);
    cfg.c = kv.get_double("c", cfg.c);
    cfg.diagnostics = kv.get_bool("diagnostics", cfg.diagnostics);
    cfg.full_scores = kv.get_bool("full_scores", cfg.full_scores);

    auto& cl = cfg.clustered;
    cl.d = kv.get_size("clustered.d", cl.d);
    cl.N = kv.get_size("clustered.N", cl.N);
    cl.k = kv.get_size("clustered.k", cl.k);
    cl.T = kv.get_size("clustered.T", cl.T);
    cl.angle = kv.get_double("clustered.angle", cl.angle);
    cl.layout = parse_layout(kv.get_string("clustered.layout", "contiguous"));

    auto& pr = cfg.promotion;
    pr.k = kv.get_size("promotion.k", pr.k);
    pr.users_per_round = kv.get_size("promotion.users_per_round", pr.users_per_round);
    pr.num_promotions = kv.get_size("promotion.num_promotions", pr.num_promotions);
    pr.T = kv.get_size("promotion.T", pr.T);
    pr.R = kv.get_double("promotion.R", pr.R);
    pr.S = kv.get_double("promotion.S", pr.S);

    auto& pl = cfg.planted;
    pl.num_users = kv.get_size("planted.num_users", pl.num_users);
    pl.num_movies = kv.get_size("planted.num_movies", pl.num_movies);
    pl.rank = kv.get_size("planted.rank", pl.rank);
    pl.min_popularity = kv.get_double("planted.min_popularity", pl.min_popularity);
    pl.max_popularity = kv.get_double("planted.max_popularity", pl.max_popularity);
    pl.noise = kv.get_double("planted.noise", pl.noise);
    cfg.min_raters = kv.get_size("split.min_raters", cfg.min_raters);
    cfg.max_raters = kv.get_size("split.max_raters", cfg.max_raters);
    cfg.svd_rank = kv.get_size("svd.rank", cfg.svd_rank);
    cfg.svd_iters = kv.get_size("svd.iters", cfg.svd_iters);
    cfg.features_path = kv.get_string("ingest.features", "");
    cfg.rewards_path = kv.get_string("ingest.rewards", "");

    const auto unused = kv.unused_keys();
    if (!unused.empty()) {
        std::string msg = kv.source() + ": unknown key(s):";
        for (const auto& k : unused) msg += " " + k;
        throw ConfigError(msg);
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    return from(KeyValueConfig::load(path));
}

ExperimentConfig ExperimentConfig::clustered_preset() {
    ExperimentConfig cfg;
    cfg.environment = EnvironmentKind::Clustered;
    return cfg;
}

ExperimentConfig ExperimentConfig::promotion_preset(std::size_t k, std::filesystem::path features,
                                                    std::filesystem::path rewards) {
    ExperimentConfig cfg;
    cfg.environment = EnvironmentKind::PromotionIngested;
    cfg.promotion.k = k;
    cfg.promotion.users_per_round = 0;
    cfg.promotion.num_promotions = 10;
    cfg.promotion.T = 20;
    cfg.features_path = std::move(features);
    cfg.rewards_path = std::move(rewards);
    return cfg;
}

// ---------------------------------------------------------------------------
// Cells

std::vector<Cell> cells_for(const ExperimentConfig& cfg, PolicyKind kind) {
    std::vector<Cell> out;
    for (double lambda : cfg.lambda_grid) {
        if (kind == PolicyKind::Greedy) {
            out.push_back({out.size(), lambda, 0.0});
        } else if (cfg.theoretical) {
            out.push_back({out.size(), lambda, cfg.delta});
        } else {
            for (double s : cfg.scale_grid) out.push_back({out.size(), lambda, s});
        }
    }
    return out;
}

PolicySpec make_policy_spec(const ExperimentConfig& cfg, PolicyKind kind, const Cell& cell) {
    PolicySpec spec;
    spec.kind = kind;
    spec.lambda = cell.lambda;
    spec.c = cfg.c;
    if (kind == PolicyKind::Greedy) {
        spec.scale = Schedule::constant(0.0);
    } else if (!cfg.theoretical) {
        spec.scale = Schedule::constant(cell.param2);
    } else if (kind == PolicyKind::ArmWiseTS) {
        spec.scale = Schedule::theoretical_arm_wise(cell.param2);
    } else if (kind == PolicyKind::RoundWiseTS) {
        spec.scale = Schedule::theoretical_round_wise(cell.param2);
    } else {
        spec.scale = Schedule::theoretical(cell.param2);
    }
    spec.validate();
    return spec;
}

// ---------------------------------------------------------------------------
// Environments

EnvironmentFactory::EnvironmentFactory(const ExperimentConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::uint64_t env_seed = derive_seed(cfg_.seed, {kEnvTag});
    if (cfg_.environment == EnvironmentKind::Clustered) {
        clustered_ = cfg_.clustered;
        clustered_.seed = env_seed;
        params_ = ClusteredEnvironment(clustered_, 0).params();
    } else {
        promotion_ = cfg_.promotion;
        promotion_.seed = env_seed;
        if (cfg_.environment == EnvironmentKind::PromotionSynthetic) {
            Rng planted_rng = Rng::stream(cfg_.seed, {kPlantedTag});
            const auto ratings = make_planted_ratings(cfg_.planted, planted_rng);
            Rng split_rng = Rng::stream(cfg_.seed, {kSplitTag});
            auto split = split_train_test(ratings, promotion_.num_promotions, cfg_.min_raters, cfg_.max_raters,
                                          split_rng);
            Rng svd_rng = Rng::stream(cfg_.seed, {kSvdTag});
            auto build = build_user_features(split.train, cfg_.svd_rank, cfg_.svd_iters, svd_rng);
            build.report.test_movies = split.test_movies;
            build.report.test_rater_counts = split.test_rater_counts;
            users_ = std::make_shared<const UserFeatureTable>(std::move(build.table));
            rewards_ = std::make_shared<const RewardTable>(std::move(split.rewards));
            report_ = std::move(build.report);
        } else {
            users_ = std::make_shared<const UserFeatureTable>(read_feature_table(cfg_.features_path));
            rewards_ = std::make_shared<const RewardTable>(read_reward_table(cfg_.rewards_path));
        }
        for (const auto& e : rewards_->entries()) {
            if (e.user >= users_->num_users() || e.slot >= promotion_.num_promotions)
                throw std::invalid_argument("reward table references user " + std::to_string(e.user) + ", slot " +
                                            std::to_string(e.slot) + " outside the feature table / promotions");
        }
        params_ = PromotionEnvironment(promotion_, users_, rewards_, 0).params();
    }
    params_.delta = cfg_.delta;
}

std::unique_ptr<Environment> EnvironmentFactory::make(std::size_t trial) const {
    if (cfg_.environment == EnvironmentKind::Clustered) return std::make_unique<ClusteredEnvironment>(clustered_, trial);
    return std::make_unique<PromotionEnvironment>(promotion_, users_, rewards_, trial);
}

// ---------------------------------------------------------------------------
// Trajectories

std::uint64_t trajectory_seed(std::uint64_t base, PolicyKind kind, std::size_t cell, std::size_t trial) {
    return derive_seed(base, {kPolicyTag, kind_index(kind), cell, trial});
}

TrajectoryLog run_trajectory(const PolicySpec& spec, Environment& env, std::uint64_t policy_seed,
                             const RunOptions& options) {
    spec.validate();
    const ProblemParams& params = env.params();
    const std::optional<Vector> theta_star = env.theta_star();
    RidgeModel model(env.base_dim(), env.num_blocks(), spec.lambda);
    std::vector<ShadowState> shadows;
    if (options.diagnostics)
        for (std::size_t j = 0; j < env.num_blocks(); ++j) shadows.emplace_back(env.base_dim(), spec.lambda, params.k);

    TrajectoryLog log;
    for (std::size_t t = 1; t <= params.T; ++t) {
        const RoundContext ctx = env.round(t);
        Rng rng = Rng::stream(policy_seed, {t});
        const auto estimates = block_estimates(model);
        PolicyDecision decision = policy_step(spec, ctx, model, t, params, rng);

        RoundRecord rec;
        rec.t = t;
        const auto& chosen = decision.chosen.indices();
        const auto expected = env.expected_rewards(ctx);
        rec.optimal_value = optimal_value(ctx, expected);
        for (std::size_t arm : chosen) {
            const std::size_t block = ctx.block_of(arm);
            const auto x = ctx.feature(arm);
            rec.scores.push_back(decision.scores[arm]);
            rec.estimates.push_back(estimates[block].dot(x));
            rec.rewards.push_back(env.reward(ctx, arm));
            rec.expected.push_back(expected[arm]);
            const double w2 = model.block(block).width_squared(x);
            rec.width_sq_sum += w2;
            rec.width_sum += std::sqrt(w2);
            if (options.diagnostics) rec.shadow_width_sq_sum += shadows[block].width_squared(x);
        }
        if (options.diagnostics && theta_star) {
            rec.estimation_error = model.norm(model.theta_hat() - *theta_star);
            rec.confidence_radius = beta(static_cast<double>(t), options.delta, params, spec.lambda);
        }
        for (std::size_t i = 0; i < chosen.size(); ++i) {
            const std::size_t block = ctx.block_of(chosen[i]);
            const auto x = ctx.feature(chosen[i]);
            model.update(block, x, rec.rewards[i]);
            if (options.diagnostics) shadows[block].update(x);
        }
        rec.chosen = std::move(decision.chosen);
        if (options.full_scores) rec.all_scores = std::move(decision.scores);
        log.append(std::move(rec));
    }
    return log;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryLog& log) {
    out << "t,cum_reward,avg_reward,pseudo_regret,containment,potential_sum\n";
    const bool truth = log.has_ground_truth();
    const auto increments = truth ? pseudo_regret_increments(log) : std::vector<double>{};
    double regret = 0.0;
    double potential = 0.0;
    for (std::size_t i = 0; i < log.size(); ++i) {
        const auto& r = log.rounds()[i];
        potential += r.width_sq_sum;
        out << r.t << ',' << format_double(r.cumulative_reward) << ','
            << format_double(r.cumulative_reward / static_cast<double>(r.t)) << ',';
        if (truth) {
            regret += increments[i];
            out << format_double(regret);
        } else {
            out << "NA";
        }
        out << ',';
        if (r.estimation_error && r.confidence_radius)
            out << (*r.estimation_error <= *r.confidence_radius ? '1' : '0');
        else
            out << "NA";
        out << ',' << format_double(potential) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Summaries

const PolicySummary& ExperimentSummary::of(PolicyKind kind) const {
    for (const auto& p : policies)
        if (p.policy == kind) return p;
    throw std::out_of_range("summary has no policy " + std::string(to_string(kind)));
}

ExperimentSummary tune_and_summarize(const ExperimentConfig& cfg, const std::vector<TrajectoryResult>& results) {
    ExperimentSummary out;
    for (PolicyKind kind : cfg.policies) {
        const auto cells = cells_for(cfg, kind);
        const std::size_t first = out.cells.size();
        for (const auto& cell : cells) out.cells.push_back({kind, cell, {}, 0.0, false});
        for (const auto& r : results) {
            if (r.policy != kind) continue;
            out.cells.at(first + r.cell).trial_rewards.push_back(r.cumulative_reward);
        }
        PolicySummary ps{kind, 0, 0.0, 0.0, {}};
        for (std::size_t i = 0; i < cells.size(); ++i) {
            auto& cs = out.cells[first + i];
            const auto& v = cs.trial_rewards;
            cs.mean = v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            if (i == 0 || cs.mean > ps.best_mean) {
                ps.best_cell = i;
                ps.best_mean = cs.mean;
            }
        }
        auto& best = out.cells[first + ps.best_cell];
        best.best = true;
        const auto& v = best.trial_rewards;
        if (v.size() > 1) {
            double ss = 0.0;
            for (double x : v) ss += (x - ps.best_mean) * (x - ps.best_mean);
            ps.best_standard_error = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
        }
        std::size_t n = 0;
        for (const auto& r : results) {
            if (r.policy != kind || r.cell != ps.best_cell) continue;
            if (ps.running_average.size() < r.cumulative_by_round.size())
                ps.running_average.resize(r.cumulative_by_round.size(), 0.0);
            for (std::size_t t = 0; t < r.cumulative_by_round.size(); ++t)
                ps.running_average[t] += r.cumulative_by_round[t] / static_cast<double>(t + 1);
            ++n;
        }
        for (double& a : ps.running_average) a /= static_cast<double>(n);
        out.policies.push_back(std::move(ps));
    }
    return out;
}

void write_summary_csv(std::ostream& out, const ExperimentSummary& summary) {
    out << "policy,lambda,param2,mean_cum_reward,best\n";
    for (const auto& c : summary.cells)
        out << to_string(c.policy) << ',' << format_double(c.cell.lambda) << ',' << format_double(c.cell.param2) << ','
            << format_double(c.mean) << ',' << (c.best ? 1 : 0) << '\n';
}

void write_running_average_csv(std::ostream& out, const ExperimentSummary& summary) {
    out << "policy,t,avg_reward\n";
    for (const auto& p : summary.policies)
        for (std::size_t t = 0; t < p.running_average.size(); ++t)
            out << to_string(p.policy) << ',' << t + 1 << ',' << format_double(p.running_average[t]) << '\n';
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << contents;
    if (!f) throw std::runtime_error("error writing " + path.string());
}

std::string params_text(const ProblemParams& p, const ExperimentConfig& cfg) {
    std::ostringstream s;
    s << "d = " << p.d << "\nN = " << p.N << "\nk = " << p.k << "\nT = " << p.T << "\nR = " << format_double(p.R)
      << "\nS = " << format_double(p.S) << "\ndelta = " << format_double(p.delta)
      << "\nschedule = " << (cfg.theoretical ? "theoretical" : "constant") << "\nc = " << format_double(cfg.c)
      << "\ntrials = " << cfg.trials << '\n';
    return s.str();
}

}  // namespace

std::string trajectory_file_name(PolicyKind kind, std::size_t cell, std::size_t trial) {
    return "trajectory_" + std::string(to_string(kind)) + "_" + std::to_string(cell) + "_" + std::to_string(trial) +
           ".csv";
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunControl& control) {
    const EnvironmentFactory factory(cfg);
    ExperimentResult result;
    result.params = factory.params();
    result.feature_report = factory.feature_report();

    struct Job {
        PolicyKind kind;
        Cell cell;
        std::size_t trial;
    };
    std::vector<Job> jobs;
    for (PolicyKind kind : cfg.policies)
        for (const auto& cell : cells_for(cfg, kind))
            for (std::size_t trial = 0; trial < cfg.trials; ++trial) jobs.push_back({kind, cell, trial});

    if (control.out_dir) std::filesystem::create_directories(*control.out_dir);
    result.trajectories.resize(jobs.size());
    const RunOptions options{cfg.diagnostics, cfg.full_scores, cfg.delta};

    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            try {
                const Job& job = jobs[i];
                auto env = factory.make(job.trial);
                const PolicySpec spec = make_policy_spec(cfg, job.kind, job.cell);
                TrajectoryLog log =
                    run_trajectory(spec, *env, trajectory_seed(cfg.seed, job.kind, job.cell.index, job.trial), options);
                TrajectoryResult& r = result.trajectories[i];
                r.policy = job.kind;
                r.cell = job.cell.index;
                r.trial = job.trial;
                r.cumulative_reward = log.cumulative_reward();
                for (const auto& round : log.rounds()) r.cumulative_by_round.push_back(round.cumulative_reward);
                if (control.out_dir) {
                    std::ostringstream csv;
                    write_trajectory_csv(csv, log);
                    write_file(*control.out_dir / trajectory_file_name(job.kind, job.cell.index, job.trial), csv.str());
                }
                if (control.keep_logs) r.log = std::move(log);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(jobs.size());
            }
        }
    };
    const std::size_t threads = std::max<std::size_t>(1, std::min(control.threads, jobs.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);

    result.summary = tune_and_summarize(cfg, result.trajectories);
    if (control.out_dir) {
        std::ostringstream summary, running;
        write_summary_csv(summary, result.summary);
        write_running_average_csv(running, result.summary);
        write_file(*control.out_dir / "summary.csv", summary.str());
        write_file(*control.out_dir / "best_running_average.csv", running.str());
        write_file(*control.out_dir / "params.cfg", params_text(result.params, cfg));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Stored-output checks

namespace {

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, std::string& header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    std::getline(in, header);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto pos = line.find(',', start);
            fields.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

double to_double(const std::string& s, const std::filesystem::path& path) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) throw std::runtime_error(path.string() + ": bad number '" + s + "'");
    return v;
}

}  // namespace

DirectoryReport diagnose_directory(const std::filesystem::path& dir) {
    DirectoryReport report;
    auto kv = KeyValueConfig::load(dir / "params.cfg");
    ProblemParams params;
    params.d = kv.get_size("d", 1);
    params.N = kv.get_size("N", 1);
    params.k = kv.get_size("k", 1);
    params.T = kv.get_size("T", 1);
    params.R = kv.get_double("R", 1.0);
    params.S = kv.get_double("S", 1.0);
    params.delta = kv.get_double("delta", 0.05);
    const bool theoretical = kv.get_string("schedule", "constant") == "theoretical";
    const double c = kv.get_double("c", 1.0);
    kv.get_size("trials", 1);

    // Cell index -> (lambda, param2) per policy, in summary.csv row order.
    std::string header;
    const auto summary = read_csv(dir / "summary.csv", header);
    if (header != "policy,lambda,param2,mean_cum_reward,best") {
        report.lines.push_back("FAIL summary.csv: unexpected header");
        ++report.failures;
    }
    std::map<std::string, std::vector<std::pair<double, double>>> cells;
    for (const auto& row : summary) {
        if (row.size() != 5) throw std::runtime_error("summary.csv: expected 5 fields");
        cells[row[0]].emplace_back(to_double(row[1], "summary.csv"), to_double(row[2], "summary.csv"));
    }

    struct Group {
        std::size_t files = 0, contained = 0, known = 0, under = 0;
        double bound = 0.0;
        bool envelope = false;
    };
    std::map<std::string, Group> groups;

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("trajectory_", 0) == 0 && entry.path().extension() == ".csv") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        ++report.files;
        const auto stem = path.stem().string();  // trajectory_<policy>_<cell>_<trial>
        const auto p2 = stem.rfind('_');
        const auto p1 = stem.rfind('_', p2 - 1);
        const std::string policy = stem.substr(11, p1 - 11);
        const std::size_t cell = std::stoul(stem.substr(p1 + 1, p2 - p1 - 1));
        std::vector<std::string> problems;

        const auto rows = read_csv(path, header);
        if (header != "t,cum_reward,avg_reward,pseudo_regret,containment,potential_sum")
            problems.push_back("unexpected header");
        if (rows.size() != params.T)
            problems.push_back(std::to_string(rows.size()) + " rounds, expected " + std::to_string(params.T));
        bool all_contained = true, containment_known = !rows.empty();
        double potential = 0.0, regret = 0.0;
        bool regret_known = true;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            if (r.size() != 6) {
                problems.push_back("row " + std::to_string(i + 1) + " has " + std::to_string(r.size()) + " fields");
                break;
            }
            const double t = to_double(r[0], path);
            const double cum = to_double(r[1], path);
            const double avg = to_double(r[2], path);
            if (t != static_cast<double>(i + 1)) problems.push_back("round numbers are not 1..T");
            if (std::abs(avg - cum / t) > 1e-12 * std::max(1.0, std::abs(avg)))
                problems.push_back("avg_reward != cum_reward / t at t = " + r[0]);
            if (r[3] == "NA") regret_known = false;
            else regret = to_double(r[3], path);
            if (r[4] == "NA") containment_known = false;
            else all_contained = all_contained && r[4] == "1";
            potential = to_double(r[5], path);
        }
        auto cell_it = cells.find(policy);
        if (cell_it == cells.end() || cell >= cell_it->second.size()) {
            problems.push_back("no summary row for this cell");
        } else {
            const double lambda = cell_it->second[cell].first;
            params.T = rows.size();
            if (lambda >= static_cast<double>(params.k) && potential > potential_bound(params.d, params.k, params.T))
                problems.push_back("potential sum " + format_double(potential) + " exceeds 2d log(1 + kT/d)");
            Group& g = groups[policy + "_" + std::to_string(cell)];
            ++g.files;
            if (containment_known) {
                ++g.known;
                if (all_contained) ++g.contained;
            }
            const PolicyKind kind = parse_policy_kind(policy);
            if (theoretical && is_ucb(kind) && regret_known) {
                PolicySpec spec;
                spec.kind = kind;
                spec.lambda = lambda;
                spec.c = c;
                g.bound = regret_envelope(params, spec, params.delta, params.T).total();
                g.envelope = true;
                if (regret <= g.bound) ++g.under;
            }
            params.T = kv.get_size("T", 1);
        }
        for (const auto& msg : problems) report.lines.push_back("FAIL " + path.filename().string() + ": " + msg);
        if (!problems.empty()) ++report.failures;
    }
    for (const auto& [name, g] : groups) {
        std::string line = name + ": " + std::to_string(g.files) + " trajectories";
        if (g.known > 0)
            line += ", all-round containment " + std::to_string(g.contained) + "/" + std::to_string(g.known);
        if (g.envelope)
            line += ", under envelope " + format_double(g.bound) + ": " + std::to_string(g.under) + "/" +
                    std::to_string(g.files);
        report.lines.push_back(line);
    }
    if (report.files == 0) report.lines.push_back("FAIL no trajectory files in " + dir.string());
    return report;
}

}  // namespace cls
