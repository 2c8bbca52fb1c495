#include "cls/ingest.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <unordered_map>

namespace cls {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::uint32_t intern(std::unordered_map<std::string, std::uint32_t>& index, std::vector<std::string>& ids,
                     std::string_view raw) {
    auto [it, inserted] = index.try_emplace(std::string(raw), static_cast<std::uint32_t>(ids.size()));
    if (inserted) ids.emplace_back(raw);
    return it->second;
}

bool on_half_star_grid(double r) {
    const double twice = 2.0 * r;
    return twice >= 1.0 && twice <= 10.0 && twice == std::round(twice);
}

}  // namespace

RatingsDataset parse_ratings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ratings file " + path.string());
    return parse_ratings(in, path.string());
}

RatingsDataset parse_ratings(std::istream& in, std::string_view source) {
    const std::string where(source);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(where + ": missing header line");
    const auto header = split_commas(trim(line));
    if (header.size() != 4 || header[0] != "userId" || header[1] != "movieId" || header[2] != "rating" ||
        header[3] != "timestamp")
        throw ParseError(where + ":1: expected header userId,movieId,rating,timestamp");

    RatingsDataset ds;
    std::unordered_map<std::string, std::uint32_t> users, movies;
    std::unordered_map<std::uint64_t, std::size_t> seen;  // (user, movie) -> line
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view text = trim(line);
        if (text.empty()) continue;
        const auto fields = split_commas(text);
        const auto fail = [&](const std::string& what) {
            return ParseError(where + ":" + std::to_string(line_no) + ": " + what);
        };
        if (fields.size() != 4) throw fail("expected 4 comma-separated fields");
        if (fields[0].empty() || fields[1].empty()) throw fail("empty user or movie id");
        double rating = 0.0;
        const auto* end = fields[2].data() + fields[2].size();
        auto [ptr, ec] = std::from_chars(fields[2].data(), end, rating);
        if (ec != std::errc() || ptr != end) throw fail("unparsable rating '" + std::string(fields[2]) + "'");
        if (!on_half_star_grid(rating)) throw fail("rating " + std::string(fields[2]) + " is off the half-star grid");
        if (fields[3].empty() ||
            !std::all_of(fields[3].begin(), fields[3].end(), [](char c) { return c >= '0' && c <= '9'; }))
            throw fail("malformed timestamp");

        const std::uint32_t u = intern(users, ds.user_ids, fields[0]);
        const std::uint32_t m = intern(movies, ds.movie_ids, fields[1]);
        const std::uint64_t key = (static_cast<std::uint64_t>(u) << 32) | m;
        auto [it, inserted] = seen.try_emplace(key, line_no);
        if (!inserted)
            throw fail("duplicate rating for user " + std::string(fields[0]) + " and movie " +
                       std::string(fields[1]) + " (lines " + std::to_string(it->second) + " and " +
                       std::to_string(line_no) + ")");
        ds.ratings.push_back({u, m, rating});
    }
    return ds;
}

TrainTestSplit split_train_test(const RatingsDataset& ds, std::size_t num_test, std::size_t min_raters,
                                std::size_t max_raters, Rng& rng) {
    std::vector<std::size_t> raters(ds.num_movies(), 0);
    for (const auto& r : ds.ratings) ++raters[r.movie];
    std::vector<std::uint32_t> eligible;
    for (std::uint32_t m = 0; m < raters.size(); ++m) {
        if (raters[m] >= min_raters && raters[m] <= max_raters) eligible.push_back(m);
    }
    if (eligible.size() < num_test)
        throw std::runtime_error("split_train_test: only " + std::to_string(eligible.size()) +
                                 " movies have a rater count in [" + std::to_string(min_raters) + ", " +
                                 std::to_string(max_raters) + "], need " + std::to_string(num_test));

    // Partial Fisher-Yates: the first num_test entries are a uniform sample.
    for (std::size_t i = 0; i < num_test; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.index(eligible.size() - i));
        std::swap(eligible[i], eligible[j]);
    }

    TrainTestSplit out;
    out.test_movies.assign(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(num_test));
    std::vector<int> slot_of(ds.num_movies(), -1);
    for (std::size_t s = 0; s < num_test; ++s) {
        slot_of[out.test_movies[s]] = static_cast<int>(s);
        out.test_rater_counts.push_back(raters[out.test_movies[s]]);
    }
    out.train.user_ids = ds.user_ids;
    out.train.movie_ids = ds.movie_ids;
    for (const auto& r : ds.ratings) {
        const int slot = slot_of[r.movie];
        if (slot < 0) {
            out.train.ratings.push_back(r);
        } else {
            out.rewards.set(r.user, static_cast<std::uint32_t>(slot), r.rating);
        }
    }
    return out;
}

Eigen::SparseMatrix<double, Eigen::RowMajor> rating_matrix(const RatingsDataset& ds) {
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(ds.ratings.size());
    for (const auto& r : ds.ratings)
        triplets.emplace_back(static_cast<Eigen::Index>(r.user), static_cast<Eigen::Index>(r.movie), r.rating);
    Eigen::SparseMatrix<double, Eigen::RowMajor> A(static_cast<Eigen::Index>(ds.num_users()),
                                                   static_cast<Eigen::Index>(ds.num_movies()));
    A.setFromTriplets(triplets.begin(), triplets.end());
    return A;
}

namespace {

Matrix orthonormal_basis(const Matrix& Y) {
    Eigen::HouseholderQR<Matrix> qr(Y);
    return qr.householderQ() * Matrix::Identity(Y.rows(), Y.cols());
}

}  // namespace

TruncatedSvd randomized_svd(const Eigen::SparseMatrix<double, Eigen::RowMajor>& A, std::size_t rank,
                            std::size_t power_iters, Rng& rng, std::size_t oversample) {
    const Eigen::Index m = A.rows();
    const Eigen::Index n = A.cols();
    const auto r = static_cast<Eigen::Index>(rank);
    if (rank < 1) throw std::invalid_argument("randomized_svd: rank must be >= 1");
    if (r > std::min(m, n))
        throw std::invalid_argument("randomized_svd: rank " + std::to_string(rank) + " exceeds matrix dimensions " +
                                    std::to_string(m) + " x " + std::to_string(n));
    const Eigen::Index width = std::min<Eigen::Index>(r + static_cast<Eigen::Index>(oversample), std::min(m, n));

    Matrix omega(n, width);
    for (Eigen::Index j = 0; j < width; ++j)
        for (Eigen::Index i = 0; i < n; ++i) omega(i, j) = rng.normal();

    Matrix Q = orthonormal_basis(A * omega);
    for (std::size_t it = 0; it < power_iters; ++it) {
        const Matrix Z = orthonormal_basis(A.transpose() * Q);
        Q = orthonormal_basis(A * Z);
    }
    const Matrix B = (A.transpose() * Q).transpose();  // width x n
    Eigen::BDCSVD<Matrix> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);

    TruncatedSvd out;
    out.U = Q * svd.matrixU().leftCols(r);
    out.sigma = svd.singularValues().head(r);
    out.V = svd.matrixV().leftCols(r);
    return out;
}

FeatureBuild build_user_features(const RatingsDataset& train, std::size_t rank, std::size_t power_iters, Rng& rng,
                                 std::size_t oversample) {
    const auto A = rating_matrix(train);
    const TruncatedSvd svd = randomized_svd(A, rank, power_iters, rng, oversample);

    FeatureBuild out;
    auto& F = out.table.features;
    const auto r = static_cast<Eigen::Index>(rank);
    F.resize(r + 1, A.rows());
    F.topRows(r) = (svd.U * svd.sigma.asDiagonal()).transpose();
    F.row(r).setConstant(out.report.constant_coordinate);

    const double max_norm = F.colwise().norm().maxCoeff();
    double scale = 1.0 / max_norm;
    // Rounding can leave the largest vector a few ulps above 1.
    while ((F * scale).colwise().norm().maxCoeff() > 1.0) scale = std::nextafter(scale, 0.0);
    F *= scale;

    const double total = A.squaredNorm();
    out.report.svd_rank = rank;
    out.report.power_iters = power_iters;
    out.report.oversample = oversample;
    out.report.explained_energy = total > 0.0 ? svd.sigma.squaredNorm() / total : 0.0;
    out.report.max_raw_norm = max_norm;
    out.report.scale = scale;
    return out;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

std::uint32_t get_u32(std::istream& in, const std::string& where) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError(where + ": truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

double get_f64(std::istream& in, const std::string& where) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw ParseError(where + ": truncated file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

void expect_magic(std::istream& in, const char* magic, const std::string& where) {
    char got[4];
    if (!in.read(got, 4) || std::memcmp(got, magic, 4) != 0)
        throw ParseError(where + ": bad magic, expected " + std::string(magic, 4));
}

void expect_end(std::istream& in, const std::string& where) {
    if (in.peek() != std::char_traits<char>::eof()) throw ParseError(where + ": trailing bytes");
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return in;
}

}  // namespace

void write_feature_table(const std::filesystem::path& path, const UserFeatureTable& table) {
    auto out = open_out(path);
    out.write("CLSF", 4);
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(table.num_users()));
    put_u32(out, static_cast<std::uint32_t>(table.dim()));
    for (Eigen::Index u = 0; u < table.features.cols(); ++u)
        for (Eigen::Index j = 0; j < table.features.rows(); ++j) put_f64(out, table.features(j, u));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

UserFeatureTable read_feature_table(const std::filesystem::path& path) {
    auto in = open_in(path);
    const std::string where = path.string();
    expect_magic(in, "CLSF", where);
    const std::uint32_t version = get_u32(in, where);
    if (version != 1) throw ParseError(where + ": unsupported version " + std::to_string(version));
    const std::uint32_t users = get_u32(in, where);
    const std::uint32_t d = get_u32(in, where);
    UserFeatureTable table;
    table.features.resize(d, users);
    for (std::uint32_t u = 0; u < users; ++u)
        for (std::uint32_t j = 0; j < d; ++j) table.features(j, u) = get_f64(in, where);
    expect_end(in, where);
    return table;
}

void write_reward_table(const std::filesystem::path& path, const RewardTable& table) {
    auto out = open_out(path);
    out.write("CLSR", 4);
    const auto entries = table.entries();
    put_u32(out, static_cast<std::uint32_t>(entries.size()));
    for (const auto& e : entries) {
        put_u32(out, e.user);
        put_u32(out, e.slot);
        put_f64(out, e.reward);
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

RewardTable read_reward_table(const std::filesystem::path& path) {
    auto in = open_in(path);
    const std::string where = path.string();
    expect_magic(in, "CLSR", where);
    const std::uint32_t count = get_u32(in, where);
    RewardTable table;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t user = get_u32(in, where);
        const std::uint32_t slot = get_u32(in, where);
        table.set(user, slot, get_f64(in, where));
    }
    expect_end(in, where);
    return table;
}

RatingsDataset make_planted_ratings(const PlantedRatingsConfig& cfg, Rng& rng) {
    if (cfg.num_users < 1 || cfg.num_movies < 1 || cfg.rank < 1)
        throw std::invalid_argument("make_planted_ratings: sizes must be positive");
    const auto n = static_cast<Eigen::Index>(cfg.num_users);
    const auto m = static_cast<Eigen::Index>(cfg.num_movies);
    const auto r = static_cast<Eigen::Index>(cfg.rank);
    Matrix users(r, n), movies(r, m);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < r; ++i) users(i, j) = rng.normal();
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < r; ++i) movies(i, j) = rng.normal();
    std::vector<double> popularity(cfg.num_movies);
    for (auto& p : popularity) p = rng.uniform(cfg.min_popularity, cfg.max_popularity);

    RatingsDataset ds;
    for (std::size_t u = 0; u < cfg.num_users; ++u) ds.user_ids.push_back(std::to_string(u + 1));
    for (std::size_t j = 0; j < cfg.num_movies; ++j) ds.movie_ids.push_back(std::to_string(j + 1));
    const double norm = 1.0 / std::sqrt(static_cast<double>(cfg.rank));
    for (Eigen::Index u = 0; u < n; ++u) {
        for (Eigen::Index j = 0; j < m; ++j) {
            const double affinity = users.col(u).dot(movies.col(j)) * norm;
            const double p = std::min(1.0, 2.0 * popularity[static_cast<std::size_t>(j)] / (1.0 + std::exp(-2.0 * affinity)));
            const double draw = rng.uniform();
            const double noise = rng.normal();
            if (draw >= p) continue;
            const double raw = 3.0 + affinity + cfg.noise * noise;
            const double snapped = std::clamp(std::round(2.0 * raw) / 2.0, 0.5, 5.0);
            ds.ratings.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(j), snapped});
        }
    }
    return ds;
}

}  // namespace cls
