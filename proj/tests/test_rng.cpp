#include "cls/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

using cls::Rng;

TEST(Rng, SameSeedSameSequence) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Rng, StreamsDependOnEveryKey) {
    std::set<std::uint64_t> firsts;
    for (std::uint64_t i = 0; i < 4; ++i)
        for (std::uint64_t j = 0; j < 4; ++j) firsts.insert(Rng::stream(7, {i, j})());
    EXPECT_EQ(firsts.size(), 16u);
    EXPECT_NE(Rng::stream(7, {1, 2})(), Rng::stream(7, {2, 1})());
    EXPECT_NE(Rng::stream(7, {1})(), Rng::stream(8, {1})());
}

TEST(Rng, DeriveSeedIsStable) {
    EXPECT_EQ(cls::derive_seed(1, {2, 3}), cls::derive_seed(1, {2, 3}));
    EXPECT_NE(cls::derive_seed(1, {2, 3}), cls::derive_seed(1, {2, 3, 0}));
}

TEST(Rng, UniformInUnitInterval) {
    Rng rng(1);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / n, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n) + 1e-3);
}

TEST(Rng, NormalMoments) {
    Rng rng(2);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s1 += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    EXPECT_NEAR(s1 / n, 0.0, 0.01);
    EXPECT_NEAR(s2 / n, 1.0, 0.015);
    EXPECT_NEAR(s4 / n, 3.0, 0.08);
}

TEST(Rng, IndexIsUniformAndInRange) {
    Rng rng(3);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto v = rng.index(7);
        ASSERT_LT(v, 7u);
        ++counts[v];
    }
    for (int c : counts) EXPECT_NEAR(c, n / 7, 5 * std::sqrt(n / 7.0));
    EXPECT_THROW(rng.index(0), std::invalid_argument);
}
