#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <unordered_set>

#include "smcheck/rng.hpp"
#include "smcheck/seeds.hpp"

using namespace smcheck;

TEST(SplitMix, ReferenceOutputs)
{
    // first two outputs of the reference splitmix64 generator seeded with 0
    EXPECT_EQ(splitmix64_mix(0x9E3779B97F4A7C15ULL), 0xE220A8397B1DCDAFULL);
    EXPECT_EQ(splitmix64_mix(2 * 0x9E3779B97F4A7C15ULL), 0x6E789E6AA1B965F4ULL);
}

TEST(SeedPlan, CounterFormula)
{
    const SeedPlan plan{12345};
    for (std::uint64_t i = 0; i < 100; ++i) {
        EXPECT_EQ(plan.seed(i), splitmix64_mix(12345 + (i + 1) * 0x9E3779B97F4A7C15ULL));
        EXPECT_EQ(derive_seed(plan, i), plan.seed(i));
    }
}

TEST(SeedPlan, SeedsAreDistinct)
{
    for (std::uint64_t master : {0ULL, 1ULL, 0xFFFFFFFFFFFFFFFFULL}) {
        const SeedPlan plan{master};
        std::unordered_set<std::uint64_t> seen;
        for (std::uint64_t i = 0; i < 100000; ++i) {
            EXPECT_TRUE(seen.insert(plan.seed(i)).second);
        }
    }
}

TEST(SeedPlan, SubstreamsDifferFromEachOtherAndTheBase)
{
    const SeedPlan plan{42};
    std::set<std::uint64_t> firsts{plan.seed(0)};
    for (std::uint64_t k = 0; k < 1000; ++k) {
        EXPECT_TRUE(firsts.insert(plan.substream(k).seed(0)).second) << k;
    }
    EXPECT_EQ(plan.substream(3).seed(9), SeedPlan{42}.substream(3).seed(9));
    EXPECT_NE(SeedPlan{43}.substream(3).seed(0), plan.substream(3).seed(0));
}

TEST(Rng, SameSeedSameStream)
{
    Rng a(99), b(99), c(100);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        differs = differs || x != c.next_u64();
    }
    EXPECT_TRUE(differs);
}

TEST(Rng, ReseedRestartsIncludingSpareNormal)
{
    Rng a(5);
    (void)a.normal();
    a.reseed(5);
    Rng b(5);
    EXPECT_EQ(a.state_hash(), b.state_hash());
    EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, UniformAndNormalMoments)
{
    Rng r(1);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = r.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(su / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
    EXPECT_NEAR(sn / n, 0.0, 5 / std::sqrt(double(n)));
    EXPECT_NEAR(sn2 / n, 1.0, 5 * std::sqrt(2.0 / n));
}

TEST(Rng, BinomialEdgesAndMean)
{
    Rng r(8);
    EXPECT_EQ(r.binomial(10, 0.0), 0u);
    EXPECT_EQ(r.binomial(10, 1.0), 10u);
    double s = 0;
    for (int i = 0; i < 20000; ++i) {
        s += static_cast<double>(r.binomial(20, 0.3));
    }
    EXPECT_NEAR(s / 20000, 6.0, 5 * std::sqrt(20 * 0.3 * 0.7 / 20000));
}
