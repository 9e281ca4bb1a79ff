#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pmfsim/rng.hpp"

using namespace pmfsim;

TEST(Stream, DeterministicForEqualSeeds) {
    Stream a(123, 4), b(123, 4);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Stream, DistinctStreamsDiffer) {
    Stream a(123, 0), b(123, 1), c(124, 0);
    int equal_ab = 0, equal_ac = 0;
    for (int i = 0; i < 64; ++i) {
        const std::uint64_t x = a.next_u64();
        equal_ab += x == b.next_u64();
        equal_ac += x == c.next_u64();
    }
    EXPECT_EQ(equal_ab, 0);
    EXPECT_EQ(equal_ac, 0);
}

TEST(Stream, DoublesAreInUnitInterval) {
    Stream s(9);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double x = s.next_double();
        ASSERT_GE(x, 0.0);
        ASSERT_LT(x, 1.0);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    EXPECT_LT(lo, 0.01); // covers the range
    EXPECT_GT(hi, 0.99);
    Stream t(9);
    for (int i = 0; i < 1000; ++i) {
        const double x = t.next_double_open();
        ASSERT_GT(x, 0.0);
        ASSERT_LE(x, 1.0);
    }
}

TEST(Stream, NormalMomentsMatch) {
    Stream s(31415);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = s.next_normal();
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    EXPECT_NEAR(mean, 0.0, 5.0 / std::sqrt(static_cast<double>(n)));
    EXPECT_NEAR(var, 1.0, 0.02);
}

TEST(Stream, PoissonDegenerateMeans) {
    Stream s(5);
    EXPECT_EQ(s.next_poisson(0.0), 0);
    EXPECT_EQ(s.next_poisson(-3.0), 0);
}

// Sample mean within 5 standard errors and variance/mean close to 1, for a
// small mean (inversion branch) and a large mean (rejection branch).
TEST(Stream, PoissonMomentsBothBranches) {
    for (const double mean : {0.5, 4.0, 25.0, 9000.0}) {
        Stream s(777);
        const int n = 1000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double x = static_cast<double>(s.next_poisson(mean));
            sum += x;
            sum2 += x * x;
        }
        const double sample_mean = sum / n;
        const double sample_var = (sum2 - n * sample_mean * sample_mean) / (n - 1);
        const double se = std::sqrt(mean / n);
        EXPECT_NEAR(sample_mean, mean, 5.0 * se) << "mean " << mean;
        EXPECT_GT(sample_var / mean, 0.9) << "mean " << mean;
        EXPECT_LT(sample_var / mean, 1.1) << "mean " << mean;
    }
}

TEST(Stream, PoissonIsDeterministicAcrossConstructions) {
    std::vector<long long> first;
    for (int i = 0; i < 50; ++i) {
        Stream s(42, static_cast<std::uint64_t>(i));
        first.push_back(s.next_poisson(123.4));
    }
    for (int i = 0; i < 50; ++i) {
        Stream s(42, static_cast<std::uint64_t>(i));
        EXPECT_EQ(s.next_poisson(123.4), first[static_cast<std::size_t>(i)]);
    }
}

TEST(DeriveSeed, MixesBothArguments) {
    EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
    EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
    EXPECT_EQ(derive_seed(77, 3), derive_seed(77, 3));
}
