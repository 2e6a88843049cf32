#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "bubbleid/fuse.hpp"
#include "bubbleid/kernels/fusion.hpp"
#include "oracles.hpp"

using namespace bubbleid;

namespace {

Mask random_foreground(std::mt19937_64& rng, int w, int h) {
    Mask fg(w, h, 0);
    const int blobs = 1 + static_cast<int>(rng() % 5);
    for (int b = 0; b < blobs; ++b) {
        const double cr = rng() % h, cc = rng() % w, rad = 2 + rng() % 9;
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if ((r - cr) * (r - cr) + (c - cc) * (c - cc) <= rad * rad) fg(r, c) = 1;
            }
        }
    }
    for (int i = 0; i < w * h / 20; ++i) fg(rng() % h, rng() % w) ^= 1;
    return fg;
}

LabelMap random_seeds(std::mt19937_64& rng, const Mask& fg) {
    LabelMap s(fg.width(), fg.height(), 0);
    const int n = static_cast<int>(rng() % 5);
    for (int id = 1; id <= n; ++id) {
        const int r0 = rng() % fg.height(), c0 = rng() % fg.width();
        const int side = 1 + rng() % 4;
        for (int r = r0; r < std::min(fg.height(), r0 + side); ++r) {
            for (int c = c0; c < std::min(fg.width(), c0 + side); ++c) s(r, c) = static_cast<Label>(id);
        }
    }
    return s;
}

}  // namespace

TEST(GrowInstances, MatchesBruteForceOracle) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const int w = 1 + rng() % 32, h = 1 + rng() % 32;
        const Mask fg = random_foreground(rng, w, h);
        const LabelMap seeds = random_seeds(rng, fg);
        const GrowResult got = grow_instances(seeds, fg);
        const oracle::Grown ref = oracle::grow(seeds, fg);
        ASSERT_EQ(got.labels, ref.labels) << "trial " << trial;
        ASSERT_EQ(got.unreached, ref.unreached) << "trial " << trial;
    }
}

TEST(GrowInstances, SeedsEqualToForegroundAreFixedPoint) {
    std::mt19937_64 rng(1);
    const LabelMap seeds = oracle::random_labels(rng, 32, 5);
    const GrowResult g = grow_instances(seeds, foreground(seeds));
    EXPECT_EQ(g.labels, seeds);
    EXPECT_EQ(g.unreached, 0u);
}

TEST(GrowInstances, SingleSeedFloodsDisk) {
    Mask fg(21, 21, 0);
    for (int r = 0; r < 21; ++r) {
        for (int c = 0; c < 21; ++c) {
            if ((r - 10) * (r - 10) + (c - 10) * (c - 10) <= 100) fg(r, c) = 1;
        }
    }
    LabelMap seeds(21, 21, 0);
    for (int r = 9; r <= 11; ++r) {
        for (int c = 9; c <= 11; ++c) seeds(r, c) = 4;
    }
    const GrowResult g = grow_instances(seeds, fg);
    for (int r = 0; r < 21; ++r) {
        for (int c = 0; c < 21; ++c) EXPECT_EQ(g.labels(r, c), fg(r, c) ? 4u : 0u);
    }
    EXPECT_EQ(g.unreached, 0u);
}

TEST(GrowInstances, TwoPointSeedsSplitAtBisector) {
    const Mask fg(40, 20, 1);
    LabelMap seeds(40, 20, 0);
    seeds(7, 9) = 1;
    seeds(12, 28) = 2;
    const GrowResult g = grow_instances(seeds, fg);
    for (int r = 0; r < 20; ++r) {
        for (int c = 0; c < 40; ++c) {
            const Label l = g.labels(r, c);
            ASSERT_TRUE(l == 1 || l == 2);
            const double d1 = std::hypot(r - 7.0, c - 9.0), d2 = std::hypot(r - 12.0, c - 28.0);
            // signed distance from the perpendicular bisector
            const double off = (d1 * d1 - d2 * d2) / (2 * std::hypot(5.0, 19.0));
            if (off < -1) EXPECT_EQ(l, 1u);
            if (off > 1) EXPECT_EQ(l, 2u);
        }
    }
}

TEST(GrowInstances, SeedsOutsideForegroundPreserved) {
    Mask fg(10, 10, 0);
    for (int c = 0; c < 5; ++c) fg(5, c) = 1;
    LabelMap seeds(10, 10, 0);
    seeds(0, 9) = 3;  // outside the foreground, touches nothing
    seeds(4, 0) = 2;  // outside, but adjacent to the strip
    const GrowResult g = grow_instances(seeds, fg);
    EXPECT_EQ(g.labels(0, 9), 3u);
    EXPECT_EQ(g.labels(4, 0), 2u);
    for (int c = 0; c < 5; ++c) EXPECT_EQ(g.labels(5, c), 2u);
    EXPECT_EQ(g.unreached, 0u);
}

TEST(GrowInstances, UnreachedCounted) {
    Mask fg(12, 12, 0);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) fg(r, c) = 1;
    }
    fg(10, 10) = 1;
    LabelMap seeds(12, 12, 0);
    seeds(1, 1) = 1;
    const GrowResult g = grow_instances(seeds, fg);
    EXPECT_EQ(g.unreached, 1u);
    EXPECT_EQ(g.labels(10, 10), 0u);
    EXPECT_EQ(g.labels(2, 2), 1u);
}

TEST(GrowInstances, IdempotentAndMonotone) {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const Mask fg = random_foreground(rng, 32, 32);
        const LabelMap seeds = random_seeds(rng, fg);
        const LabelMap once = grow_instances(seeds, fg).labels;
        EXPECT_EQ(grow_instances(once, fg).labels, once);
        for (std::size_t i = 0; i < seeds.size(); ++i) {
            if (seeds.pixels()[i] != 0) EXPECT_EQ(once.pixels()[i], seeds.pixels()[i]);
        }
    }
}

TEST(GrowInstances, DimensionMismatch) {
    try {
        grow_instances(LabelMap(4, 4, 0), Mask(5, 4, 0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
    }
}

TEST(NearestSeed, SerialAndParallelAgree) {
    std::mt19937_64 rng(12);
    std::vector<Pixel> targets;
    std::vector<int> group;
    std::vector<std::vector<kernels::SeedPixel>> cand(3);
    for (int g = 0; g < 3; ++g) {
        for (int i = 0; i < 50; ++i) {
            cand[g].push_back({int(rng() % 100), int(rng() % 100), Label(1 + rng() % 4)});
        }
    }
    cand[2].clear();
    for (int i = 0; i < 2000; ++i) {
        targets.push_back({int(rng() % 100), int(rng() % 100)});
        group.push_back(int(rng() % 3));
    }
    const auto a = kernels::nearest_seed_serial(targets, group, cand);
    EXPECT_EQ(a, kernels::nearest_seed_omp(targets, group, cand));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (group[i] == 2) EXPECT_EQ(a[i], 0u);
    }
}

TEST(WeightMap, MatchesDirectEvaluation) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 60; ++trial) {
        const LabelMap m = oracle::random_labels(rng, 32, 5);
        const Raster<float> w = weight_map(m);
        const auto ref = oracle::weights(m, 10.0);
        ASSERT_EQ(std::vector<float>(w.pixels().begin(), w.pixels().end()), ref) << "trial " << trial;
    }
}

TEST(WeightMap, OnlyThreeValuesAndOneExactlyInside) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        const LabelMap m = oracle::random_labels(rng, 48, 8);
        const Raster<float> w = weight_map(m);
        for (std::size_t i = 0; i < m.size(); ++i) {
            const float v = w.pixels()[i];
            EXPECT_TRUE(v == 0.05f || v == 1.0f || v == 10.0f);
            EXPECT_EQ(v == 1.0f, m.pixels()[i] != 0);
        }
    }
}

TEST(WeightMap, SingleBubble) {
    LabelMap m(30, 30, 0);
    for (int r = 10; r < 20; ++r) {
        for (int c = 10; c < 20; ++c) m(r, c) = 1;
    }
    const Raster<float> w = weight_map(m);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(w.pixels()[i], m.pixels()[i] ? 1.0f : 0.05f);
}

TEST(WeightMap, GapBetweenSquaresFourPixelsApart) {
    // squares at cols 10..19 and 24..33; gap cols 20..23
    LabelMap m(64, 40, 0);
    for (int r = 10; r < 30; ++r) {
        for (int c = 10; c < 20; ++c) m(r, c) = 1;
        for (int c = 24; c < 34; ++c) m(r, c) = 2;
    }
    const Raster<float> w = weight_map(m);
    for (int r = 10; r < 30; ++r) {
        for (int c = 20; c < 24; ++c) EXPECT_EQ(w(r, c), 10.0f);
    }
    EXPECT_EQ(w(20, 60), 0.05f);  // far from the pair
    EXPECT_EQ(w(0, 0), 0.05f);
}

TEST(WeightMap, SerialAndParallelAgree) {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        const LabelMap m = oracle::random_labels(rng, 64, 10);
        EXPECT_EQ(kernels::weight_map_serial(m, 10.0, {}), kernels::weight_map_omp(m, 10.0, {}));
    }
}
