#include "entrobench/error.hpp"
#include "entrobench/random.hpp"
#include "entrobench/raster.hpp"
#include "entrobench/threshold.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

using namespace entrobench;

namespace {

Histogram two_spikes() {
    Histogram h{std::vector<std::uint64_t>(256, 0)};
    h.counts[50] = 1000;
    h.counts[200] = 1000;
    return h;
}

std::vector<Criterion> all_criteria() {
    return {MaxEntropy{EntropyKind::shannon()}, MaxEntropy{EntropyKind::renyi(2.0)},
            MaxEntropy{EntropyKind::tsallis(2.0)}, CrossEntropy{}};
}

double param_of(const Criterion& c) {
    if (const auto* m = std::get_if<MaxEntropy>(&c)) return m->kind.parameter();
    return 1.0;
}

}  // namespace

TEST(ThresholdSet, RequiresStrictIncrease) {
    EXPECT_THROW(ThresholdSet({3, 3}), InvalidArgument);
    EXPECT_THROW(ThresholdSet({5, 2}), InvalidArgument);
    EXPECT_EQ(ThresholdSet({1, 4}).level(), 2u);
}

TEST(ClassDistribution, Examples) {
    const Histogram h{{2, 2, 0, 4}};
    const auto d = class_distribution(h, 0, 1);
    EXPECT_EQ(d.size(), 2u);
    EXPECT_EQ(d[0], 0.5);
    EXPECT_EQ(d[1], 0.5);
    const auto full = class_distribution(h, 0, 3);
    const auto n = normalize(h);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(full[i], n[i]);
    EXPECT_THROW(class_distribution(h, 2, 2), Undefined);
}

TEST(CriterionValue, HandValues) {
    const auto h = two_spikes();
    EXPECT_EQ(criterion_value(h, ThresholdSet({50}), MaxEntropy{EntropyKind::shannon()}), 0.0);
    EXPECT_EQ(criterion_value(h, ThresholdSet({120}), MaxEntropy{EntropyKind::tsallis(2.0)}), 0.0);
    const Histogram flat{{4, 4, 4, 4}};
    EXPECT_NEAR(criterion_value(flat, ThresholdSet({1}), MaxEntropy{EntropyKind::shannon()}),
                2.0 * std::numbers::ln2, 1e-12);
    EXPECT_NEAR(criterion_value(flat, ThresholdSet({1}), MaxEntropy{EntropyKind::shannon()}),
                1.386294, 1e-6);
    EXPECT_THROW(criterion_value(h, ThresholdSet({10}), MaxEntropy{EntropyKind::shannon()}),
                 Undefined);
}

TEST(CriterionValue, MatchesOracleTerms) {
    Rng rng(21);
    for (int i = 0; i < 20; ++i) {
        const auto counts = oracle::random_histogram(rng);
        const Histogram h{counts};
        for (const auto& c : all_criteria()) {
            const oracle::ClassTerms terms(counts, criterion_name(c), param_of(c));
            for (int trial = 0; trial < 20; ++trial) {
                std::vector<int> t{static_cast<int>(rng.below(120)), 0};
                t[1] = t[0] + 1 + static_cast<int>(rng.below(130));
                const double want = terms.value(t);
                if (std::isnan(want)) {
                    EXPECT_FALSE(feasible(h, ThresholdSet(t)));
                    continue;
                }
                EXPECT_NEAR(criterion_value(h, ThresholdSet(t), c), want,
                            1e-9 * std::max(1.0, std::abs(want)));
            }
        }
    }
}

TEST(CriterionValue, OrientationAndNames) {
    EXPECT_TRUE(minimizes(CrossEntropy{}));
    EXPECT_FALSE(minimizes(MaxEntropy{EntropyKind::renyi(2.0)}));
    EXPECT_EQ(oriented(CrossEntropy{}, 2.5), -2.5);
    EXPECT_EQ(oriented(MaxEntropy{EntropyKind::shannon()}, 2.5), 2.5);
    EXPECT_EQ(criterion_name(CrossEntropy{}), "cross");
    EXPECT_EQ(criterion_name(MaxEntropy{EntropyKind::tsallis(2.0)}), "tsallis");
}

TEST(CriterionProperty, ScaleInvariantForMaxEntropy) {
    Rng rng(22);
    for (int i = 0; i < 20; ++i) {
        const auto counts = oracle::random_histogram(rng);
        Histogram h{counts}, scaled{counts};
        const std::uint64_t m = 2 + rng.below(50);
        for (auto& c : scaled.counts) c *= m;
        for (const auto& c : all_criteria()) {
            if (minimizes(c)) continue;
            for (int trial = 0; trial < 10; ++trial) {
                const int a = static_cast<int>(rng.below(200));
                ThresholdSet t({a, a + 1 + static_cast<int>(rng.below(54))});
                if (!feasible(h, t)) continue;
                EXPECT_NEAR(criterion_value(h, t, c), criterion_value(scaled, t, c), 1e-12);
            }
        }
    }
}

TEST(Exhaustive, Examples) {
    const auto spikes = exhaustive_search(two_spikes(), 1, MaxEntropy{EntropyKind::shannon()});
    EXPECT_EQ(spikes.thresholds, ThresholdSet({50}));
    EXPECT_EQ(spikes.value, 0.0);

    const auto flat = exhaustive_search(Histogram{{4, 4, 4, 4}}, 1, MaxEntropy{EntropyKind::shannon()});
    EXPECT_EQ(flat.thresholds, ThresholdSet({1}));
    EXPECT_NEAR(flat.value, 2.0 * std::numbers::ln2, 1e-12);

    EXPECT_THROW(exhaustive_search(two_spikes(), 2, MaxEntropy{EntropyKind::shannon()}), Undefined);
    EXPECT_THROW(exhaustive_search(two_spikes(), 4, CrossEntropy{}), InvalidArgument);
}

TEST(Exhaustive, TwoRegionSceneSplitsMeans) {
    const auto scene = generate_scene(two_region_scene(64, 64, 0.0), 0);
    const auto h = histogram(scene.image);
    for (const auto& c : all_criteria()) {
        const auto r = exhaustive_search(h, 1, c);
        EXPECT_GE(r.thresholds[0], 60) << criterion_name(c);
        EXPECT_LE(r.thresholds[0], 179) << criterion_name(c);
        EXPECT_EQ(apply_thresholds(scene.image, r.thresholds), scene.truth);
    }
}

TEST(Exhaustive, MatchesBruteForceOracle) {
    Rng rng(23);
    for (int i = 0; i < 6; ++i) {
        const auto counts = oracle::random_histogram(rng);
        for (const auto& c : all_criteria()) {
            const oracle::ClassTerms terms(counts, criterion_name(c), param_of(c));
            for (std::size_t k : {1u, 2u}) {
                const auto want = terms.enumerate(k);
                const auto got = exhaustive_search(Histogram{counts}, k, c);
                const double tol = 1e-9 * std::max(1.0, std::abs(want.value));
                EXPECT_NEAR(got.value, want.value, tol) << criterion_name(c) << " k=" << k;
                // the returned tuple must also score the optimum under the oracle
                const double at_got = terms.value(std::vector<int>(got.thresholds.values().begin(),
                                                                   got.thresholds.values().end()));
                EXPECT_NEAR(at_got, want.value, tol);
            }
        }
    }
}

TEST(Heuristic, DeterministicAndValid) {
    Rng rng(24);
    const Histogram h{oracle::random_histogram(rng)};
    for (const auto& c : all_criteria()) {
        const auto a = heuristic_search(h, 4, c, 99, 2000);
        const auto b = heuristic_search(h, 4, c, 99, 2000);
        EXPECT_EQ(a.thresholds, b.thresholds);
        EXPECT_EQ(a.value, b.value);
        EXPECT_TRUE(feasible(h, a.thresholds));
        EXPECT_LE(a.evaluations, 2000u);
        EXPECT_NEAR(criterion_value(h, a.thresholds, c), a.value, 1e-12);
    }
    EXPECT_THROW(heuristic_search(h, 2, CrossEntropy{}, 1, 50), InvalidArgument);
    EXPECT_THROW(heuristic_search(h, 6, CrossEntropy{}, 1, 5000), InvalidArgument);
}

TEST(Heuristic, NeverBeatsExhaustive) {
    Rng rng(25);
    for (int i = 0; i < 5; ++i) {
        const Histogram h{oracle::random_histogram(rng)};
        for (const auto& c : all_criteria()) {
            for (std::size_t k : {1u, 2u, 3u}) {
                const auto ex = exhaustive_search(h, k, c);
                const auto he = heuristic_search(h, k, c, 7 + i, 1000 * k);
                EXPECT_LE(oriented(c, he.value), oriented(c, ex.value) + 1e-12);
            }
        }
    }
}

TEST(Heuristic, BeatsRandomSamplingAtLevelFive) {
    const auto scene = generate_scene(five_region_scene(128, 128, 8.0), 42);
    const auto h = histogram(scene.image);
    const std::size_t budget = 2000;
    for (const auto& c : all_criteria()) {
        const auto he = heuristic_search(h, 5, c, 3, budget);
        Rng rng(4);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t n = 0; n < budget; ++n) {
            std::vector<int> t;
            while (t.size() < 5) {
                const int v = static_cast<int>(rng.below(255));
                if (std::find(t.begin(), t.end(), v) == t.end()) t.push_back(v);
            }
            std::sort(t.begin(), t.end());
            const ThresholdSet ts(t);
            if (feasible(h, ts)) best = std::max(best, oriented(c, criterion_value(h, ts, c)));
        }
        EXPECT_GE(oriented(c, he.value), best) << criterion_name(c);
    }
}

TEST(ApplyThresholds, BoundaryConvention) {
    const GrayImage img(3, 1, std::vector<std::uint8_t>{0, 255, 50});
    const auto one = apply_thresholds(img, ThresholdSet({127}));
    EXPECT_EQ(one(0, 0), 0);
    EXPECT_EQ(one(1, 0), 1);
    const auto two = apply_thresholds(img, ThresholdSet({49, 149}));
    EXPECT_EQ(two(2, 0), 1);
}

TEST(ApplyThresholdsProperty, MonotonePartition) {
    std::vector<std::uint8_t> ramp(256);
    for (int i = 0; i < 256; ++i) ramp[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    const GrayImage img(256, 1, ramp);
    Rng rng(26);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<int> t;
        int at = -1;
        const std::size_t k = 1 + rng.below(5);
        for (std::size_t m = 0; m < k && at < 253; ++m) {
            at += 1 + static_cast<int>(rng.below(40));
            if (at > 254) break;
            t.push_back(at);
        }
        if (t.empty()) continue;
        const ThresholdSet ts(t);
        const auto labels = apply_thresholds(img, ts);
        for (int v = 0; v < 256; ++v) {
            std::size_t below = 0;
            for (int x : t) below += x < v;
            EXPECT_EQ(labels(static_cast<std::size_t>(v), 0), below);
        }
    }
}
