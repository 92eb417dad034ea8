#include "entrobench/entropy.hpp"
#include "entrobench/error.hpp"
#include "entrobench/random.hpp"
#include "oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace entrobench;

namespace {

const double kLn2 = std::numbers::ln2;

std::vector<double> product(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out;
    for (double x : a)
        for (double y : b) out.push_back(x * y);
    return out;
}

GrayImage uniform_image(std::uint64_t seed) {
    Rng rng(seed);
    GrayImage img(256, 256);
    for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(rng.below(256));
    return img;
}

}  // namespace

TEST(EntropyKind, RejectsParametersNearOne) {
    EXPECT_THROW(EntropyKind::renyi(1.0), InvalidArgument);
    EXPECT_THROW(EntropyKind::tsallis(1.0 + 1e-10), InvalidArgument);
    EXPECT_THROW(EntropyKind::renyi(0.0), InvalidArgument);
    EXPECT_THROW(EntropyKind::tsallis(-2.0), InvalidArgument);
    EXPECT_NO_THROW(EntropyKind::renyi(1.0 + 1e-6));
    EXPECT_EQ(EntropyKind::from_name("renyi", 3.0), EntropyKind::renyi(3.0));
    EXPECT_EQ(EntropyKind::from_name("shannon", 7.0), EntropyKind::shannon());
    EXPECT_THROW(EntropyKind::from_name("boltzmann", 2.0), InvalidArgument);
}

TEST(Histogram, Examples) {
    const GrayImage zero(5, 5, 0);
    const auto h = histogram(zero, 256);
    EXPECT_EQ(h.counts[0], 25u);
    EXPECT_EQ(h.total(), 25u);
    const auto two = histogram(GrayImage(2, 1, std::vector<std::uint8_t>{0, 255}), 2);
    EXPECT_EQ(two.counts, (std::vector<std::uint64_t>{1, 1}));
    EXPECT_THROW(histogram(zero, 3), InvalidArgument);
    EXPECT_THROW(histogram(zero, 512), InvalidArgument);
}

TEST(Histogram, BinningRule) {
    std::vector<std::uint8_t> all(256);
    for (int i = 0; i < 256; ++i) all[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
    const GrayImage ramp(256, 1, all);
    for (std::size_t bins : {2u, 4u, 16u, 64u, 256u}) {
        const auto h = histogram(ramp, bins);
        for (auto c : h.counts) EXPECT_EQ(c, 256u / bins);
    }
}

TEST(Histogram, UniformRandomPassesChiSquare) {
    const auto h = histogram(uniform_image(5), 256);
    const double expected = 65536.0 / 256.0;
    double chi2 = 0.0;
    for (auto c : h.counts) chi2 += std::pow(static_cast<double>(c) - expected, 2) / expected;
    // upper 0.001 quantile of chi-square with 255 dof
    EXPECT_LT(chi2, 330.5);
}

TEST(Normalize, Examples) {
    const auto p = normalize(Histogram{{3, 0, 1}});
    EXPECT_EQ(p[0], 0.75);
    EXPECT_EQ(p[1], 0.0);
    EXPECT_EQ(p[2], 0.25);
    EXPECT_THROW(normalize(Histogram{{0, 0}}), InvalidArgument);
    EXPECT_THROW(ProbDist({0.5, 0.6}), InvalidArgument);
    EXPECT_THROW(ProbDist({1.5, -0.5}), InvalidArgument);
}

TEST(Entropy, HandValues) {
    const ProbDist half({0.5, 0.5});
    EXPECT_NEAR(entropy(half, EntropyKind::shannon()), kLn2, 1e-15);
    EXPECT_NEAR(entropy(half, EntropyKind::renyi(2.0)), kLn2, 1e-15);
    EXPECT_NEAR(entropy(ProbDist({0.75, 0.25}), EntropyKind::renyi(2.0)), 0.470004, 1e-6);
    EXPECT_NEAR(entropy(ProbDist({0.25, 0.25, 0.25, 0.25}), EntropyKind::tsallis(2.0)), 0.75, 1e-15);
    const ProbDist point({1.0, 0.0, 0.0});
    for (const auto& k : {EntropyKind::shannon(), EntropyKind::renyi(0.5), EntropyKind::tsallis(3.0)})
        EXPECT_EQ(entropy(point, k), 0.0);
}

TEST(Entropy, AgreesWithOracle) {
    Rng rng(1);
    for (int i = 0; i < 200; ++i) {
        const auto p = oracle::random_dist(rng, 1 + rng.below(300));
        const ProbDist d(p);
        EXPECT_NEAR(entropy(d, EntropyKind::shannon()), oracle::shannon(p), 1e-12);
        for (double a : {0.3, 0.9, 1.5, 2.0, 4.0}) {
            EXPECT_NEAR(entropy(d, EntropyKind::renyi(a)), oracle::renyi(p, a), 1e-9);
            EXPECT_NEAR(entropy(d, EntropyKind::tsallis(a)), oracle::tsallis(p, a), 1e-9);
        }
    }
}

TEST(EntropyProperty, ShannonBoundedByLogN) {
    Rng rng(2);
    for (int i = 0; i < 10000; ++i) {
        const std::size_t n = 1 + rng.below(64);
        EXPECT_LE(entropy(ProbDist(oracle::random_dist(rng, n)), EntropyKind::shannon()),
                  std::log(static_cast<double>(n)) + 1e-12);
    }
}

TEST(EntropyProperty, LimitContinuity) {
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const ProbDist p(oracle::random_dist(rng, 2 + rng.below(200)));
        const double h = entropy(p, EntropyKind::shannon());
        for (double d : {-1e-6, 1e-6}) {
            EXPECT_NEAR(entropy(p, EntropyKind::renyi(1.0 + d)), h, 1e-4);
            EXPECT_NEAR(entropy(p, EntropyKind::tsallis(1.0 + d)), h, 1e-4);
        }
    }
}

TEST(EntropyProperty, RenyiNonIncreasingInAlpha) {
    Rng rng(4);
    const std::vector<double> alphas{0.1, 0.5, 0.99, 1.01, 2.0, 3.0, 10.0};
    for (int i = 0; i < 500; ++i) {
        const ProbDist p(oracle::random_dist(rng, 2 + rng.below(100)));
        for (std::size_t j = 0; j + 1 < alphas.size(); ++j)
            EXPECT_GE(entropy(p, EntropyKind::renyi(alphas[j])),
                      entropy(p, EntropyKind::renyi(alphas[j + 1])) - 1e-12);
    }
}

TEST(EntropyProperty, ProductAdditivity) {
    Rng rng(5);
    for (int i = 0; i < 300; ++i) {
        const auto a = oracle::random_dist(rng, 1 + rng.below(20));
        const auto b = oracle::random_dist(rng, 1 + rng.below(20));
        const auto ab = product(a, b);
        auto h = [](const std::vector<double>& p, const EntropyKind& k) {
            return entropy_unchecked(p, k);
        };
        const auto s = EntropyKind::shannon();
        EXPECT_NEAR(h(ab, s), h(a, s) + h(b, s), 1e-9);
        for (double param : {0.5, 2.0, 3.0}) {
            const auto r = EntropyKind::renyi(param);
            EXPECT_NEAR(h(ab, r), h(a, r) + h(b, r), 1e-9);
            const auto t = EntropyKind::tsallis(param);
            EXPECT_NEAR(h(ab, t), h(a, t) + h(b, t) + (1.0 - param) * h(a, t) * h(b, t), 1e-9);
        }
    }
}

TEST(EntropyProperty, PermutationInvariant) {
    Rng rng(6);
    for (int i = 0; i < 200; ++i) {
        auto p = oracle::random_dist(rng, 2 + rng.below(50));
        auto q = p;
        std::reverse(q.begin(), q.end());
        std::rotate(q.begin(), q.begin() + static_cast<long>(rng.below(q.size())), q.end());
        for (const auto& k : {EntropyKind::shannon(), EntropyKind::renyi(2.0), EntropyKind::tsallis(2.0)})
            EXPECT_NEAR(entropy_unchecked(p, k), entropy_unchecked(q, k), 1e-12);
    }
}

TEST(JointHistogram, DiagonalAndConstant) {
    const auto img = uniform_image(7);
    const auto j = joint_histogram(img, img, 64);
    for (std::size_t a = 0; a < 64; ++a)
        for (std::size_t b = 0; b < 64; ++b)
            if (a != b) {
                EXPECT_EQ(j(a, b), 0.0);
            }
    const auto c = joint_histogram(GrayImage(4, 4, 10), GrayImage(4, 4, 250), 16);
    EXPECT_EQ(c(0, 15), 1.0);
}

TEST(JointHistogram, MaskAndErrors) {
    const GrayImage a(2, 1, std::vector<std::uint8_t>{0, 255});
    const GrayImage b(2, 1, std::vector<std::uint8_t>{255, 255});
    const std::vector<std::uint8_t> mask{0, 1};
    const auto j = joint_histogram(a, b, 2, mask);
    EXPECT_EQ(j(1, 1), 1.0);
    const std::vector<std::uint8_t> none{0, 0};
    EXPECT_THROW(joint_histogram(a, b, 2, none), Undefined);
    EXPECT_THROW(joint_histogram(a, GrayImage(1, 1), 2), InvalidArgument);
}

TEST(MutualInformation, Examples) {
    const JointDist diag(2, 2, {0.5, 0.0, 0.0, 0.5});
    EXPECT_NEAR(mutual_information(diag, EntropyKind::shannon()), kLn2, 1e-15);

    const std::vector<double> pa{0.3, 0.7}, pb{0.6, 0.4};
    const JointDist prod(2, 2, product(pa, pb));
    EXPECT_NEAR(mutual_information(prod, EntropyKind::shannon()), 0.0, 1e-15);
    const double sa = oracle::tsallis(pa, 2.0), sb = oracle::tsallis(pb, 2.0);
    EXPECT_NEAR(mutual_information(prod, EntropyKind::tsallis(2.0)), sa * sb, 1e-12);
    EXPECT_GT(sa * sb, 0.0);
}

TEST(MutualInformation, IndependentImagesNearZero) {
    const auto j = joint_histogram(uniform_image(8), uniform_image(9), 64);
    EXPECT_LT(mutual_information(j, EntropyKind::shannon()), 0.05);
}

TEST(MutualInformationProperty, ShannonNonNegativeAndDiagonal) {
    Rng rng(10);
    for (int i = 0; i < 500; ++i) {
        const std::size_t na = 1 + rng.below(12), nb = 1 + rng.below(12);
        const JointDist j(na, nb, oracle::random_dist(rng, na * nb));
        EXPECT_GE(mutual_information(j, EntropyKind::shannon()), -1e-12);

        const auto p = oracle::random_dist(rng, na);
        std::vector<double> d(na * na, 0.0);
        for (std::size_t k = 0; k < na; ++k) d[k * na + k] = p[k];
        EXPECT_NEAR(mutual_information(JointDist(na, na, d), EntropyKind::shannon()),
                    oracle::shannon(p), 1e-12);
    }
}

TEST(JointDist, Marginals) {
    const JointDist j(2, 3, {0.1, 0.2, 0.1, 0.3, 0.0, 0.3});
    const auto a = j.marginal_a();
    const auto b = j.marginal_b();
    EXPECT_NEAR(a[0], 0.4, 1e-15);
    EXPECT_NEAR(a[1], 0.6, 1e-15);
    EXPECT_NEAR(b[0], 0.4, 1e-15);
    EXPECT_NEAR(b[1], 0.2, 1e-15);
    EXPECT_NEAR(b[2], 0.4, 1e-15);
}
