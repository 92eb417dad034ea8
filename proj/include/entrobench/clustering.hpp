#pragma once

#include "entrobench/entropy.hpp"
#include "entrobench/raster.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace entrobench {

/// Pixel samples on a regular stride grid; features are band intensities / 255.
struct FeatureSet {
    std::size_t n = 0;          // samples
    std::size_t d = 0;          // bands
    std::vector<double> values;  // n x d, row-major
    std::vector<std::array<std::size_t, 2>> coords;  // (x, y) of each sample
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t stride = 1;

    std::span<const double> sample(std::size_t i) const { return {values.data() + i * d, d}; }
};

FeatureSet extract_features(std::span<const GrayImage> bands, std::size_t stride);

/// Every cluster index in [0, k) must be used at least once.
struct ClusterAssignment {
    std::vector<std::uint8_t> labels;
    std::size_t k = 0;

    void validate(std::size_t n) const;
};

/// Gaussian kernel G(u) = exp(-|u|^2 / (4 sigma^2)), the convolution of two
/// Parzen windows of width sigma, normalized so G(0) = 1.
double kernel(std::span<const double> a, std::span<const double> b, double sigma);

/// V = (1/n^2) sum_ij G(x_i - x_j) over the chosen samples; -ln V is the
/// quadratic Rényi entropy estimate.
double information_potential(const FeatureSet& xs, std::span<const std::size_t> subset, double sigma);
double information_potential(const FeatureSet& xs, double sigma);

/// Between-cluster cross information potential
/// sum_{c<c'} (1/(n_c n_c')) sum_{x in c, y in c'} G(x - y). Lower is better.
double cef(const ClusterAssignment& a, const FeatureSet& xs, double sigma);

/// 1.06 * std * n^(-1/5) per feature dimension, averaged.
double silverman_sigma(const FeatureSet& xs);

struct ClusterResult {
    ClusterAssignment assignment;
    double cef = 0.0;
    std::size_t best_restart = 0;
    /// CEF before the first pass and after each pass, one trace per restart.
    std::vector<std::vector<double>> traces;
};

inline constexpr std::size_t kMaxClusterPasses = 50;

/// Greedy CEF descent: quantile split along the first principal axis, then
/// single-sample moves that strictly lower CEF until a pass makes none (or
/// 50 passes). Restart 0 uses exact quantiles in sample order; later restarts
/// jitter the cuts and visit samples in a seeded order. k in [2, 8], n >= 10k.
ClusterResult cluster(const FeatureSet& xs, std::size_t k, double sigma, std::uint64_t seed,
                      std::size_t restarts = 4);

/// Sampled pixels keep their label; others copy the nearest sample
/// (smallest label on ties).
LabelMap assignment_to_labelmap(const ClusterAssignment& a, const FeatureSet& xs);

/// sum_c w_c H(intensity histogram of class c), w_c the class pixel fraction.
/// The per-kind score reported for clustering output; lower is purer.
double within_class_entropy(const GrayImage& img, const LabelMap& labels, const EntropyKind& kind);

}  // namespace entrobench
