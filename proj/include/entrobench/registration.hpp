#pragma once

#include "entrobench/entropy.hpp"
#include "entrobench/raster.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace entrobench {

/// p -> scale * R(theta) * (p - c) + c + (dx, dy), with c the raster center.
struct SimilarityTransform {
    double dx = 0.0;
    double dy = 0.0;
    double theta = 0.0;  // radians
    double scale = 1.0;

    static constexpr double kMinScale = 0.5;
    static constexpr double kMaxScale = 2.0;

    Point map(const Point& p, const Point& center) const;
    SimilarityTransform inverse() const;
    bool in_search_box() const noexcept { return scale >= kMinScale && scale <= kMaxScale; }
};

/// ((w - 1) / 2, (h - 1) / 2): the rotation/scale pivot for a w x h raster.
Point raster_center(std::size_t width, std::size_t height);

/// The four corner pixels, used as control points.
std::vector<Point> corner_points(std::size_t width, std::size_t height);

struct WarpedImage {
    GrayImage image;
    std::vector<std::uint8_t> mask;  // 1 where the source fell inside the input raster

    std::size_t valid_count() const;
};

/// Inverse-mapped bilinear resampling: output(p) = input(T^-1(p)), rounded.
/// Pixels whose source lies outside the input are zero and masked out.
WarpedImage transform_apply(const GrayImage& img, const SimilarityTransform& t);

/// Pearson correlation over mask-valid pixels (empty mask: all pixels).
/// Throws Undefined if either image is constant on the valid set.
double nccc(const GrayImage& a, const GrayImage& b, std::span<const std::uint8_t> mask = {});

/// Minimum fraction of the raster that must stay overlapped.
inline constexpr double kMinOverlap = 0.10;

/// Mutual information between ref and moving warped by t, over the overlap.
/// Throws Undefined when the overlap drops below kMinOverlap.
double mi_objective(const GrayImage& ref, const GrayImage& moving, const SimilarityTransform& t,
                    const EntropyKind& kind, std::size_t bins = kDefaultMiBins);

struct RegistrationConfig {
    std::size_t bins = kDefaultMiBins;
    std::size_t budget = 2000;   // total objective evaluations
    std::size_t restarts = 8;
    std::uint64_t seed = 0;
    /// Gaussian sigma (pixels) applied to both images before the search; 0 disables.
    /// The reported mi_final and nccc are measured on the unsmoothed inputs.
    double smoothing = 3.5;
    /// Candidates are scored on the overlap inside a central window that trims this
    /// fraction of the width and height from each side; 0 scores the whole overlap.
    double window_margin = 0.06;
    /// When set, the result's rmse is measured against it at the corners.
    std::optional<SimilarityTransform> truth;
};

struct RegistrationResult {
    SimilarityTransform transform;
    double mi_final = 0.0;
    double nccc = 0.0;   // raw Pearson value, may be negative
    std::optional<double> rmse;
    std::size_t evaluations = 0;
    double runtime = 0.0;  // seconds
};

/// Maximizes mutual information with multi-start Nelder-Mead over (dx, dy, theta, scale).
/// Restart 0 starts at identity; the others are seeded draws from
/// dx, dy in [-10, 10], theta in [-0.2, 0.2], scale in [0.8, 1.25]. The best restart
/// is then polished with a small simplex. Both images are smoothed first and candidates
/// are scored inside the central window (see RegistrationConfig).
RegistrationResult register_images(const GrayImage& ref, const GrayImage& moving,
                                   const EntropyKind& kind, const RegistrationConfig& config);

/// RMS distance between est(p) and truth(p) over points.
double rmse_control_points(const SimilarityTransform& est, const SimilarityTransform& truth,
                           std::span<const Point> points, const Point& center);

}  // namespace entrobench
