#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace entrobench {

/// Row-major 8-bit single-band raster.
class GrayImage {
public:
    GrayImage() = default;
    GrayImage(std::size_t width, std::size_t height, std::uint8_t fill = 0);
    GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }
    bool empty() const noexcept { return pixels_.empty(); }

    std::uint8_t operator()(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
    std::uint8_t& operator()(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }

    bool same_shape(const GrayImage& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// Per-pixel class indices produced by thresholding, clustering or scene synthesis.
class LabelMap {
public:
    LabelMap() = default;
    LabelMap(std::size_t width, std::size_t height, std::uint8_t fill = 0);
    LabelMap(std::size_t width, std::size_t height, std::vector<std::uint8_t> labels);

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return labels_.size(); }

    std::uint8_t operator()(std::size_t x, std::size_t y) const { return labels_[y * width_ + x]; }
    std::uint8_t& operator()(std::size_t x, std::size_t y) { return labels_[y * width_ + x]; }

    std::span<const std::uint8_t> labels() const noexcept { return labels_; }
    std::span<std::uint8_t> labels() noexcept { return labels_; }

    /// One past the largest label present (0 for an empty map).
    std::size_t class_count() const noexcept;

    bool same_shape(const LabelMap& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }
    bool same_shape(const GrayImage& img) const noexcept {
        return width_ == img.width() && height_ == img.height();
    }

    friend bool operator==(const LabelMap&, const LabelMap&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<std::uint8_t> labels_;
};

/// Labels stored as intensities, for writing ground truth alongside a scene.
GrayImage to_image(const LabelMap& labels);
LabelMap to_labels(const GrayImage& img);

// --- PGM -------------------------------------------------------------------

/// Decodes binary (P5) or ASCII (P2) PGM with maxval 255. Throws PgmError.
GrayImage decode_pgm(std::span<const std::uint8_t> bytes);
GrayImage decode_pgm(std::string_view bytes);

/// Always emits binary P5.
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

GrayImage read_pgm(const std::string& path);
void write_pgm(const GrayImage& img, const std::string& path);

// --- synthetic scenes -------------------------------------------------------

using Point = std::array<double, 2>;

struct SceneRegion {
    std::vector<Point> polygon;  // closed implicitly; even-odd fill
    double mean;                 // intensity in [0, 255]
    double noise_sd;             // >= 0

    static SceneRegion rectangle(double x0, double y0, double x1, double y1, double mean,
                                 double noise_sd);
};

/// Regions are painted in order; a pixel takes the label of the last region
/// containing it. Region i has label i.
struct SceneSpec {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<SceneRegion> regions;

    std::size_t class_count() const noexcept { return regions.size(); }
    void validate() const;
};

/// Maps an output pixel coordinate to the scene coordinate that is sampled there.
using CoordinateMap = std::function<Point(double x, double y)>;

struct Scene {
    GrayImage image;
    LabelMap truth;
};

/// Renders spec with per-pixel Gaussian noise drawn from seed. If warp is set,
/// pixel (x, y) shows scene content at warp(x, y).
Scene generate_scene(const SceneSpec& spec, std::uint64_t seed, const CoordinateMap& warp = {});

/// Left/right halves with means 60 and 180.
SceneSpec two_region_scene(std::size_t width = 256, std::size_t height = 256, double noise_sd = 0.0);

/// Four bent wedges around an off-centre apex plus a tilted square, each about
/// a fifth of the area; means 35, 85, 135, 185, 235.
SceneSpec five_region_scene(std::size_t width = 256, std::size_t height = 256, double noise_sd = 8.0);

/// Looks up "two-region" or "five-region"; negative noise_sd keeps the preset default.
SceneSpec scene_preset(std::string_view name, std::size_t width, std::size_t height,
                       double noise_sd = -1.0);

// --- corruption and pre-processing -----------------------------------------

/// Each pixel independently becomes 0 or 255 (equal odds) with probability density.
GrayImage add_salt_pepper(const GrayImage& img, double density, std::uint64_t seed);

/// 3x3 median with edge replication at the borders.
GrayImage median_filter_3x3(const GrayImage& img);

/// Separable Gaussian blur (kernel radius ceil(3 sigma), edge replication),
/// rounded back to 8 bits. sigma <= 0 returns a copy.
GrayImage gaussian_blur(const GrayImage& img, double sigma);

}  // namespace entrobench
