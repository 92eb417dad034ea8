#include "entrobench/raster.hpp"

#include "entrobench/error.hpp"
#include "entrobench/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

namespace entrobench {

namespace {

void check_dims(std::size_t width, std::size_t height, std::size_t count) {
    if (width == 0 || height == 0)
        throw InvalidArgument("raster dimensions must be at least 1x1");
    if (count != width * height)
        throw InvalidArgument("pixel count " + std::to_string(count) + " does not match " +
                              std::to_string(width) + "x" + std::to_string(height));
}

}  // namespace

GrayImage::GrayImage(std::size_t width, std::size_t height, std::uint8_t fill)
    : GrayImage(width, height, std::vector<std::uint8_t>(width * height, fill)) {}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    check_dims(width_, height_, pixels_.size());
}

LabelMap::LabelMap(std::size_t width, std::size_t height, std::uint8_t fill)
    : LabelMap(width, height, std::vector<std::uint8_t>(width * height, fill)) {}

LabelMap::LabelMap(std::size_t width, std::size_t height, std::vector<std::uint8_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
    check_dims(width_, height_, labels_.size());
}

std::size_t LabelMap::class_count() const noexcept {
    if (labels_.empty()) return 0;
    return static_cast<std::size_t>(*std::max_element(labels_.begin(), labels_.end())) + 1;
}

GrayImage to_image(const LabelMap& labels) {
    return GrayImage(labels.width(), labels.height(),
                     std::vector<std::uint8_t>(labels.labels().begin(), labels.labels().end()));
}

LabelMap to_labels(const GrayImage& img) {
    return LabelMap(img.width(), img.height(),
                    std::vector<std::uint8_t>(img.pixels().begin(), img.pixels().end()));
}

// --- PGM -------------------------------------------------------------------

namespace {

class PgmReader {
public:
    PgmReader(std::span<const std::uint8_t> bytes, std::size_t start) : bytes_(bytes), pos_(start) {}

    std::size_t pos() const { return pos_; }
    bool at_end() const { return pos_ >= bytes_.size(); }

    static bool is_space(std::uint8_t c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    }

    // Skips whitespace and '#' comments (which run to end of line).
    void skip_separators() {
        while (!at_end()) {
            const auto c = bytes_[pos_];
            if (is_space(c)) {
                ++pos_;
            } else if (c == '#') {
                while (!at_end() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else {
                break;
            }
        }
    }

    std::size_t read_unsigned(const char* field) {
        skip_separators();
        const std::size_t start = pos_;
        if (at_end()) throw PgmError(std::string("unexpected end of data reading ") + field, pos_);
        std::size_t value = 0;
        while (!at_end() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > (1u << 30)) throw PgmError(std::string(field) + " is too large", start);
            ++pos_;
        }
        if (pos_ == start) throw PgmError(std::string("expected digits for ") + field, start);
        if (!at_end() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#')
            throw PgmError(std::string("malformed ") + field, pos_);
        return value;
    }

    std::uint8_t byte() { return bytes_[pos_++]; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_;
};

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2'))
        throw PgmError("bad magic number (expected P5 or P2)", 0);
    const bool binary = bytes[1] == '5';

    PgmReader in(bytes, 2);
    if (!in.at_end() && !PgmReader::is_space(bytes[2]) && bytes[2] != '#')
        throw PgmError("bad magic number (expected P5 or P2)", 0);

    const std::size_t width = in.read_unsigned("width");
    const std::size_t height = in.read_unsigned("height");
    const std::size_t maxval = in.read_unsigned("maxval");
    if (width == 0 || height == 0) throw PgmError("zero image dimension", in.pos());
    if (maxval != 255)
        throw PgmError("unsupported maxval " + std::to_string(maxval) + " (only 255)",
                       in.pos());

    const std::size_t count = width * height;
    std::vector<std::uint8_t> pixels(count);
    if (binary) {
        // exactly one whitespace byte separates the header from the raster
        if (in.at_end()) throw PgmError("truncated payload", in.pos());
        in.byte();
        if (in.remaining() < count)
            throw PgmError("truncated payload: expected " + std::to_string(count) + " bytes, found " +
                               std::to_string(in.remaining()),
                           bytes.size());
        for (auto& p : pixels) p = in.byte();
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            in.skip_separators();
            if (in.at_end())
                throw PgmError("truncated payload: expected " + std::to_string(count) +
                                   " samples, found " + std::to_string(i),
                               in.pos());
            const std::size_t at = in.pos();
            const std::size_t v = in.read_unsigned("sample");
            if (v > 255) throw PgmError("sample exceeds maxval", at);
            pixels[i] = static_cast<std::uint8_t>(v);
        }
    }
    return GrayImage(width, height, std::move(pixels));
}

GrayImage decode_pgm(std::string_view bytes) {
    return decode_pgm(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels().begin(), img.pixels().end());
    return out;
}

GrayImage read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                    std::istreambuf_iterator<char>());
    try {
        return decode_pgm(bytes);
    } catch (const PgmError& e) {
        throw PgmError(path + ": " + e.message(), e.offset());
    }
}

void write_pgm(const GrayImage& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + path);
    const auto bytes = encode_pgm(img);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw InvalidArgument("write failed for " + path);
}

// --- synthetic scenes -------------------------------------------------------

SceneRegion SceneRegion::rectangle(double x0, double y0, double x1, double y1, double mean,
                                   double noise_sd) {
    return SceneRegion{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, mean, noise_sd};
}

namespace {

bool inside(const std::vector<Point>& poly, double x, double y) {
    bool in = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& a = poly[i];
        const auto& b = poly[j];
        if ((a[1] > y) != (b[1] > y)) {
            const double xc = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if (x < xc) in = !in;
        }
    }
    return in;
}

}  // namespace

void SceneSpec::validate() const {
    if (width == 0 || height == 0) throw InvalidArgument("scene dimensions must be at least 1x1");
    if (regions.size() < 2) throw InvalidArgument("scene needs at least two regions");
    if (regions.size() > 255) throw InvalidArgument("too many scene regions");
    for (std::size_t i = 0; i < regions.size(); ++i) {
        const auto& r = regions[i];
        if (r.polygon.size() < 3) throw InvalidArgument("region polygon needs 3 or more vertices");
        if (!(r.mean >= 0.0 && r.mean <= 255.0)) throw InvalidArgument("region mean outside [0,255]");
        if (!(r.noise_sd >= 0.0)) throw InvalidArgument("region noise must be non-negative");
        for (std::size_t j = 0; j < i; ++j)
            if (regions[j].mean == r.mean) throw InvalidArgument("region means must be distinct");
    }
}

Scene generate_scene(const SceneSpec& spec, std::uint64_t seed, const CoordinateMap& warp) {
    spec.validate();
    Rng rng(seed);
    GrayImage image(spec.width, spec.height);
    LabelMap truth(spec.width, spec.height);
    for (std::size_t y = 0; y < spec.height; ++y) {
        for (std::size_t x = 0; x < spec.width; ++x) {
            Point p{static_cast<double>(x), static_cast<double>(y)};
            if (warp) p = warp(p[0], p[1]);
            std::size_t label = spec.regions.size();
            for (std::size_t r = spec.regions.size(); r-- > 0;) {
                if (inside(spec.regions[r].polygon, p[0], p[1])) {
                    label = r;
                    break;
                }
            }
            if (label == spec.regions.size())
                throw InvalidArgument("scene regions do not cover pixel (" + std::to_string(x) + "," +
                                      std::to_string(y) + ")");
            const auto& region = spec.regions[label];
            // one draw per pixel regardless of noise level keeps streams aligned
            const double noise = rng.normal();
            const double v = std::round(region.mean + region.noise_sd * noise);
            image(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            truth(x, y) = static_cast<std::uint8_t>(label);
        }
    }
    return {std::move(image), std::move(truth)};
}

SceneSpec two_region_scene(std::size_t width, std::size_t height, double noise_sd) {
    const double w = static_cast<double>(width);
    const double h = static_cast<double>(height);
    const double half = std::floor(w / 2.0) - 0.5;
    SceneSpec spec{width, height, {}};
    spec.regions.push_back(SceneRegion::rectangle(-10 * w, -10 * h, 11 * w, 11 * h, 60.0, noise_sd));
    spec.regions.push_back(SceneRegion::rectangle(half, -10 * h, 11 * w, 11 * h, 180.0, noise_sd));
    return spec;
}

SceneSpec five_region_scene(std::size_t width, std::size_t height, double noise_sd) {
    const double w = static_cast<double>(width);
    const double h = static_cast<double>(height);
    // Boundaries are bent polylines from an off-centre apex, so no scaling or rotation
    // pivot leaves every edge in place. Angles are tuned so each of the five regions
    // covers about a fifth of the raster.
    const double ax = 0.38 * (w - 1.0);
    const double ay = 0.62 * (h - 1.0);
    const double knee = 0.25 * std::max(w, h);
    const double reach = 20.0 * std::max(w, h);
    constexpr std::array<double, 4> inner{4.0, 111.0, 228.0, 309.0};
    constexpr std::array<double, 4> outer{33.0, 85.0, 223.0, 288.0};
    constexpr std::array<double, 4> means{35.0, 85.0, 135.0, 185.0};
    auto at = [&](double radius, double degrees) -> Point {
        const double a = degrees * std::numbers::pi / 180.0;
        return {ax + radius * std::cos(a), ay + radius * std::sin(a)};
    };
    SceneSpec spec{width, height, {}};
    for (std::size_t i = 0; i < means.size(); ++i) {
        const std::size_t j = (i + 1) % means.size();
        const double wrap = j == 0 ? 360.0 : 0.0;
        spec.regions.push_back({{{ax, ay},
                                 at(knee, inner[i]),
                                 at(reach, outer[i]),
                                 at(reach, 0.5 * (outer[i] + outer[j] + wrap)),
                                 at(reach, outer[j] + wrap),
                                 at(knee, inner[j] + wrap)},
                                means[i],
                                noise_sd});
    }
    // a fifth of the raster, tilted so its edges do not sit on one pixel phase
    const double half = 0.5 * std::sqrt(0.2 * w * h);
    const double sx = 0.58 * (w - 1.0);
    const double sy = 0.42 * (h - 1.0);
    const double tilt = 20.0 * std::numbers::pi / 180.0;
    std::vector<Point> square;
    for (const auto& [u, v] : {std::pair{-1.0, -1.0}, {1.0, -1.0}, {1.0, 1.0}, {-1.0, 1.0}})
        square.push_back({sx + half * (u * std::cos(tilt) - v * std::sin(tilt)),
                          sy + half * (u * std::sin(tilt) + v * std::cos(tilt))});
    spec.regions.push_back({std::move(square), 235.0, noise_sd});
    return spec;
}

SceneSpec scene_preset(std::string_view name, std::size_t width, std::size_t height,
                       double noise_sd) {
    if (name == "two-region")
        return two_region_scene(width, height, noise_sd < 0.0 ? 0.0 : noise_sd);
    if (name == "five-region")
        return five_region_scene(width, height, noise_sd < 0.0 ? 8.0 : noise_sd);
    throw InvalidArgument("unknown scene preset '" + std::string(name) +
                          "' (expected two-region or five-region)");
}

// --- corruption and pre-processing -----------------------------------------

GrayImage add_salt_pepper(const GrayImage& img, double density, std::uint64_t seed) {
    if (!(density >= 0.0 && density <= 1.0))
        throw InvalidArgument("salt-and-pepper density must be in [0,1]");
    Rng rng(seed);
    GrayImage out = img;
    for (auto& p : out.pixels()) {
        const double hit = rng.uniform();
        const double side = rng.uniform();
        if (hit < density) p = side < 0.5 ? 0 : 255;
    }
    return out;
}

GrayImage median_filter_3x3(const GrayImage& img) {
    const std::size_t w = img.width();
    const std::size_t h = img.height();
    GrayImage out(w, h);
    std::array<std::uint8_t, 9> window{};
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            std::size_t n = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                const auto yy = static_cast<std::size_t>(
                    std::clamp<long>(static_cast<long>(y) + dy, 0, static_cast<long>(h) - 1));
                for (int dx = -1; dx <= 1; ++dx) {
                    const auto xx = static_cast<std::size_t>(
                        std::clamp<long>(static_cast<long>(x) + dx, 0, static_cast<long>(w) - 1));
                    window[n++] = img(xx, yy);
                }
            }
            std::nth_element(window.begin(), window.begin() + 4, window.end());
            out(x, y) = window[4];
        }
    }
    return out;
}

GrayImage gaussian_blur(const GrayImage& img, double sigma) {
    if (!(sigma > 0.0)) return img;
    const long radius = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double total = 0.0;
    for (long i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        total += v;
    }
    for (auto& v : kernel) v /= total;

    const long w = static_cast<long>(img.width());
    const long h = static_cast<long>(img.height());
    std::vector<double> rows(img.pixels().size());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long i = -radius; i <= radius; ++i) {
                const long xx = std::clamp(x + i, 0L, w - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       img(static_cast<std::size_t>(xx), static_cast<std::size_t>(y));
            }
            rows[static_cast<std::size_t>(y * w + x)] = acc;
        }
    }
    GrayImage out(img.width(), img.height());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            double acc = 0.0;
            for (long i = -radius; i <= radius; ++i) {
                const long yy = std::clamp(y + i, 0L, h - 1);
                acc += kernel[static_cast<std::size_t>(i + radius)] *
                       rows[static_cast<std::size_t>(yy * w + x)];
            }
            out(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) =
                static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
        }
    }
    return out;
}

}  // namespace entrobench
