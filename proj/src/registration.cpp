#include "entrobench/registration.hpp"

#include "entrobench/error.hpp"
#include "entrobench/random.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <limits>

namespace entrobench {

Point SimilarityTransform::map(const Point& p, const Point& center) const {
    const double c = std::cos(theta), s = std::sin(theta);
    const double x = p[0] - center[0], y = p[1] - center[1];
    return {scale * (c * x - s * y) + center[0] + dx, scale * (s * x + c * y) + center[1] + dy};
}

SimilarityTransform SimilarityTransform::inverse() const {
    // T^-1(q) = R(-theta) (q - c - d) / s + c
    const double c = std::cos(theta), s = std::sin(theta);
    return {-(c * dx + s * dy) / scale, -(-s * dx + c * dy) / scale, -theta, 1.0 / scale};
}

Point raster_center(std::size_t width, std::size_t height) {
    return {(static_cast<double>(width) - 1.0) / 2.0, (static_cast<double>(height) - 1.0) / 2.0};
}

std::vector<Point> corner_points(std::size_t width, std::size_t height) {
    const double x1 = static_cast<double>(width) - 1.0;
    const double y1 = static_cast<double>(height) - 1.0;
    return {{0.0, 0.0}, {x1, 0.0}, {0.0, y1}, {x1, y1}};
}

std::size_t WarpedImage::valid_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

WarpedImage transform_apply(const GrayImage& img, const SimilarityTransform& t) {
    const std::size_t w = img.width(), h = img.height();
    const Point center = raster_center(w, h);
    const SimilarityTransform inv = t.inverse();
    const double c = std::cos(inv.theta) * inv.scale;
    const double s = std::sin(inv.theta) * inv.scale;
    const double maxx = static_cast<double>(w) - 1.0;
    const double maxy = static_cast<double>(h) - 1.0;
    constexpr double eps = 1e-9;

    WarpedImage out{GrayImage(w, h), std::vector<std::uint8_t>(w * h, 0)};
    auto dst = out.image.pixels();
    const auto src = img.pixels();
    for (std::size_t y = 0; y < h; ++y) {
        const double ry = static_cast<double>(y) - center[1];
        for (std::size_t x = 0; x < w; ++x) {
            const double rx = static_cast<double>(x) - center[0];
            double sx = c * rx - s * ry + center[0] + inv.dx;
            double sy = s * rx + c * ry + center[1] + inv.dy;
            if (sx < -eps || sy < -eps || sx > maxx + eps || sy > maxy + eps) continue;
            sx = std::clamp(sx, 0.0, maxx);
            sy = std::clamp(sy, 0.0, maxy);
            auto x0 = static_cast<std::size_t>(sx);
            auto y0 = static_cast<std::size_t>(sy);
            if (x0 + 1 >= w && w > 1) x0 = w - 2;
            if (y0 + 1 >= h && h > 1) y0 = h - 2;
            const double fx = sx - static_cast<double>(x0);
            const double fy = sy - static_cast<double>(y0);
            const std::size_t x1 = std::min(x0 + 1, w - 1);
            const std::size_t y1 = std::min(y0 + 1, h - 1);
            const double top = src[y0 * w + x0] * (1.0 - fx) + src[y0 * w + x1] * fx;
            const double bottom = src[y1 * w + x0] * (1.0 - fx) + src[y1 * w + x1] * fx;
            const double v = std::round(top * (1.0 - fy) + bottom * fy);
            const std::size_t i = y * w + x;
            dst[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            out.mask[i] = 1;
        }
    }
    return out;
}

double nccc(const GrayImage& a, const GrayImage& b, std::span<const std::uint8_t> mask) {
    if (!a.same_shape(b)) throw InvalidArgument("nccc: image dimensions differ");
    if (!mask.empty() && mask.size() != a.size()) throw InvalidArgument("nccc: mask dimensions differ");
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    double n = 0, sa = 0, sb = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        n += 1;
        sa += pa[i];
        sb += pb[i];
    }
    if (n < 2) throw Undefined("nccc: fewer than two valid pixels");
    const double ma = sa / n, mb = sb / n;
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (!mask.empty() && !mask[i]) continue;
        const double da = pa[i] - ma, db = pb[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) throw Undefined("nccc: constant image on the valid set");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double mi_objective(const GrayImage& ref, const GrayImage& moving, const SimilarityTransform& t,
                    const EntropyKind& kind, std::size_t bins) {
    if (!ref.same_shape(moving)) throw InvalidArgument("registration images differ in size");
    const auto warped = transform_apply(moving, t);
    const std::size_t valid = warped.valid_count();
    if (static_cast<double>(valid) < kMinOverlap * static_cast<double>(ref.size()))
        throw Undefined("insufficient overlap");
    return mutual_information(joint_histogram(ref, warped.image, bins, warped.mask), kind);
}

double rmse_control_points(const SimilarityTransform& est, const SimilarityTransform& truth,
                           std::span<const Point> points, const Point& center) {
    if (points.empty()) throw InvalidArgument("rmse needs at least one control point");
    double sum = 0.0;
    for (const auto& p : points) {
        const auto a = est.map(p, center);
        const auto b = truth.map(p, center);
        sum += (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]);
    }
    return std::sqrt(sum / static_cast<double>(points.size()));
}

namespace {

using Vec4 = std::array<double, 4>;

// Search coordinates: rotation and scale are expressed as the displacement
// they cause at the half-diagonal, so every axis is in pixels.
struct Parameterization {
    double lever;

    SimilarityTransform to_transform(const Vec4& v) const {
        return {v[0], v[1], v[2] / lever, 1.0 + v[3] / lever};
    }
    Vec4 from_transform(const SimilarityTransform& t) const {
        return {t.dx, t.dy, t.theta * lever, (t.scale - 1.0) * lever};
    }
};

struct Simplex {
    std::array<Vec4, 5> x;
    std::array<double, 5> f;
};

// Nelder-Mead with standard coefficients; stops on budget or a collapsed simplex.
template <typename Objective>
std::pair<Vec4, double> nelder_mead(Objective&& objective, const Vec4& start, double step,
                                    std::size_t budget, std::size_t& used) {
    constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
    constexpr double kTolX = 1e-3;  // pixels
    std::size_t spent = 0;
    auto eval = [&](const Vec4& v) {
        ++spent;
        return objective(v);
    };

    Simplex s;
    s.x[0] = start;
    s.f[0] = eval(start);
    for (std::size_t i = 0; i < 4; ++i) {
        s.x[i + 1] = start;
        s.x[i + 1][i] += step;
        s.f[i + 1] = eval(s.x[i + 1]);
    }

    std::array<std::size_t, 5> order{};
    while (spent + 2 <= budget) {
        for (std::size_t i = 0; i < 5; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return s.f[a] < s.f[b]; });
        const std::size_t best = order[0], worst = order[4], second = order[3];

        double extent = 0.0;
        for (std::size_t i = 1; i < 5; ++i)
            for (std::size_t d = 0; d < 4; ++d)
                extent = std::max(extent, std::abs(s.x[order[i]][d] - s.x[best][d]));
        if (extent < kTolX) break;

        Vec4 centroid{};
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t d = 0; d < 4; ++d) centroid[d] += s.x[order[i]][d] / 4.0;
        auto along = [&](double coef) {
            Vec4 v;
            for (std::size_t d = 0; d < 4; ++d) v[d] = centroid[d] + coef * (s.x[worst][d] - centroid[d]);
            return v;
        };

        const Vec4 xr = along(-kReflect);
        const double fr = eval(xr);
        if (fr < s.f[best]) {
            const Vec4 xe = along(-kExpand);
            const double fe = eval(xe);
            if (fe < fr) {
                s.x[worst] = xe;
                s.f[worst] = fe;
            } else {
                s.x[worst] = xr;
                s.f[worst] = fr;
            }
        } else if (fr < s.f[second]) {
            s.x[worst] = xr;
            s.f[worst] = fr;
        } else {
            const bool outside = fr < s.f[worst];
            const Vec4 xc = along(outside ? -kContract : kContract);
            const double fc = eval(xc);
            if (fc < (outside ? fr : s.f[worst])) {
                s.x[worst] = xc;
                s.f[worst] = fc;
            } else {
                if (spent + 4 > budget) break;
                for (std::size_t i = 1; i < 5; ++i) {
                    auto& v = s.x[order[i]];
                    for (std::size_t d = 0; d < 4; ++d) v[d] = s.x[best][d] + kShrink * (v[d] - s.x[best][d]);
                    s.f[order[i]] = eval(v);
                }
            }
        }
    }
    const auto it = std::min_element(s.f.begin(), s.f.end());
    const auto idx = static_cast<std::size_t>(it - s.f.begin());
    used += spent;
    return {s.x[idx], s.f[idx]};
}

}  // namespace

RegistrationResult register_images(const GrayImage& ref, const GrayImage& moving,
                                   const EntropyKind& kind, const RegistrationConfig& config) {
    if (!ref.same_shape(moving)) throw InvalidArgument("registration images differ in size");
    if (config.budget < 200) throw InvalidArgument("registration budget must be at least 200");
    if (config.restarts < 1) throw InvalidArgument("registration needs at least one restart");
    if (!(config.smoothing >= 0.0)) throw InvalidArgument("registration smoothing must be >= 0");
    if (!(config.window_margin >= 0.0 && config.window_margin < 0.5))
        throw InvalidArgument("registration window margin must be in [0, 0.5)");
    const auto started = std::chrono::steady_clock::now();
    const GrayImage ref_s = gaussian_blur(ref, config.smoothing);
    const GrayImage moving_s = gaussian_blur(moving, config.smoothing);

    const double w = static_cast<double>(ref.width());
    const double h = static_cast<double>(ref.height());
    const Parameterization param{0.5 * std::sqrt(w * w + h * h)};
    constexpr double kInfeasible = std::numeric_limits<double>::infinity();

    // Fixed scoring window: with the window inside the true overlap, candidates near the
    // optimum all see the same reference pixels.
    const std::size_t mx = static_cast<std::size_t>(config.window_margin * w);
    const std::size_t my = static_cast<std::size_t>(config.window_margin * h);
    std::vector<std::uint8_t> window(ref.size(), 0);
    for (std::size_t y = my; y < ref.height() - my; ++y)
        for (std::size_t x = mx; x < ref.width() - mx; ++x) window[y * ref.width() + x] = 1;
    const double min_valid = kMinOverlap * static_cast<double>(ref.size());

    std::vector<std::uint8_t> mask(ref.size());
    const GrayImage* cur_mov = &moving_s;
    auto objective = [&](const Vec4& v) {
        const auto t = param.to_transform(v);
        if (!t.in_search_box()) return kInfeasible;
        const auto warped = transform_apply(*cur_mov, t);
        if (static_cast<double>(warped.valid_count()) < min_valid) return kInfeasible;
        std::size_t scored = 0;
        for (std::size_t i = 0; i < mask.size(); ++i) {
            mask[i] = warped.mask[i] & window[i];
            scored += mask[i];
        }
        if (scored == 0) return kInfeasible;
        return -mutual_information(joint_histogram(ref_s, warped.image, config.bins, mask), kind);
    };

    // Eight tenths of the budget go to the restarts, the rest to polishing the winner.
    const std::size_t polish_budget = config.budget / 5;
    const std::size_t per_restart = (config.budget - polish_budget) / config.restarts;
    constexpr double kRestartStep = 4.0;
    constexpr double kPolishStep = 0.5;

    Rng rng(config.seed);
    std::size_t used = 0;
    Vec4 best_x{};
    double best_f = kInfeasible;
    for (std::size_t r = 0; r < config.restarts; ++r) {
        SimilarityTransform start;
        if (r > 0) {
            start.dx = rng.uniform(-10.0, 10.0);
            start.dy = rng.uniform(-10.0, 10.0);
            start.theta = rng.uniform(-0.2, 0.2);
            start.scale = rng.uniform(0.8, 1.25);
        }
        auto [x, f] = nelder_mead(objective, param.from_transform(start), kRestartStep, per_restart, used);
        // strict improvement keeps the earliest restart on ties
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }
    if (best_f == kInfeasible) throw Undefined("registration: insufficient overlap at every restart");

    // Blur applied in the moving frame spans scale x sigma in the reference frame; the
    // polish re-blurs the moving image so both sides carry the same blur at the estimate.
    const GrayImage moving_p =
        gaussian_blur(moving, config.smoothing / param.to_transform(best_x).scale);
    cur_mov = &moving_p;
    best_f = objective(best_x);
    ++used;
    if (config.budget > used + 5) {
        auto [x, f] = nelder_mead(objective, best_x, kPolishStep, config.budget - used, used);
        if (f < best_f) {
            best_f = f;
            best_x = x;
        }
    }

    RegistrationResult result;
    result.transform = param.to_transform(best_x);
    result.mi_final = mi_objective(ref, moving, result.transform, kind, config.bins);
    result.evaluations = used;
    const auto warped = transform_apply(moving, result.transform);
    result.nccc = nccc(ref, warped.image, warped.mask);
    if (config.truth) {
        const auto corners = corner_points(ref.width(), ref.height());
        result.rmse = rmse_control_points(result.transform, *config.truth, corners,
                                          raster_center(ref.width(), ref.height()));
    }
    result.runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace entrobench
