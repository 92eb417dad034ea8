#include "entrobench/clustering.hpp"

#include "entrobench/error.hpp"
#include "entrobench/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace entrobench {

FeatureSet extract_features(std::span<const GrayImage> bands, std::size_t stride) {
    if (bands.empty()) throw InvalidArgument("feature extraction needs at least one band");
    if (stride < 1) throw InvalidArgument("stride must be at least 1");
    const auto& first = bands.front();
    for (const auto& b : bands)
        if (!b.same_shape(first)) throw InvalidArgument("feature bands differ in dimensions");

    FeatureSet fs;
    fs.d = bands.size();
    fs.width = first.width();
    fs.height = first.height();
    fs.stride = stride;
    for (std::size_t y = 0; y < fs.height; y += stride) {
        for (std::size_t x = 0; x < fs.width; x += stride) {
            for (const auto& b : bands) fs.values.push_back(b(x, y) / 255.0);
            fs.coords.push_back({x, y});
        }
    }
    fs.n = fs.coords.size();
    return fs;
}

void ClusterAssignment::validate(std::size_t n) const {
    if (labels.size() != n) throw InvalidArgument("assignment size does not match the feature set");
    if (k < 1) throw InvalidArgument("assignment has no clusters");
    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) {
        if (l >= k) throw InvalidArgument("cluster label out of range");
        ++sizes[l];
    }
    for (std::size_t c = 0; c < k; ++c)
        if (sizes[c] == 0) throw Undefined("cluster " + std::to_string(c) + " is empty");
}

double kernel(std::span<const double> a, std::span<const double> b, double sigma) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
    return std::exp(-d2 / (4.0 * sigma * sigma));
}

double information_potential(const FeatureSet& xs, std::span<const std::size_t> subset, double sigma) {
    if (subset.empty()) throw InvalidArgument("information potential of an empty subset");
    if (!(sigma > 0.0)) throw InvalidArgument("kernel width must be positive");
    double v = 0.0;
    for (auto i : subset)
        for (auto j : subset) v += kernel(xs.sample(i), xs.sample(j), sigma);
    const double n = static_cast<double>(subset.size());
    return v / (n * n);
}

double information_potential(const FeatureSet& xs, double sigma) {
    std::vector<std::size_t> all(xs.n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return information_potential(xs, all, sigma);
}

double cef(const ClusterAssignment& a, const FeatureSet& xs, double sigma) {
    a.validate(xs.n);
    if (!(sigma > 0.0)) throw InvalidArgument("kernel width must be positive");
    const std::size_t k = a.k;
    std::vector<double> cross(k * k, 0.0);
    std::vector<double> sizes(k, 0.0);
    for (std::size_t i = 0; i < xs.n; ++i) {
        sizes[a.labels[i]] += 1.0;
        for (std::size_t j = i + 1; j < xs.n; ++j) {
            const auto ci = a.labels[i], cj = a.labels[j];
            if (ci == cj) continue;
            cross[std::min(ci, cj) * k + std::max(ci, cj)] += kernel(xs.sample(i), xs.sample(j), sigma);
        }
    }
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t e = c + 1; e < k; ++e) total += cross[c * k + e] / (sizes[c] * sizes[e]);
    return total;
}

double silverman_sigma(const FeatureSet& xs) {
    if (xs.n < 2) throw InvalidArgument("kernel width needs at least two samples");
    double acc = 0.0;
    for (std::size_t d = 0; d < xs.d; ++d) {
        double mean = 0.0;
        for (std::size_t i = 0; i < xs.n; ++i) mean += xs.values[i * xs.d + d];
        mean /= static_cast<double>(xs.n);
        double var = 0.0;
        for (std::size_t i = 0; i < xs.n; ++i) {
            const double e = xs.values[i * xs.d + d] - mean;
            var += e * e;
        }
        var /= static_cast<double>(xs.n - 1);
        acc += 1.06 * std::sqrt(var) * std::pow(static_cast<double>(xs.n), -0.2);
    }
    const double sigma = acc / static_cast<double>(xs.d);
    if (!(sigma > 0.0)) throw Undefined("features have zero variance; kernel width undefined");
    return sigma;
}

namespace {

// Samples with identical feature vectors share kernel rows, so the descent
// keeps per-cluster kernel sums per distinct point rather than per sample.
struct Points {
    std::vector<std::size_t> of_sample;  // sample -> distinct point
    std::vector<std::size_t> first;      // distinct point -> a representative sample
};

Points distinct_points(const FeatureSet& xs) {
    Points pts;
    pts.of_sample.resize(xs.n);
    std::map<std::vector<double>, std::size_t> index;
    for (std::size_t i = 0; i < xs.n; ++i) {
        const auto s = xs.sample(i);
        auto [it, fresh] = index.emplace(std::vector<double>(s.begin(), s.end()), pts.first.size());
        if (fresh) pts.first.push_back(i);
        pts.of_sample[i] = it->second;
    }
    return pts;
}

std::vector<double> first_principal_axis(const FeatureSet& xs) {
    const std::size_t d = xs.d;
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < xs.n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += xs.values[i * d + j];
    for (auto& m : mean) m /= static_cast<double>(xs.n);
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t i = 0; i < xs.n; ++i)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                cov[a * d + b] += (xs.values[i * d + a] - mean[a]) * (xs.values[i * d + b] - mean[b]);
    // power iteration from the all-ones vector
    std::vector<double> v(d, 1.0 / std::sqrt(static_cast<double>(d))), next(d);
    for (int it = 0; it < 200; ++it) {
        for (std::size_t a = 0; a < d; ++a) {
            next[a] = 0.0;
            for (std::size_t b = 0; b < d; ++b) next[a] += cov[a * d + b] * v[b];
        }
        double norm = 0.0;
        for (double x : next) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) break;
        for (std::size_t a = 0; a < d; ++a) v[a] = next[a] / norm;
    }
    // sign convention: largest-magnitude component positive
    const auto big = std::max_element(v.begin(), v.end(),
                                      [](double a, double b) { return std::abs(a) < std::abs(b); });
    if (*big < 0.0)
        for (auto& x : v) x = -x;
    return v;
}

class Descent {
public:
    Descent(const FeatureSet& xs, const Points& pts, std::size_t k, double sigma,
            std::vector<std::uint8_t> labels)
        : xs_(xs), pts_(pts), k_(k), sigma_(sigma), labels_(std::move(labels)) {
        const std::size_t m = pts_.first.size();
        count_.assign(m * k_, 0.0);
        size_.assign(k_, 0.0);
        for (std::size_t i = 0; i < xs_.n; ++i) {
            count_[pts_.of_sample[i] * k_ + labels_[i]] += 1.0;
            size_[labels_[i]] += 1.0;
        }
        sums_.assign(m * k_, 0.0);
        for (std::size_t u = 0; u < m; ++u) {
            for (std::size_t v = 0; v < m; ++v) {
                const double g = u == v ? 1.0 : point_kernel(u, v);
                for (std::size_t c = 0; c < k_; ++c) sums_[u * k_ + c] += g * count_[v * k_ + c];
            }
        }
        cross_.assign(k_ * k_, 0.0);
        for (std::size_t u = 0; u < m; ++u)
            for (std::size_t c = 0; c < k_; ++c) {
                const double nu = count_[u * k_ + c];
                if (nu == 0.0) continue;
                for (std::size_t e = 0; e < k_; ++e)
                    if (e != c) cross_[c * k_ + e] += nu * sums_[u * k_ + e];
            }
    }

    double value() const {
        double total = 0.0;
        for (std::size_t c = 0; c < k_; ++c)
            for (std::size_t e = c + 1; e < k_; ++e) total += cross_[c * k_ + e] / (size_[c] * size_[e]);
        return total;
    }

    // One sweep over samples in the given order; returns the number of moves.
    std::size_t pass(std::span<const std::size_t> order) {
        constexpr double kMinGain = 1e-13;
        std::size_t moves = 0;
        for (auto i : order) {
            const std::size_t a = labels_[i];
            if (size_[a] <= 1.0) continue;
            const std::size_t u = pts_.of_sample[i];
            double best_delta = -kMinGain;
            std::size_t best_b = k_;
            for (std::size_t b = 0; b < k_; ++b) {
                if (b == a) continue;
                const double delta = move_delta(u, a, b);
                if (delta < best_delta) {
                    best_delta = delta;
                    best_b = b;
                }
            }
            if (best_b == k_) continue;
            apply_move(i, u, a, best_b);
            ++moves;
        }
        return moves;
    }

    const std::vector<std::uint8_t>& labels() const { return labels_; }

private:
    double point_kernel(std::size_t u, std::size_t v) const {
        return kernel(xs_.sample(pts_.first[u]), xs_.sample(pts_.first[v]), sigma_);
    }

    double pair_cross(std::size_t c, std::size_t e) const { return cross_[c * k_ + e]; }

    double move_delta(std::size_t u, std::size_t a, std::size_t b) const {
        const double* s = &sums_[u * k_];
        const double na = size_[a], nb = size_[b];
        double delta = 0.0;
        for (std::size_t c = 0; c < k_; ++c) {
            if (c == a || c == b) continue;
            const double nc = size_[c];
            delta += (pair_cross(a, c) - s[c]) / ((na - 1.0) * nc) - pair_cross(a, c) / (na * nc);
            delta += (pair_cross(b, c) + s[c]) / ((nb + 1.0) * nc) - pair_cross(b, c) / (nb * nc);
        }
        const double ab_new = pair_cross(a, b) - s[b] + (s[a] - 1.0);
        delta += ab_new / ((na - 1.0) * (nb + 1.0)) - pair_cross(a, b) / (na * nb);
        return delta;
    }

    void apply_move(std::size_t i, std::size_t u, std::size_t a, std::size_t b) {
        const double* s = &sums_[u * k_];
        for (std::size_t c = 0; c < k_; ++c) {
            if (c == a || c == b) continue;
            cross_[a * k_ + c] = cross_[c * k_ + a] = pair_cross(a, c) - s[c];
            cross_[b * k_ + c] = cross_[c * k_ + b] = pair_cross(b, c) + s[c];
        }
        const double ab_new = pair_cross(a, b) - s[b] + (s[a] - 1.0);
        cross_[a * k_ + b] = cross_[b * k_ + a] = ab_new;

        const std::size_t m = pts_.first.size();
        for (std::size_t v = 0; v < m; ++v) {
            const double g = v == u ? 1.0 : point_kernel(u, v);
            sums_[v * k_ + a] -= g;
            sums_[v * k_ + b] += g;
        }
        count_[u * k_ + a] -= 1.0;
        count_[u * k_ + b] += 1.0;
        size_[a] -= 1.0;
        size_[b] += 1.0;
        labels_[i] = static_cast<std::uint8_t>(b);
    }

    const FeatureSet& xs_;
    const Points& pts_;
    std::size_t k_;
    double sigma_;
    std::vector<std::uint8_t> labels_;
    std::vector<double> count_;  // distinct point x cluster -> samples
    std::vector<double> size_;
    std::vector<double> sums_;   // distinct point x cluster -> sum of kernels to cluster members
    std::vector<double> cross_;  // k x k symmetric cross-cluster kernel sums
};

}  // namespace

ClusterResult cluster(const FeatureSet& xs, std::size_t k, double sigma, std::uint64_t seed,
                      std::size_t restarts) {
    if (k < 2 || k > 8) throw InvalidArgument("cluster count must be in [2, 8]");
    if (xs.n < 10 * k)
        throw Undefined("cluster count " + std::to_string(k) + " infeasible for " +
                        std::to_string(xs.n) + " samples (need 10 per cluster)");
    if (!(sigma > 0.0)) throw InvalidArgument("kernel width must be positive");
    if (restarts < 1) throw InvalidArgument("clustering needs at least one restart");

    const Points pts = distinct_points(xs);
    const auto axis = first_principal_axis(xs);
    std::vector<double> proj(xs.n, 0.0);
    for (std::size_t i = 0; i < xs.n; ++i)
        for (std::size_t j = 0; j < xs.d; ++j) proj[i] += axis[j] * xs.values[i * xs.d + j];
    std::vector<std::size_t> ranked(xs.n);
    std::iota(ranked.begin(), ranked.end(), std::size_t{0});
    std::stable_sort(ranked.begin(), ranked.end(),
                     [&](std::size_t a, std::size_t b) { return proj[a] < proj[b]; });

    Rng rng(seed);
    ClusterResult result;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < restarts; ++r) {
        // cut j lands near quantile j/k; later restarts jitter it by up to half a class
        std::vector<std::size_t> cuts(k + 1, 0);
        cuts[k] = xs.n;
        for (std::size_t j = 1; j < k; ++j) {
            const double jitter = r == 0 ? 0.0 : rng.uniform() - 0.5;
            const double f = (static_cast<double>(j) + jitter) / static_cast<double>(k);
            auto c = static_cast<std::size_t>(std::lround(f * static_cast<double>(xs.n)));
            cuts[j] = std::clamp(c, cuts[j - 1] + 1, xs.n - (k - j));
        }
        std::vector<std::uint8_t> labels(xs.n);
        for (std::size_t j = 0; j < k; ++j)
            for (std::size_t p = cuts[j]; p < cuts[j + 1]; ++p)
                labels[ranked[p]] = static_cast<std::uint8_t>(j);

        std::vector<std::size_t> order(xs.n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (r > 0)
            for (std::size_t i = xs.n; i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);

        Descent descent(xs, pts, k, sigma, std::move(labels));
        std::vector<double> trace{descent.value()};
        for (std::size_t p = 0; p < kMaxClusterPasses; ++p) {
            const std::size_t moves = descent.pass(order);
            trace.push_back(descent.value());
            if (moves == 0) break;
        }
        if (trace.back() < best) {
            best = trace.back();
            result.best_restart = r;
            result.assignment = {descent.labels(), k};
        }
        result.traces.push_back(std::move(trace));
    }
    result.cef = cef(result.assignment, xs, sigma);
    return result;
}

LabelMap assignment_to_labelmap(const ClusterAssignment& a, const FeatureSet& xs) {
    a.validate(xs.n);
    const std::size_t s = xs.stride;
    const std::size_t cols = (xs.width + s - 1) / s;
    const std::size_t rows = (xs.height + s - 1) / s;
    if (cols * rows != xs.n) throw InvalidArgument("feature set is not a full stride grid");

    // nearest grid index (or the two equidistant ones) along one axis
    auto candidates = [s](std::size_t v, std::size_t count, std::size_t out[2]) {
        const std::size_t lo = std::min(v / s, count - 1);
        const std::size_t hi = lo + 1;
        if (hi >= count) {
            out[0] = lo;
            return std::size_t{1};
        }
        const std::size_t dlo = v - lo * s, dhi = hi * s - v;
        if (dlo < dhi) { out[0] = lo; return std::size_t{1}; }
        if (dhi < dlo) { out[0] = hi; return std::size_t{1}; }
        out[0] = lo;
        out[1] = hi;
        return std::size_t{2};
    };

    LabelMap out(xs.width, xs.height);
    std::size_t cx[2], cy[2];
    for (std::size_t y = 0; y < xs.height; ++y) {
        const std::size_t ny = candidates(y, rows, cy);
        for (std::size_t x = 0; x < xs.width; ++x) {
            const std::size_t nx = candidates(x, cols, cx);
            std::uint8_t label = 255;
            for (std::size_t i = 0; i < ny; ++i)
                for (std::size_t j = 0; j < nx; ++j)
                    label = std::min(label, a.labels[cy[i] * cols + cx[j]]);
            out(x, y) = label;
        }
    }
    return out;
}

double within_class_entropy(const GrayImage& img, const LabelMap& labels, const EntropyKind& kind) {
    if (!labels.same_shape(img)) throw InvalidArgument("label map and image differ in dimensions");
    const std::size_t k = labels.class_count();
    std::vector<Histogram> hists(k, Histogram{std::vector<std::uint64_t>(256, 0)});
    const auto px = img.pixels();
    const auto lb = labels.labels();
    for (std::size_t i = 0; i < px.size(); ++i) ++hists[lb[i]].counts[px[i]];
    double score = 0.0;
    const double n = static_cast<double>(px.size());
    for (const auto& h : hists) {
        const auto total = h.total();
        if (total == 0) continue;
        score += static_cast<double>(total) / n * entropy(normalize(h), kind);
    }
    return score;
}

}  // namespace entrobench
