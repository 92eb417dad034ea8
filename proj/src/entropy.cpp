#include "entrobench/entropy.hpp"

#include "entrobench/error.hpp"

#include <cmath>
#include <numeric>

namespace entrobench {

namespace {

constexpr double kMassTolerance = 1e-12;
constexpr double kUnitGuard = 1e-9;

void check_mass(std::span<const double> p) {
    if (p.empty()) throw InvalidArgument("distribution has no bins");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw InvalidArgument("distribution has a negative or NaN entry");
        sum += v;
    }
    if (std::abs(sum - 1.0) > kMassTolerance)
        throw InvalidArgument("distribution mass " + std::to_string(sum) + " is not 1");
}

bool valid_bin_count(std::size_t bins) {
    return bins >= 2 && bins <= 256 && (bins & (bins - 1)) == 0;
}

}  // namespace

std::uint64_t Histogram::total() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

ProbDist::ProbDist(std::vector<double> p) : p_(std::move(p)) { check_mass(p_); }

JointDist::JointDist(std::size_t bins_a, std::size_t bins_b, std::vector<double> p)
    : bins_a_(bins_a), bins_b_(bins_b), p_(std::move(p)) {
    if (p_.size() != bins_a_ * bins_b_) throw InvalidArgument("joint distribution shape mismatch");
    check_mass(p_);
}

ProbDist JointDist::marginal_a() const {
    std::vector<double> m(bins_a_, 0.0);
    for (std::size_t a = 0; a < bins_a_; ++a)
        for (std::size_t b = 0; b < bins_b_; ++b) m[a] += p_[a * bins_b_ + b];
    return ProbDist(std::move(m));
}

ProbDist JointDist::marginal_b() const {
    std::vector<double> m(bins_b_, 0.0);
    for (std::size_t a = 0; a < bins_a_; ++a)
        for (std::size_t b = 0; b < bins_b_; ++b) m[b] += p_[a * bins_b_ + b];
    return ProbDist(std::move(m));
}

EntropyKind EntropyKind::renyi(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw InvalidArgument("Renyi order must be positive and finite");
    if (std::abs(alpha - 1.0) < kUnitGuard)
        throw InvalidArgument("Renyi order too close to 1; request shannon instead");
    return EntropyKind(Family::Renyi, alpha);
}

EntropyKind EntropyKind::tsallis(double q) {
    if (!(q > 0.0) || !std::isfinite(q))
        throw InvalidArgument("Tsallis index must be positive and finite");
    if (std::abs(q - 1.0) < kUnitGuard)
        throw InvalidArgument("Tsallis index too close to 1; request shannon instead");
    return EntropyKind(Family::Tsallis, q);
}

EntropyKind EntropyKind::from_name(const std::string& name, double parameter) {
    if (name == "shannon") return shannon();
    if (name == "renyi") return renyi(parameter);
    if (name == "tsallis") return tsallis(parameter);
    throw InvalidArgument("unknown entropy '" + name + "' (expected shannon, renyi or tsallis)");
}

std::string EntropyKind::name() const {
    switch (family_) {
        case Family::Shannon: return "shannon";
        case Family::Renyi: return "renyi";
        case Family::Tsallis: return "tsallis";
    }
    return "?";
}

Histogram histogram(const GrayImage& img, std::size_t bins) {
    if (!valid_bin_count(bins))
        throw InvalidArgument("histogram bins must divide 256 (2, 4, ..., 256), got " +
                              std::to_string(bins));
    Histogram h{std::vector<std::uint64_t>(bins, 0)};
    for (auto v : img.pixels()) ++h.counts[v * bins / 256];
    return h;
}

ProbDist normalize(const Histogram& h) {
    const auto total = h.total();
    if (total == 0) throw InvalidArgument("cannot normalize an empty histogram");
    std::vector<double> p(h.bins());
    const double inv = 1.0 / static_cast<double>(total);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(h.counts[i]) * inv;
    return ProbDist(std::move(p));
}

double entropy_unchecked(std::span<const double> p, const EntropyKind& kind) {
    switch (kind.family()) {
        case EntropyKind::Family::Shannon: {
            double h = 0.0;
            for (double v : p)
                if (v > 0.0) h -= v * std::log(v);
            return h;
        }
        case EntropyKind::Family::Renyi: {
            // sum p^a = 1 + sum p (p^(a-1) - 1); the expm1 form stays accurate near a = 1,
            // the plain sum when it is far from 1
            const double a1 = kind.parameter() - 1.0;
            double s = 0.0, direct = 0.0;
            for (double v : p)
                if (v > 0.0) {
                    const double lv = std::log(v);
                    s += v * std::expm1(a1 * lv);
                    direct += std::exp(kind.parameter() * lv);
                }
            if (std::abs(s) > 0.5) return std::log(direct) / -a1;
            return std::log1p(s) / -a1;
        }
        case EntropyKind::Family::Tsallis: {
            const double q1 = kind.parameter() - 1.0;
            double s = 0.0;
            for (double v : p)
                if (v > 0.0) s += v * std::expm1(q1 * std::log(v));
            return -s / q1;
        }
    }
    return 0.0;
}

double entropy(const ProbDist& p, const EntropyKind& kind) {
    return entropy_unchecked(p.p(), kind);
}

JointDist joint_histogram(const GrayImage& a, const GrayImage& b, std::size_t bins,
                          std::span<const std::uint8_t> mask) {
    if (!valid_bin_count(bins))
        throw InvalidArgument("joint histogram bins must divide 256, got " + std::to_string(bins));
    if (!a.same_shape(b)) throw InvalidArgument("joint histogram: image dimensions differ");
    if (!mask.empty() && mask.size() != a.size())
        throw InvalidArgument("joint histogram: mask dimensions differ");

    std::vector<std::uint64_t> counts(bins * bins, 0);
    std::uint64_t valid = 0;
    const auto pa = a.pixels();
    const auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        if (!mask.empty() && mask[i] == 0) continue;
        ++counts[(pa[i] * bins / 256) * bins + pb[i] * bins / 256];
        ++valid;
    }
    if (valid == 0) throw Undefined("joint histogram: no valid pixels");
    std::vector<double> p(counts.size());
    const double inv = 1.0 / static_cast<double>(valid);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(counts[i]) * inv;
    return JointDist(bins, bins, std::move(p));
}

double mutual_information(const JointDist& j, const EntropyKind& kind) {
    return entropy(j.marginal_a(), kind) + entropy(j.marginal_b(), kind) -
           entropy_unchecked(j.p(), kind);
}

}  // namespace entrobench
