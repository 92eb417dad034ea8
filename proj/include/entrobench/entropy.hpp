#pragma once

#include "entrobench/raster.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace entrobench {

/// Bin counts; total is the sum of counts.
struct Histogram {
    std::vector<std::uint64_t> counts;

    std::size_t bins() const noexcept { return counts.size(); }
    std::uint64_t total() const noexcept;
};

/// Normalized distribution over bins. The constructor checks p_i >= 0 and
/// that the mass sums to 1 within 1e-12.
class ProbDist {
public:
    ProbDist() = default;
    explicit ProbDist(std::vector<double> p);

    std::span<const double> p() const noexcept { return p_; }
    std::size_t size() const noexcept { return p_.size(); }
    double operator[](std::size_t i) const { return p_[i]; }

private:
    std::vector<double> p_;
};

/// Joint distribution over (a, b) bin pairs, stored row-major by a.
class JointDist {
public:
    JointDist() = default;
    JointDist(std::size_t bins_a, std::size_t bins_b, std::vector<double> p);

    std::size_t bins_a() const noexcept { return bins_a_; }
    std::size_t bins_b() const noexcept { return bins_b_; }
    std::span<const double> p() const noexcept { return p_; }
    double operator()(std::size_t a, std::size_t b) const { return p_[a * bins_b_ + b]; }

    ProbDist marginal_a() const;
    ProbDist marginal_b() const;

private:
    std::size_t bins_a_ = 0;
    std::size_t bins_b_ = 0;
    std::vector<double> p_;
};

/// Which entropy functional to apply. Rényi order and Tsallis index must be
/// positive and at least 1e-9 away from 1; ask for Shannon explicitly instead.
class EntropyKind {
public:
    enum class Family { Shannon, Renyi, Tsallis };

    static EntropyKind shannon() { return EntropyKind(Family::Shannon, 1.0); }
    static EntropyKind renyi(double alpha);
    static EntropyKind tsallis(double q);

    /// Parses "shannon", "renyi" or "tsallis" with the given parameter
    /// (ignored for shannon).
    static EntropyKind from_name(const std::string& name, double parameter);

    Family family() const noexcept { return family_; }
    /// α for Rényi, q for Tsallis, 1 for Shannon.
    double parameter() const noexcept { return parameter_; }
    std::string name() const;

    friend bool operator==(const EntropyKind&, const EntropyKind&) = default;

private:
    EntropyKind(Family f, double p) : family_(f), parameter_(p) {}

    Family family_;
    double parameter_;
};

inline constexpr double kDefaultRenyiAlpha = 2.0;
inline constexpr double kDefaultTsallisQ = 2.0;
inline constexpr std::size_t kDefaultMiBins = 64;

/// Histogram over bins equal-width intensity bins; intensity i lands in
/// floor(i * bins / 256). bins must be a power of two in [2, 256].
Histogram histogram(const GrayImage& img, std::size_t bins = 256);

ProbDist normalize(const Histogram& h);

/// Entropy in nats. Zero-probability bins contribute nothing for every kind.
double entropy(const ProbDist& p, const EntropyKind& kind);

/// Same functional on an unchecked mass vector (used by hot loops that
/// already guarantee normalization).
double entropy_unchecked(std::span<const double> p, const EntropyKind& kind);

/// Normalized joint histogram of (a, b) over pixels whose mask byte is
/// nonzero. An empty mask means every pixel is valid.
JointDist joint_histogram(const GrayImage& a, const GrayImage& b, std::size_t bins,
                          std::span<const std::uint8_t> mask = {});

/// H(A) + H(B) - H(A,B) under the chosen functional. Nonnegative for Shannon;
/// may be negative for the generalized kinds.
double mutual_information(const JointDist& j, const EntropyKind& kind);

}  // namespace entrobench
