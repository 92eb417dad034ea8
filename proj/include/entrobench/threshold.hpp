#pragma once

#include "entrobench/entropy.hpp"
#include "entrobench/raster.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace entrobench {

inline constexpr std::size_t kMaxThresholdLevel = 5;
inline constexpr std::size_t kMaxExhaustiveLevel = 3;

/// Strictly increasing thresholds t_1 < ... < t_k. Class m covers the bins
/// (t_{m-1}, t_m] with t_0 = -1 and t_{k+1} = B - 1.
class ThresholdSet {
public:
    ThresholdSet() = default;
    explicit ThresholdSet(std::vector<int> thresholds);

    std::size_t level() const noexcept { return t_.size(); }
    std::span<const int> values() const noexcept { return t_; }
    int operator[](std::size_t i) const { return t_[i]; }

    friend bool operator==(const ThresholdSet&, const ThresholdSet&) = default;
    friend auto operator<=>(const ThresholdSet&, const ThresholdSet&) = default;

private:
    std::vector<int> t_;
};

/// Kapur-style sum of within-class entropies (Tsallis classes are composed
/// pseudo-additively). Maximized.
struct MaxEntropy {
    EntropyKind kind;
};

/// Li's minimum cross-entropy. Minimized.
struct CrossEntropy {};

using Criterion = std::variant<MaxEntropy, CrossEntropy>;

/// "shannon" / "renyi" / "tsallis" / "cross".
std::string criterion_name(const Criterion& c);
bool minimizes(const Criterion& c);

/// Criterion value mapped so that larger is always better.
double oriented(const Criterion& c, double value);

/// Within-class renormalized distribution over bins [lo, hi].
ProbDist class_distribution(const Histogram& h, std::size_t lo, std::size_t hi);

/// True when every class induced by t on h has nonzero mass.
bool feasible(const Histogram& h, const ThresholdSet& t);

/// Straightforward evaluation through class_distribution and entropy.
/// Throws Undefined if some class is empty.
double criterion_value(const Histogram& h, const ThresholdSet& t, const Criterion& c);

struct ThresholdResult {
    ThresholdSet thresholds;
    double value = 0.0;            // raw criterion value (not oriented)
    std::size_t evaluations = 0;
};

/// Global optimum over every feasible k-tuple, k in [1, 3]; ties go to the
/// lexicographically smallest tuple.
ThresholdResult exhaustive_search(const Histogram& h, std::size_t k, const Criterion& c);

/// Seeded (mu+lambda) evolutionary search followed by coarse-to-fine
/// coordinate line searches from the population and from random restarts.
/// budget counts distinct criterion evaluations; k in [1, 5]. A space with
/// no more tuples than the budget is enumerated outright.
ThresholdResult heuristic_search(const Histogram& h, std::size_t k, const Criterion& c,
                                 std::uint64_t seed, std::size_t budget);

/// Pixel with intensity v gets the number of thresholds strictly below v.
LabelMap apply_thresholds(const GrayImage& img, const ThresholdSet& t);

}  // namespace entrobench
