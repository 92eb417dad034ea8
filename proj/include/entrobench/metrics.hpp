#pragma once

#include "entrobench/raster.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace entrobench {

/// Square count table; entry (i, j) counts pixels of true class i predicted as j.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {}
    /// Row-major k x k counts.
    ConfusionMatrix(std::size_t k, std::vector<std::uint64_t> counts);

    std::size_t size() const noexcept { return k_; }
    std::uint64_t operator()(std::size_t truth, std::size_t pred) const { return counts_[truth * k_ + pred]; }
    std::uint64_t& operator()(std::size_t truth, std::size_t pred) { return counts_[truth * k_ + pred]; }

    std::uint64_t total() const noexcept;
    std::uint64_t trace() const noexcept;
    std::uint64_t row_sum(std::size_t i) const;
    std::uint64_t col_sum(std::size_t j) const;

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::size_t k_ = 0;
    std::vector<std::uint64_t> counts_;
};

/// Up to this many labels the alignment tries every permutation; above it a
/// greedy largest-overlap-first matching is used.
inline constexpr std::size_t kExhaustiveAlignLimit = 5;

/// Relabels pred to maximize agreement with truth. Returned labels stay
/// below max(pred classes, truth classes).
LabelMap align_labels(const LabelMap& pred, const LabelMap& truth);

/// Matrix of size max(pred classes, truth classes). If points is nonempty
/// only those pixel indices are counted.
ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& truth,
                          std::span<const std::size_t> points = {});

double overall_accuracy(const ConfusionMatrix& cm);

/// Cohen's kappa. Throws Undefined when expected agreement is 1.
double kappa(const ConfusionMatrix& cm);

/// n pixel indices per truth class (all of them if the class is smaller),
/// drawn with a seeded shuffle; sorted ascending.
std::vector<std::size_t> sample_truth_points(const LabelMap& truth, std::size_t per_class,
                                             std::uint64_t seed);

}  // namespace entrobench
