#include "entrobench/metrics.hpp"

#include "entrobench/error.hpp"
#include "entrobench/random.hpp"

#include <algorithm>
#include <numeric>

namespace entrobench {

ConfusionMatrix::ConfusionMatrix(std::size_t k, std::vector<std::uint64_t> counts)
    : k_(k), counts_(std::move(counts)) {
    if (counts_.size() != k_ * k_) throw InvalidArgument("confusion matrix must be square");
}

std::uint64_t ConfusionMatrix::total() const noexcept {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
    std::uint64_t t = 0;
    for (std::size_t i = 0; i < k_; ++i) t += counts_[i * k_ + i];
    return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t i) const {
    std::uint64_t s = 0;
    for (std::size_t j = 0; j < k_; ++j) s += counts_[i * k_ + j];
    return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t j) const {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < k_; ++i) s += counts_[i * k_ + j];
    return s;
}

namespace {

// overlap(p, t): pixels predicted p with truth t
std::vector<std::uint64_t> overlap_table(const LabelMap& pred, const LabelMap& truth, std::size_t k) {
    std::vector<std::uint64_t> table(k * k, 0);
    const auto p = pred.labels();
    const auto t = truth.labels();
    for (std::size_t i = 0; i < p.size(); ++i) ++table[p[i] * k + t[i]];
    return table;
}

std::uint64_t diagonal(const std::vector<std::uint64_t>& table, const std::vector<std::size_t>& map,
                       std::size_t k) {
    std::uint64_t d = 0;
    for (std::size_t p = 0; p < k; ++p) d += table[p * k + map[p]];
    return d;
}

}  // namespace

LabelMap align_labels(const LabelMap& pred, const LabelMap& truth) {
    if (!pred.same_shape(truth)) throw InvalidArgument("label maps differ in dimensions");
    const std::size_t k = std::max(pred.class_count(), truth.class_count());
    const auto table = overlap_table(pred, truth, k);

    std::vector<std::size_t> identity(k);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    std::vector<std::size_t> map = identity;

    if (k <= kExhaustiveAlignLimit) {
        // permutations come in lexicographic order, so the first best wins ties
        std::vector<std::size_t> perm = identity;
        std::uint64_t best = 0;
        bool first = true;
        do {
            const auto d = diagonal(table, perm, k);
            if (first || d > best) {
                best = d;
                map = perm;
                first = false;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    } else {
        struct Cell {
            std::uint64_t count;
            std::size_t p, t;
        };
        std::vector<Cell> cells;
        for (std::size_t p = 0; p < k; ++p)
            for (std::size_t t = 0; t < k; ++t) cells.push_back({table[p * k + t], p, t});
        std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
            if (a.count != b.count) return a.count > b.count;
            return a.p != b.p ? a.p < b.p : a.t < b.t;
        });
        std::vector<bool> used_p(k, false), used_t(k, false);
        for (const auto& c : cells) {
            if (used_p[c.p] || used_t[c.t]) continue;
            map[c.p] = c.t;
            used_p[c.p] = used_t[c.t] = true;
        }
        if (diagonal(table, map, k) < diagonal(table, identity, k)) map = identity;
    }

    LabelMap out = pred;
    for (auto& l : out.labels()) l = static_cast<std::uint8_t>(map[l]);
    return out;
}

ConfusionMatrix confusion(const LabelMap& pred, const LabelMap& truth,
                          std::span<const std::size_t> points) {
    if (!pred.same_shape(truth)) throw InvalidArgument("label maps differ in dimensions");
    const std::size_t k = std::max(pred.class_count(), truth.class_count());
    ConfusionMatrix cm(k);
    const auto p = pred.labels();
    const auto t = truth.labels();
    if (points.empty()) {
        for (std::size_t i = 0; i < p.size(); ++i) ++cm(t[i], p[i]);
    } else {
        for (auto i : points) {
            if (i >= p.size()) throw InvalidArgument("truth point outside the raster");
            ++cm(t[i], p[i]);
        }
    }
    return cm;
}

double overall_accuracy(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw InvalidArgument("confusion matrix is empty");
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

double kappa(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) throw InvalidArgument("confusion matrix is empty");
    // integer marginal products keep p_e exact before the final division
    unsigned __int128 chance = 0;
    for (std::size_t i = 0; i < cm.size(); ++i)
        chance += static_cast<unsigned __int128>(cm.row_sum(i)) * cm.col_sum(i);
    const unsigned __int128 n2 = static_cast<unsigned __int128>(total) * total;
    if (chance == n2) throw Undefined("kappa undefined: expected agreement is 1");
    // kappa = (n*trace - chance) / (n^2 - chance)
    const auto agree = static_cast<unsigned __int128>(total) * cm.trace();
    const double num = agree >= chance ? static_cast<double>(agree - chance)
                                       : -static_cast<double>(chance - agree);
    return num / static_cast<double>(n2 - chance);
}

std::vector<std::size_t> sample_truth_points(const LabelMap& truth, std::size_t per_class,
                                             std::uint64_t seed) {
    const std::size_t k = truth.class_count();
    std::vector<std::vector<std::size_t>> members(k);
    const auto t = truth.labels();
    for (std::size_t i = 0; i < t.size(); ++i) members[t[i]].push_back(i);
    Rng rng(seed);
    std::vector<std::size_t> out;
    for (auto& m : members) {
        const std::size_t take = std::min(per_class, m.size());
        for (std::size_t j = 0; j < take; ++j) std::swap(m[j], m[j + rng.below(m.size() - j)]);
        out.insert(out.end(), m.begin(), m.begin() + static_cast<long>(take));
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace entrobench
