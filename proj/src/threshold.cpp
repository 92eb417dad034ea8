#include "entrobench/threshold.hpp"

#include "entrobench/error.hpp"
#include "entrobench/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace entrobench {

ThresholdSet::ThresholdSet(std::vector<int> thresholds) : t_(std::move(thresholds)) {
    if (t_.empty() || t_.size() > kMaxThresholdLevel)
        throw InvalidArgument("threshold level must be in [1, 5]");
    for (std::size_t i = 0; i < t_.size(); ++i) {
        if (t_[i] < 0 || t_[i] > 254) throw InvalidArgument("threshold outside [0, 254]");
        if (i > 0 && t_[i] <= t_[i - 1]) throw InvalidArgument("thresholds must strictly increase");
    }
}

std::string criterion_name(const Criterion& c) {
    if (const auto* me = std::get_if<MaxEntropy>(&c)) return me->kind.name();
    return "cross";
}

bool minimizes(const Criterion& c) { return std::holds_alternative<CrossEntropy>(c); }

double oriented(const Criterion& c, double value) { return minimizes(c) ? -value : value; }

ProbDist class_distribution(const Histogram& h, std::size_t lo, std::size_t hi) {
    if (lo > hi || hi >= h.bins()) throw InvalidArgument("class interval outside histogram");
    std::uint64_t mass = 0;
    for (std::size_t i = lo; i <= hi; ++i) mass += h.counts[i];
    if (mass == 0)
        throw Undefined("empty class interval [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
    std::vector<double> p(hi - lo + 1);
    for (std::size_t i = lo; i <= hi; ++i)
        p[i - lo] = static_cast<double>(h.counts[i]) / static_cast<double>(mass);
    return ProbDist(std::move(p));
}

namespace {

// (lo, hi) class bounds for a threshold tuple on a B-bin histogram.
template <typename Fn>
void for_each_class(std::span<const int> t, std::size_t bins, Fn&& fn) {
    std::size_t lo = 0;
    for (int v : t) {
        fn(lo, static_cast<std::size_t>(v));
        lo = static_cast<std::size_t>(v) + 1;
    }
    fn(lo, bins - 1);
}

void check_fits(const Histogram& h, const ThresholdSet& t) {
    if (h.bins() < 2) throw InvalidArgument("histogram needs at least two bins");
    if (static_cast<std::size_t>(t.values().back()) + 2 > h.bins())
        throw InvalidArgument("threshold beyond the last histogram bin");
}

// Per-interval class terms from running sums, so a k-tuple costs O(k).
class IntervalTable {
public:
    IntervalTable(const Histogram& h, const Criterion& c) : bins_(h.bins()), crit_(c) {
        prefix_.assign(bins_ + 1, 0);
        for (std::size_t i = 0; i < bins_; ++i) prefix_[i + 1] = prefix_[i] + h.counts[i];
        const double total = static_cast<double>(prefix_[bins_]);
        if (total == 0.0) throw InvalidArgument("histogram is empty");

        term_.assign(bins_ * bins_, 0.0);
        const auto* me = std::get_if<MaxEntropy>(&c);
        const double param = me ? me->kind.parameter() : 1.0;
        for (std::size_t lo = 0; lo < bins_; ++lo) {
            double w = 0.0, s = 0.0, first = 0.0;
            for (std::size_t hi = lo; hi < bins_; ++hi) {
                const double n = static_cast<double>(h.counts[hi]);
                if (n > 0.0) {
                    w += n;
                    if (!me) {
                        const double i = static_cast<double>(hi);
                        first += i * n;
                        if (hi > 0) s += i * n * std::log(i);
                    } else if (me->kind.family() == EntropyKind::Family::Shannon) {
                        s += n * std::log(n);
                    } else {
                        s += std::pow(n, param);
                    }
                }
                if (w == 0.0) continue;
                double v;
                if (!me) {
                    v = first > 0.0 ? (s - first * std::log(first / w)) / total : 0.0;
                } else {
                    switch (me->kind.family()) {
                        case EntropyKind::Family::Shannon: v = std::log(w) - s / w; break;
                        case EntropyKind::Family::Renyi:
                            v = (std::log(s) - param * std::log(w)) / (1.0 - param);
                            break;
                        default: v = (1.0 - s / std::pow(w, param)) / (param - 1.0); break;
                    }
                }
                term_[lo * bins_ + hi] = v;
            }
        }
        tsallis_ = me && me->kind.family() == EntropyKind::Family::Tsallis;
        q_ = param;
    }

    std::size_t bins() const { return bins_; }
    std::uint64_t mass(std::size_t lo, std::size_t hi) const { return prefix_[hi + 1] - prefix_[lo]; }
    double term(std::size_t lo, std::size_t hi) const { return term_[lo * bins_ + hi]; }

    // Combination of per-class terms, oriented so larger is better.
    double combine(double sum, double product) const {
        if (tsallis_) return sum + (1.0 - q_) * product;
        return minimizes(crit_) ? -sum : sum;
    }
    bool needs_product() const { return tsallis_; }

    double score(std::span<const int> t) const {
        double sum = 0.0, product = 1.0;
        for_each_class(t, bins_, [&](std::size_t lo, std::size_t hi) {
            const double v = term(lo, hi);
            sum += v;
            product *= v;
        });
        return combine(sum, product);
    }

private:
    std::size_t bins_;
    Criterion crit_;
    std::vector<std::uint64_t> prefix_;
    std::vector<double> term_;
    bool tsallis_ = false;
    double q_ = 1.0;
};

bool improves(double candidate, double best) {
    return candidate > best + 1e-12 * std::max(1.0, std::abs(best));
}

// Indices of nonempty bins. Feasible tuples are in one-to-one correspondence
// with strictly increasing choices of "gaps" between consecutive nonempty
// bins; the smallest threshold realizing gap g is nonzero[g].
std::vector<int> nonzero_bins(const Histogram& h) {
    std::vector<int> z;
    for (std::size_t i = 0; i < h.bins(); ++i)
        if (h.counts[i] > 0) z.push_back(static_cast<int>(i));
    return z;
}

std::vector<int> to_thresholds(std::span<const int> gaps, std::span<const int> nonzero) {
    std::vector<int> t(gaps.size());
    for (std::size_t j = 0; j < gaps.size(); ++j) t[j] = nonzero[static_cast<std::size_t>(gaps[j])];
    return t;
}

void check_level(const Histogram& h, std::size_t k, std::size_t max_level,
                 std::span<const int> nonzero) {
    if (k < 1 || k > max_level)
        throw InvalidArgument("threshold level must be in [1, " + std::to_string(max_level) + "]");
    if (h.bins() > 256) throw InvalidArgument("histogram has more than 256 bins");
    if (nonzero.size() < k + 1)
        throw Undefined("no feasible threshold tuple: histogram mass occupies " +
                        std::to_string(nonzero.size()) + " bins, need " + std::to_string(k + 1));
}

}  // namespace

bool feasible(const Histogram& h, const ThresholdSet& t) {
    if (t.level() == 0 || static_cast<std::size_t>(t.values().back()) + 2 > h.bins()) return false;
    bool ok = true;
    for_each_class(t.values(), h.bins(), [&](std::size_t lo, std::size_t hi) {
        std::uint64_t mass = 0;
        for (std::size_t i = lo; i <= hi; ++i) mass += h.counts[i];
        ok = ok && mass > 0;
    });
    return ok;
}

double criterion_value(const Histogram& h, const ThresholdSet& t, const Criterion& c) {
    check_fits(h, t);
    if (const auto* me = std::get_if<MaxEntropy>(&c)) {
        double sum = 0.0, product = 1.0;
        for_each_class(t.values(), h.bins(), [&](std::size_t lo, std::size_t hi) {
            const double v = entropy(class_distribution(h, lo, hi), me->kind);
            sum += v;
            product *= v;
        });
        if (me->kind.family() == EntropyKind::Family::Tsallis)
            return sum + (1.0 - me->kind.parameter()) * product;
        return sum;
    }
    // eta = sum_m sum_{i in C_m, i >= 1} i p_i ln(i / mu_m), p normalized over the whole histogram
    const auto total = static_cast<double>(h.total());
    double eta = 0.0;
    for_each_class(t.values(), h.bins(), [&](std::size_t lo, std::size_t hi) {
        double w = 0.0, first = 0.0;
        for (std::size_t i = lo; i <= hi; ++i) {
            w += static_cast<double>(h.counts[i]);
            first += static_cast<double>(i) * static_cast<double>(h.counts[i]);
        }
        if (w == 0.0)
            throw Undefined("empty class interval [" + std::to_string(lo) + "," +
                            std::to_string(hi) + "]");
        const double mu = first / w;
        for (std::size_t i = std::max<std::size_t>(lo, 1); i <= hi; ++i) {
            if (h.counts[i] == 0) continue;
            const double fi = static_cast<double>(i);
            eta += fi * (static_cast<double>(h.counts[i]) / total) * std::log(fi / mu);
        }
    });
    return eta;
}

namespace {

ThresholdResult enumerate_gaps(const IntervalTable& table, std::span<const int> nonzero, std::size_t k,
                               const Criterion& c) {
    const int gaps = static_cast<int>(nonzero.size()) - 1;

    std::vector<int> current(k), best;
    double best_score = -std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;

    // Depth-first over gap choices; lexicographic gap order equals
    // lexicographic threshold order, so the first of tied optima is kept.
    auto recurse = [&](auto&& self, std::size_t depth, int first_gap, std::size_t lo, double sum,
                       double product) -> void {
        const int last_gap = gaps - static_cast<int>(k - depth);
        for (int g = first_gap; g <= last_gap; ++g) {
            const auto hi = static_cast<std::size_t>(nonzero[static_cast<std::size_t>(g)]);
            const double v = table.term(lo, hi);
            current[depth] = g;
            if (depth + 1 == k) {
                const double tail = table.term(hi + 1, table.bins() - 1);
                const double score = table.combine(sum + v + tail, product * v * tail);
                ++evaluations;
                if (best.empty() || improves(score, best_score)) {
                    best_score = score;
                    best = current;
                }
            } else {
                self(self, depth + 1, g + 1, hi + 1, sum + v, product * v);
            }
        }
    };
    recurse(recurse, 0, 0, 0, 0.0, 1.0);

    ThresholdResult result{ThresholdSet(to_thresholds(best, nonzero)), 0.0, evaluations};
    result.value = oriented(c, best_score);
    return result;
}

// C(n, k), saturating at limit + 1
std::size_t choose_capped(std::size_t n, std::size_t k, std::size_t limit) {
    if (k > n) return 0;
    double r = 1.0;
    for (std::size_t j = 0; j < k; ++j) {
        r = r * static_cast<double>(n - j) / static_cast<double>(j + 1);
        if (r > static_cast<double>(limit)) return limit + 1;
    }
    return static_cast<std::size_t>(std::llround(r));
}

}  // namespace

ThresholdResult exhaustive_search(const Histogram& h, std::size_t k, const Criterion& c) {
    const auto nonzero = nonzero_bins(h);
    check_level(h, k, kMaxExhaustiveLevel, nonzero);
    return enumerate_gaps(IntervalTable(h, c), nonzero, k, c);
}

ThresholdResult heuristic_search(const Histogram& h, std::size_t k, const Criterion& c,
                                 std::uint64_t seed, std::size_t budget) {
    constexpr std::size_t kPopulation = 20;
    constexpr std::size_t kOffspring = 20;
    constexpr double kInitialSigma = 8.0;

    const auto nonzero = nonzero_bins(h);
    check_level(h, k, kMaxThresholdLevel, nonzero);
    if (budget < 50 * k) throw InvalidArgument("heuristic budget must be at least 50 * level");
    const IntervalTable table(h, c);
    const int max_gap = static_cast<int>(nonzero.size()) - 2;
    // a space no larger than the budget is searched completely
    if (choose_capped(nonzero.size() - 1, k, budget) <= budget) return enumerate_gaps(table, nonzero, k, c);
    Rng rng(seed);

    struct Candidate {
        std::vector<int> gaps;
        double score;
    };
    std::map<std::vector<int>, double> seen;
    std::size_t misses = 0;

    auto evaluate = [&](const std::vector<int>& gaps) -> const double* {
        auto it = seen.find(gaps);
        if (it != seen.end()) {
            ++misses;
            return nullptr;
        }
        if (seen.size() >= budget) return nullptr;
        const double s = table.score(to_thresholds(gaps, nonzero));
        return &seen.emplace(gaps, s).first->second;
    };

    // sorted, strictly increasing, within [0, max_gap]
    auto repair = [&](std::vector<int>& g) {
        for (auto& v : g) v = std::clamp(v, 0, max_gap);
        std::sort(g.begin(), g.end());
        for (std::size_t j = 1; j < g.size(); ++j) g[j] = std::max(g[j], g[j - 1] + 1);
        for (std::size_t j = g.size(); j-- > 0;)
            g[j] = std::min(g[j], max_gap - static_cast<int>(g.size() - 1 - j));
    };

    auto random_gaps = [&] {
        // partial Fisher-Yates over all gap indices
        std::vector<int> pool(static_cast<std::size_t>(max_gap) + 1);
        std::iota(pool.begin(), pool.end(), 0);
        for (std::size_t j = 0; j < k; ++j) {
            const auto r = j + rng.below(pool.size() - j);
            std::swap(pool[j], pool[r]);
        }
        std::vector<int> g(pool.begin(), pool.begin() + static_cast<long>(k));
        std::sort(g.begin(), g.end());
        return g;
    };

    // maps a (possibly perturbed) threshold position back to the gap it falls in
    auto gap_of = [&](double t) {
        const auto it = std::upper_bound(nonzero.begin(), nonzero.end(),
                                         static_cast<int>(std::lround(t)));
        return static_cast<int>(it - nonzero.begin()) - 1;
    };

    auto by_rank = [](const Candidate& a, const Candidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.gaps < b.gaps;
    };

    std::vector<Candidate> population;
    for (std::size_t attempt = 0; population.size() < kPopulation && attempt < 50 * kPopulation;
         ++attempt) {
        auto g = random_gaps();
        if (const double* s = evaluate(g)) population.push_back({std::move(g), *s});
    }
    std::sort(population.begin(), population.end(), by_rank);

    // The evolutionary phase gets 30% of the budget; the rest goes to line searches.
    const std::size_t evolve_budget = budget * 3 / 10;
    const std::size_t miss_limit = 20 * budget;
    while (seen.size() < evolve_budget && misses < miss_limit && !population.empty()) {
        const auto halvings = static_cast<int>(4 * seen.size() / budget);
        const double sigma = kInitialSigma * std::ldexp(1.0, -halvings);
        std::vector<Candidate> offspring;
        for (std::size_t n = 0; n < kOffspring && seen.size() < evolve_budget; ++n) {
            const auto& a = population[rng.below(population.size())];
            const auto& b = population[rng.below(population.size())];
            std::vector<int> g(k);
            for (std::size_t j = 0; j < k; ++j) {
                const int parent_gap = rng.uniform() < 0.5 ? a.gaps[j] : b.gaps[j];
                const double pos = nonzero[static_cast<std::size_t>(parent_gap)] + sigma * rng.normal();
                g[j] = gap_of(pos);
            }
            repair(g);
            if (const double* s = evaluate(g)) offspring.push_back({std::move(g), *s});
        }
        population.insert(population.end(), std::make_move_iterator(offspring.begin()),
                          std::make_move_iterator(offspring.end()));
        std::sort(population.begin(), population.end(), by_rank);
        if (population.size() > kPopulation) population.resize(kPopulation);
    }

    // Coordinate line search: each threshold in turn takes its best gap between
    // its neighbours, until a full sweep changes nothing.
    // lo..hi scanned at the given stride around the current gap (radius 0 means the full range)
    auto line_search = [&](Candidate cur, int stride, int radius) {
        bool moved = true;
        while (moved) {
            moved = false;
            for (std::size_t j = 0; j < k; ++j) {
                int lo = j == 0 ? 0 : cur.gaps[j - 1] + 1;
                int hi = j + 1 == k ? max_gap : cur.gaps[j + 1] - 1;
                if (radius > 0) {
                    lo = std::max(lo, cur.gaps[j] - radius);
                    hi = std::min(hi, cur.gaps[j] + radius);
                }
                Candidate pick = cur;
                for (int gj = cur.gaps[j] - (cur.gaps[j] - lo) / stride * stride; gj <= hi; gj += stride) {
                    auto g = cur.gaps;
                    g[j] = gj;
                    double s;
                    if (auto it = seen.find(g); it != seen.end()) {
                        s = it->second;
                    } else if (const double* fresh = evaluate(g)) {
                        s = *fresh;
                    } else {
                        continue;
                    }
                    if (by_rank({g, s}, pick)) pick = {std::move(g), s};
                }
                if (pick.gaps != cur.gaps) {
                    cur = std::move(pick);
                    moved = true;
                }
            }
        }
        return cur;
    };
    constexpr int coarse = 16;
    auto descend = [&](Candidate cur) {
        cur = line_search(std::move(cur), coarse, 0);
        for (int st = coarse / 2; st >= 1; st /= 2) cur = line_search(std::move(cur), st, 2 * st);
        return cur;
    };

    Candidate best = population.front();
    for (const auto& [g, s] : seen)
        if (by_rank({g, s}, best)) best = {g, s};
    best = descend(best);
    for (const auto& start : population) {
        if (seen.size() >= budget) break;
        const auto local = descend(start);
        if (by_rank(local, best)) best = local;
    }
    // leftover budget: restarts from fresh random tuples
    for (std::size_t attempt = 0; seen.size() < budget && attempt < budget; ++attempt) {
        auto g = random_gaps();
        const double* s = evaluate(g);
        if (!s) continue;
        const auto local = descend({std::move(g), *s});
        if (by_rank(local, best)) best = local;
    }

    ThresholdResult result{ThresholdSet(to_thresholds(best.gaps, nonzero)), oriented(c, best.score),
                           seen.size()};
    return result;
}

LabelMap apply_thresholds(const GrayImage& img, const ThresholdSet& t) {
    std::array<std::uint8_t, 256> lut{};
    for (int v = 0; v < 256; ++v) {
        std::uint8_t label = 0;
        for (int th : t.values())
            if (v > th) ++label;
        lut[static_cast<std::size_t>(v)] = label;
    }
    LabelMap out(img.width(), img.height());
    auto dst = out.labels();
    const auto src = img.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = lut[src[i]];
    return out;
}

}  // namespace entrobench
