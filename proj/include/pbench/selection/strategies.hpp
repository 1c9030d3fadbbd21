#ifndef PBENCH_SELECTION_STRATEGIES_HPP
#define PBENCH_SELECTION_STRATEGIES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbench/core/dataset.hpp"
#include "pbench/core/plan.hpp"
#include "pbench/core/rng.hpp"
#include "pbench/features/similarity.hpp"
#include "pbench/harness/victim.hpp"

namespace pbench {

struct StrategyConfig {
    std::string kind = "pfs";  // random | pfs | top_r | bottom_r | fus | fus_pfs
    int m = 10;                // diversity rate (pfs / fus_pfs)
    int fus_iterations = 15;
    double fus_keep_fraction = 0.5;
    std::optional<VictimConfig> proxy_victim;  // fus kinds only
    std::int64_t seed = 0;

    void validate(double r, std::int64_t n) const {
        if (m < 1) throw std::invalid_argument("strategy: m must be >= 1");
        const auto p = expected_poison_count(r, n);
        if (kind == "pfs" || kind == "fus_pfs") {
            if (static_cast<std::int64_t>(m) * p > n)
                throw std::invalid_argument("strategy: m*P exceeds dataset size (pool overflow)");
        }
        if (kind == "fus" || kind == "fus_pfs") {
            if (fus_iterations < 1) throw std::invalid_argument("strategy: fus_iterations >= 1");
            if (!(fus_keep_fraction > 0.0 && fus_keep_fraction <= 1.0))
                throw std::invalid_argument("strategy: fus_keep_fraction in (0,1]");
            if (!proxy_victim) throw std::invalid_argument("strategy: fus needs a proxy victim");
        }
    }
};

namespace detail {

inline PoisonPlan make_plan(const DatasetRef& dataset, const TriggerSpec& trigger,
                            std::int32_t target_label, double r,
                            std::vector<std::int64_t> indices, std::string tag,
                            std::int64_t seed) {
    PoisonPlan plan;
    plan.dataset = dataset;
    plan.trigger = trigger;
    plan.target_label = target_label;
    plan.poisoning_rate = r;
    std::sort(indices.begin(), indices.end());
    plan.indices = std::move(indices);
    plan.strategy_tag = std::move(tag);
    plan.seed = seed;
    validate_plan(plan);
    return plan;
}

// Indices ordered by similarity descending, ties broken by ascending index.
inline std::vector<std::int64_t> rank_by_similarity(const SimilarityTable& table) {
    std::vector<std::int64_t> order(table.values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        const float va = table.values[static_cast<std::size_t>(a)];
        const float vb = table.values[static_cast<std::size_t>(b)];
        if (va != vb) return va > vb;
        return a < b;
    });
    return order;
}

}  // namespace detail

inline PoisonPlan select_random(const DatasetRef& dataset, const TriggerSpec& trigger,
                                std::int32_t target_label, double r, std::int64_t seed) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("select_random: r outside (0,1)");
    const auto p = expected_poison_count(r, dataset.size);
    auto rng = derive_rng(seed, "select/random");
    auto indices = rng.sample_without_replacement(dataset.size, p);
    return detail::make_plan(dataset, trigger, target_label, r, std::move(indices), "random", seed);
}

// Algorithm 1: keep the m*P most similar records (the coarse pool), then
// sample P of them uniformly for diversity.
inline PoisonPlan select_pfs(const SimilarityTable& table, const TriggerSpec& trigger,
                             std::int32_t target_label, double r, int m, std::int64_t seed) {
    const std::int64_t n = table.dataset.size;
    const auto p = expected_poison_count(r, n);
    const std::int64_t pool_size = static_cast<std::int64_t>(m) * p;
    if (pool_size > n) throw std::invalid_argument("select_pfs: m*P exceeds N (pool overflow)");
    const auto order = detail::rank_by_similarity(table);
    std::vector<std::int64_t> pool(order.begin(), order.begin() + pool_size);
    auto rng = derive_rng(seed, "select/pfs");
    const auto picks = rng.sample_without_replacement(pool_size, p);
    std::vector<std::int64_t> indices;
    indices.reserve(static_cast<std::size_t>(p));
    for (auto k : picks) indices.push_back(pool[static_cast<std::size_t>(k)]);
    return detail::make_plan(table.dataset, trigger, target_label, r, std::move(indices),
                             "pfs_m" + std::to_string(m), seed);
}

// Deterministic top-P / bottom-P order statistics of the similarity table.
inline PoisonPlan select_extremes(const SimilarityTable& table, const TriggerSpec& trigger,
                                  std::int32_t target_label, double r, bool top,
                                  std::int64_t seed = 0) {
    const std::int64_t n = table.dataset.size;
    const auto p = expected_poison_count(r, n);
    auto order = detail::rank_by_similarity(table);
    std::vector<std::int64_t> indices;
    indices.reserve(static_cast<std::size_t>(p));
    if (top) {
        indices.assign(order.begin(), order.begin() + p);
    } else {
        // bottom-P with the same tie discipline (ascending index among equals)
        std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
            const float va = table.values[static_cast<std::size_t>(a)];
            const float vb = table.values[static_cast<std::size_t>(b)];
            if (va != vb) return va < vb;
            return a < b;
        });
        indices.assign(order.begin(), order.begin() + p);
    }
    return detail::make_plan(table.dataset, trigger, target_label, r, std::move(indices),
                             top ? "top_r" : "bottom_r", seed);
}

struct FusIterationLog {
    int iteration = 0;
    double proxy_final_loss = 0.0;
    std::vector<std::int64_t> kept;
    std::vector<std::int64_t> refilled;
    std::vector<int> scores;  // forgetting events per current plan member
};

// Filtering-and-updating search. Each round injects the current plan into a
// proxy victim, counts forgetting events of the poisoned records on the
// target label across epochs, keeps the high scorers, and refills uniformly
// at random (re-drawing previously discarded indices is allowed; the refill
// universe is everything outside the current plan, restricted to `pool` when
// given).
inline PoisonPlan select_fus(const Dataset& data, const TriggerSpec& trigger,
                             std::int32_t target_label, double r,
                             const VictimConfig& proxy_victim, int iterations,
                             double keep_fraction, std::int64_t seed,
                             const std::vector<std::int64_t>* pool = nullptr,
                             std::vector<FusIterationLog>* logs = nullptr) {
    if (!(keep_fraction > 0.0 && keep_fraction <= 1.0))
        throw std::invalid_argument("select_fus: keep_fraction outside (0,1]");
    if (iterations < 1) throw std::invalid_argument("select_fus: iterations must be >= 1");
    const std::int64_t n = data.size();
    const auto p = expected_poison_count(r, n);

    std::vector<std::int64_t> universe;
    if (pool) {
        universe = *pool;
        if (static_cast<std::int64_t>(universe.size()) < p)
            throw std::invalid_argument("select_fus: candidate pool smaller than P");
    } else {
        universe.resize(static_cast<std::size_t>(n));
        std::iota(universe.begin(), universe.end(), 0);
    }

    auto rng = derive_rng(seed, pool ? "select/fus_pfs" : "select/fus");
    auto draw_from = [&](const std::vector<std::int64_t>& candidates, std::int64_t count) {
        auto picks = rng.sample_without_replacement(
            static_cast<std::int64_t>(candidates.size()), count);
        std::vector<std::int64_t> out;
        out.reserve(static_cast<std::size_t>(count));
        for (auto k : picks) out.push_back(candidates[static_cast<std::size_t>(k)]);
        return out;
    };

    std::vector<std::int64_t> current = draw_from(universe, p);
    const auto keep_count =
        std::min<std::int64_t>(p, static_cast<std::int64_t>(std::floor(keep_fraction *
                                                                       static_cast<double>(p) + 0.5)));

    for (int it = 0; it < iterations; ++it) {
        if (keep_count == p) {
            // keep everything: scoring cannot change the plan
            if (logs) logs->push_back({it, 0.0, current, {}, {}});
            continue;
        }
        PoisonPlan probe = detail::make_plan(data.ref(), trigger, target_label, r, current,
                                             "fus_probe", seed);
        VictimConfig proxy = proxy_victim;
        proxy.seed = static_cast<std::int64_t>(derive_rng(seed, "fus/proxy-seed/" +
                                                                    std::to_string(it))
                                                   .next_u64() >>
                                               1);
        const ForgettingCounts counts = proxy_forgetting_counts(data, probe, proxy);

        // order current members by score desc, ties ascending index
        std::vector<std::size_t> order(current.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (counts.events[a] != counts.events[b]) return counts.events[a] > counts.events[b];
            return current[a] < current[b];
        });

        std::vector<std::int64_t> kept;
        kept.reserve(static_cast<std::size_t>(keep_count));
        for (std::int64_t k = 0; k < keep_count; ++k)
            kept.push_back(current[order[static_cast<std::size_t>(k)]]);

        std::vector<std::int64_t> outside;
        outside.reserve(universe.size());
        std::vector<char> in_current(static_cast<std::size_t>(n), 0);
        for (auto i : current) in_current[static_cast<std::size_t>(i)] = 1;
        for (auto i : universe)
            if (!in_current[static_cast<std::size_t>(i)]) outside.push_back(i);
        auto refill = draw_from(outside, p - keep_count);

        if (logs) {
            FusIterationLog log;
            log.iteration = it;
            log.proxy_final_loss = counts.final_loss;
            log.kept = kept;
            log.refilled = refill;
            log.scores = counts.events;
            logs->push_back(std::move(log));
        }

        current = std::move(kept);
        current.insert(current.end(), refill.begin(), refill.end());
    }

    return detail::make_plan(data.ref(), trigger, target_label, r, std::move(current),
                             pool ? "fus_pfs" : "fus", seed);
}

// FUS restricted to the PFS coarse pool: both the initial draw and every
// refill stay inside the m*P most similar records.
inline PoisonPlan select_fus_pfs(const SimilarityTable& table, const Dataset& data,
                                 const TriggerSpec& trigger, std::int32_t target_label, double r,
                                 int m, const VictimConfig& proxy_victim, int iterations,
                                 double keep_fraction, std::int64_t seed,
                                 std::vector<FusIterationLog>* logs = nullptr) {
    const std::int64_t n = table.dataset.size;
    const auto p = expected_poison_count(r, n);
    const std::int64_t pool_size = static_cast<std::int64_t>(m) * p;
    if (pool_size > n) throw std::invalid_argument("select_fus_pfs: m*P exceeds N");
    const auto order = detail::rank_by_similarity(table);
    std::vector<std::int64_t> pool(order.begin(), order.begin() + pool_size);
    PoisonPlan plan = select_fus(data, trigger, target_label, r, proxy_victim, iterations,
                                 keep_fraction, seed, &pool, logs);
    plan.strategy_tag = "fus_pfs_m" + std::to_string(m);
    validate_plan(plan);
    return plan;
}

}  // namespace pbench

#endif  // PBENCH_SELECTION_STRATEGIES_HPP
