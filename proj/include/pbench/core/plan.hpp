#ifndef PBENCH_CORE_PLAN_HPP
#define PBENCH_CORE_PLAN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbench/core/artifact_store.hpp"
#include "pbench/core/dataset.hpp"
#include "pbench/core/text.hpp"
#include "pbench/triggers/trigger.hpp"

namespace pbench {

// P = round(r*N), half-up. Deterministic and matches P=500 at r=1%, N=50000.
inline std::int64_t expected_poison_count(double rate, std::int64_t n) {
    return static_cast<std::int64_t>(std::floor(rate * static_cast<double>(n) + 0.5));
}

struct PoisonPlan {
    DatasetRef dataset;
    std::int32_t target_label = 0;  // k
    double poisoning_rate = 0.01;   // r
    std::vector<std::int64_t> indices;
    TriggerSpec trigger;
    std::string strategy_tag;
    std::int64_t seed = 0;
};

inline void validate_plan(const PoisonPlan& plan) {
    if (plan.dataset.size <= 0) throw std::invalid_argument("poison plan: dataset: unresolved size");
    if (plan.target_label < 0 || plan.target_label >= plan.dataset.num_classes)
        throw std::invalid_argument("poison plan: target_label: outside [0, num_classes)");
    if (!(plan.poisoning_rate > 0.0 && plan.poisoning_rate < 1.0))
        throw std::invalid_argument("poison plan: poisoning_rate: outside (0,1)");
    const auto expect = expected_poison_count(plan.poisoning_rate, plan.dataset.size);
    if (static_cast<std::int64_t>(plan.indices.size()) != expect)
        throw std::invalid_argument("poison plan: indices: length " +
                                    std::to_string(plan.indices.size()) + " != round(r*N) = " +
                                    std::to_string(expect));
    for (auto i : plan.indices)
        if (i < 0 || i >= plan.dataset.size)
            throw std::invalid_argument("poison plan: indices: value out of [0, N)");
    auto sorted = plan.indices;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("poison plan: indices: duplicates present");
    if (plan.strategy_tag.find_first_of(" \n") != std::string::npos)
        throw std::invalid_argument("poison plan: strategy_tag: whitespace forbidden");
}

// Manifest layout (UTF-8, LF): header fields then one index per line, indices
// in ascending order. The plan's content hash is SHA-256 of these bytes.
inline std::string plan_manifest(const PoisonPlan& plan) {
    validate_plan(plan);
    auto indices = plan.indices;
    std::sort(indices.begin(), indices.end());
    std::ostringstream os;
    os << "poisonplan v1\n";
    os << "dataset " << plan.dataset.canonical() << '\n';
    os << "trigger " << trigger_canonical_line(plan.trigger) << '\n';
    os << "k " << plan.target_label << '\n';
    os << "r " << format_real(plan.poisoning_rate) << '\n';
    os << "seed " << plan.seed << '\n';
    os << "strategy " << plan.strategy_tag << '\n';
    os << "indices " << indices.size() << '\n';
    for (auto i : indices) os << i << '\n';
    return os.str();
}

inline std::string plan_hash(const PoisonPlan& plan) { return sha256_hex(plan_manifest(plan)); }

inline bool plans_equal(const PoisonPlan& a, const PoisonPlan& b) {
    return plan_manifest(a) == plan_manifest(b);
}

inline std::string save_plan(const PoisonPlan& plan, ArtifactStore& store) {
    const std::string manifest = plan_manifest(plan);
    persist_trigger_tensors(plan.trigger, store);
    return store.put(manifest);
}

inline PoisonPlan load_plan_from_manifest(const std::string& manifest, const ArtifactStore& store) {
    std::istringstream is(manifest);
    std::string line;
    auto next_line = [&]() {
        if (!std::getline(is, line)) throw std::invalid_argument("truncated plan manifest");
        return line;
    };
    if (next_line() != "poisonplan v1") throw std::invalid_argument("not a poisonplan manifest");

    PoisonPlan plan;
    auto field = [&](const std::string& key) {
        next_line();
        if (line.rfind(key + " ", 0) != 0)
            throw std::invalid_argument("plan manifest: expected field " + key);
        return line.substr(key.size() + 1);
    };
    plan.dataset = detail::dataset_ref_from_canonical(split_ws(field("dataset")));
    plan.trigger = trigger_from_line(field("trigger"), store);
    plan.target_label = static_cast<std::int32_t>(parse_int(field("k")));
    plan.poisoning_rate = parse_real(field("r"));
    plan.seed = parse_int(field("seed"));
    plan.strategy_tag = field("strategy");
    const auto count = parse_int(field("indices"));
    plan.indices.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) plan.indices.push_back(parse_int(next_line()));
    validate_plan(plan);
    return plan;
}

inline PoisonPlan load_plan(const std::string& hash, const ArtifactStore& store) {
    const Bytes raw = store.get(hash);
    return load_plan_from_manifest(std::string(raw.begin(), raw.end()), store);
}

}  // namespace pbench

#endif  // PBENCH_CORE_PLAN_HPP
