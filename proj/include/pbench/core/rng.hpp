#ifndef PBENCH_CORE_RNG_HPP
#define PBENCH_CORE_RNG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pbench/core/hash.hpp"

namespace pbench {

// Deterministic random stream. The engine (mt19937_64) is fully specified by
// the standard; every draw algorithm on top of it lives here, because the
// std::*_distribution adaptors are implementation-defined and would break
// byte-identical manifests across platforms.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Unbiased draw in [0, bound) via rejection on the top slice.
    std::uint64_t next_below(std::uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("next_below: bound must be positive");
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t v = engine_();
        while (v >= limit) v = engine_();
        return v % bound;
    }

    std::int64_t next_int(std::int64_t lo, std::int64_t hi_inclusive) {
        if (hi_inclusive < lo) throw std::invalid_argument("next_int: empty range");
        const auto span = static_cast<std::uint64_t>(hi_inclusive - lo) + 1;
        return lo + static_cast<std::int64_t>(next_below(span));
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    float uniform_f(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

    bool bernoulli(double p) { return next_double() < p; }

    // Box-Muller, no spare caching so the stream state is a pure function of
    // the draw count.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * mag * std::cos(2.0 * std::numbers::pi * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from [0, n), order of selection (partial Fisher-Yates).
    std::vector<std::int64_t> sample_without_replacement(std::int64_t n, std::int64_t k) {
        if (k < 0 || k > n) throw std::invalid_argument("sample_without_replacement: k out of range");
        std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        for (std::int64_t i = 0; i < k; ++i) {
            const auto j = i + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(n - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        pool.resize(static_cast<std::size_t>(k));
        return pool;
    }

  private:
    std::mt19937_64 engine_;
};

// Same (seed, scope) -> identical stream; different scopes -> independent
// streams. The scope string is folded through SHA-256 so textual relatives
// ("train" vs "train2") land in unrelated states.
inline RngStream derive_rng(std::int64_t seed, std::string_view scope) {
    std::string material;
    material.reserve(9 + scope.size());
    for (int i = 7; i >= 0; --i)
        material.push_back(static_cast<char>((static_cast<std::uint64_t>(seed) >> (8 * i)) & 0xFF));
    material.push_back('\x1f');
    material.append(scope);
    const Digest d = sha256(material);
    std::uint64_t s = 0;
    for (int i = 0; i < 8; ++i) s = (s << 8) | d[static_cast<std::size_t>(i)];
    return RngStream(s);
}

}  // namespace pbench

#endif  // PBENCH_CORE_RNG_HPP
