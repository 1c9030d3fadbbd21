#ifndef PBENCH_NN_LOSS_HPP
#define PBENCH_NN_LOSS_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pbench/nn/tensor.hpp"

namespace pbench::nn {

struct LossResult {
    double loss = 0.0;       // mean over the batch
    Tensor grad;             // d(loss)/d(logits)
    int correct = 0;
};

inline LossResult softmax_cross_entropy(const Tensor& logits,
                                        const std::vector<std::int32_t>& labels) {
    if (static_cast<std::size_t>(logits.n) != labels.size())
        throw std::invalid_argument("cross entropy: batch/label count mismatch");
    const int classes = static_cast<int>(logits.per_sample());
    LossResult res;
    res.grad = Tensor(logits.n, logits.c, logits.h, logits.w);
    const float inv_n = 1.0f / static_cast<float>(logits.n);
    double total = 0.0;
    for (int i = 0; i < logits.n; ++i) {
        const float* z = logits.sample(i);
        float zmax = z[0];
        for (int c = 1; c < classes; ++c) zmax = std::max(zmax, z[c]);
        double denom = 0.0;
        for (int c = 0; c < classes; ++c) denom += std::exp(static_cast<double>(z[c] - zmax));
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= classes) throw std::invalid_argument("cross entropy: label out of range");
        total += -(static_cast<double>(z[y] - zmax) - std::log(denom));
        int argmax = 0;
        for (int c = 1; c < classes; ++c)
            if (z[c] > z[argmax]) argmax = c;
        if (argmax == y) ++res.correct;
        float* g = res.grad.sample(i);
        for (int c = 0; c < classes; ++c) {
            const auto p = static_cast<float>(std::exp(static_cast<double>(z[c] - zmax)) / denom);
            g[c] = (p - (c == y ? 1.0f : 0.0f)) * inv_n;
        }
    }
    res.loss = total / static_cast<double>(logits.n);
    return res;
}

inline std::vector<std::int32_t> argmax_labels(const Tensor& logits) {
    const int classes = static_cast<int>(logits.per_sample());
    std::vector<std::int32_t> out(static_cast<std::size_t>(logits.n));
    for (int i = 0; i < logits.n; ++i) {
        const float* z = logits.sample(i);
        int best = 0;
        for (int c = 1; c < classes; ++c)
            if (z[c] > z[best]) best = c;
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

}  // namespace pbench::nn

#endif  // PBENCH_NN_LOSS_HPP
