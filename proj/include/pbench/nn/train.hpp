#ifndef PBENCH_NN_TRAIN_HPP
#define PBENCH_NN_TRAIN_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "pbench/core/rng.hpp"
#include "pbench/nn/loss.hpp"
#include "pbench/nn/models.hpp"
#include "pbench/nn/optim.hpp"

namespace pbench::nn {

struct EpochStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

// Batch provider contract: fill x (already normalized model input) and labels
// for the given record indices. aug_rng carries the per-epoch augmentation
// stream.
using BatchFill = std::function<void(const std::vector<std::int64_t>& indices, Tensor& x,
                                     std::vector<std::int32_t>& labels, RngStream& aug_rng)>;

inline EpochStats run_training_epoch(Network& net, Optimizer& opt, std::int64_t n, int batch_size,
                                     const BatchFill& fill, RngStream& order_rng,
                                     RngStream& aug_rng) {
    std::vector<std::int64_t> order(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    order_rng.shuffle(order);

    EpochStats stats;
    std::int64_t seen = 0;
    int correct = 0;
    double loss_sum = 0.0;
    for (std::int64_t begin = 0; begin < n; begin += batch_size) {
        const auto end = std::min<std::int64_t>(begin + batch_size, n);
        const std::vector<std::int64_t> batch(order.begin() + begin, order.begin() + end);
        Tensor x;
        std::vector<std::int32_t> labels;
        fill(batch, x, labels, aug_rng);
        net.zero_grad();
        const Tensor logits = net.forward(x, /*train=*/true);
        const LossResult res = softmax_cross_entropy(logits, labels);
        if (!std::isfinite(res.loss)) throw std::runtime_error("training diverged: non-finite loss");
        net.backward(res.grad);
        opt.step(net.params());
        loss_sum += res.loss * static_cast<double>(batch.size());
        correct += res.correct;
        seen += static_cast<std::int64_t>(batch.size());
    }
    stats.loss = loss_sum / static_cast<double>(seen);
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    return stats;
}

// Inference over an index range in fixed order; provider fills normalized
// inputs only.
using EvalFill = std::function<void(const std::vector<std::int64_t>& indices, Tensor& x)>;

inline std::vector<std::int32_t> predict_all(Network& net, std::int64_t n, int batch_size,
                                             const EvalFill& fill) {
    std::vector<std::int32_t> preds;
    preds.reserve(static_cast<std::size_t>(n));
    for (std::int64_t begin = 0; begin < n; begin += batch_size) {
        const auto end = std::min<std::int64_t>(begin + batch_size, n);
        std::vector<std::int64_t> batch;
        for (std::int64_t i = begin; i < end; ++i) batch.push_back(i);
        Tensor x;
        fill(batch, x);
        const Tensor logits = net.forward(x, /*train=*/false);
        for (auto p : argmax_labels(logits)) preds.push_back(p);
    }
    return preds;
}

}  // namespace pbench::nn

#endif  // PBENCH_NN_TRAIN_HPP
