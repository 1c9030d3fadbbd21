#ifndef PBENCH_TRIGGERS_UAP_HPP
#define PBENCH_TRIGGERS_UAP_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pbench/core/dataset.hpp"
#include "pbench/core/preprocess.hpp"
#include "pbench/nn/loss.hpp"
#include "pbench/nn/models.hpp"
#include "pbench/triggers/trigger.hpp"

namespace pbench {

struct UapOptions {
    float eps = 8.0f / 255.0f;
    int steps = 200;
    float step_size = 0.0f;  // 0 -> eps/10
    int batch_size = 64;
    std::int64_t sample_budget = 2048;  // clean images drawn per run
    double fooling_floor = 0.5;         // below this the result carries a warning
};

struct UapResult {
    TriggerSpec spec;         // kind = optimized_uap
    double fooling_rate = 0;  // fraction of held-out clean images pushed to k
    bool converged = true;    // false => warning status, perturbation still usable
};

namespace detail {

// Mean targeted-CE input gradient over one batch. The model input is
// normalized, so the pixel-space gradient rescales by 1/std per channel.
inline void accumulate_input_gradient(nn::Network& net, const std::vector<Image>& images,
                                      std::int32_t target, const Normalization& norm,
                                      std::vector<float>& grad_accum) {
    const nn::Tensor x = to_batch(images, norm);
    nn::Tensor logits = net.forward(x, /*train=*/false);
    std::vector<std::int32_t> labels(images.size(), target);
    const nn::LossResult res = nn::softmax_cross_entropy(logits, labels);
    net.zero_grad();
    const nn::Tensor gx = net.backward(res.grad);
    const std::size_t per = gx.per_sample();
    const std::size_t plane = static_cast<std::size_t>(gx.h) * gx.w;
    for (int i = 0; i < gx.n; ++i) {
        const float* g = gx.sample(i);
        for (std::size_t j = 0; j < per; ++j) {
            const int ch = static_cast<int>(j / plane);
            grad_accum[j] += g[j] / norm.stddev[static_cast<std::size_t>(ch % 3)];
        }
    }
}

}  // namespace detail

// Targeted universal perturbation by projected gradient descent on the
// clean-model targeted loss, averaged over mini-batches. steps=0 returns the
// all-zeros perturbation (the baseline fooling rate is the model's base rate
// of predicting k).
inline UapResult generate_uap(nn::Network& clean_model, const Dataset& data, std::int32_t target,
                              const UapOptions& opt, RngStream& rng) {
    if (opt.eps <= 0.0f) throw std::invalid_argument("generate_uap: eps must be > 0");
    const Normalization norm = standard_normalization(data.ref().name);
    const std::size_t per =
        static_cast<std::size_t>(data.channels()) * data.height() * data.width();
    std::vector<float> delta(per, 0.0f);
    const float step = opt.step_size > 0 ? opt.step_size : opt.eps / 10.0f;

    const std::int64_t budget = std::min<std::int64_t>(opt.sample_budget, data.size());
    const auto sample_idx = rng.sample_without_replacement(data.size(), budget);
    const std::int64_t holdout = std::max<std::int64_t>(1, budget / 4);

    for (int s = 0; s < opt.steps; ++s) {
        // cycle the optimization pool (indices past the holdout prefix)
        std::vector<Image> batch;
        batch.reserve(static_cast<std::size_t>(opt.batch_size));
        for (int b = 0; b < opt.batch_size; ++b) {
            const auto pos = holdout + (static_cast<std::int64_t>(s) * opt.batch_size + b) %
                                           std::max<std::int64_t>(1, budget - holdout);
            Image img = data.image(sample_idx[static_cast<std::size_t>(pos)]);
            for (std::size_t j = 0; j < per; ++j)
                img.data[j] = std::clamp(img.data[j] + delta[j], 0.0f, 1.0f);
            batch.push_back(std::move(img));
        }
        std::vector<float> grad(per, 0.0f);
        detail::accumulate_input_gradient(clean_model, batch, target, norm, grad);
        for (std::size_t j = 0; j < per; ++j) {
            delta[j] -= step * (grad[j] > 0 ? 1.0f : (grad[j] < 0 ? -1.0f : 0.0f));
            delta[j] = std::clamp(delta[j], -opt.eps, opt.eps);  // project after every step
        }
    }

    OptimizedUap uap;
    uap.linf_bound = opt.eps;
    uap.perturbation = Image(data.channels(), data.height(), data.width());
    uap.perturbation.data = delta;
    UapResult result;
    result.spec = TriggerSpec{uap};

    // fooling rate on the held-out clean prefix
    std::int64_t hits = 0;
    std::vector<Image> eval_batch;
    for (std::int64_t i = 0; i < holdout; ++i) {
        Image img = data.image(sample_idx[static_cast<std::size_t>(i)]);
        for (std::size_t j = 0; j < per; ++j)
            img.data[j] = std::clamp(img.data[j] + delta[j], 0.0f, 1.0f);
        eval_batch.push_back(std::move(img));
    }
    const nn::Tensor xe = to_batch(eval_batch, norm);
    nn::Tensor logits = clean_model.forward(xe, /*train=*/false);
    for (auto p : nn::argmax_labels(logits))
        if (p == target) ++hits;
    result.fooling_rate = static_cast<double>(hits) / static_cast<double>(holdout);
    result.converged = result.fooling_rate >= opt.fooling_floor;
    return result;
}

}  // namespace pbench

#endif  // PBENCH_TRIGGERS_UAP_HPP
