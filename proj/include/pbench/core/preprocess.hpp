#ifndef PBENCH_CORE_PREPROCESS_HPP
#define PBENCH_CORE_PREPROCESS_HPP

#include <stdexcept>
#include <vector>

#include "pbench/core/dataset.hpp"
#include "pbench/core/image.hpp"
#include "pbench/nn/tensor.hpp"

namespace pbench {

// Channel-wise (x - mean) / std into a model input slot.
inline void normalize_into(const Image& img, const Normalization& norm, float* dst) {
    const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
    for (int c = 0; c < img.channels; ++c) {
        const float mean = norm.mean[static_cast<std::size_t>(c % 3)];
        const float inv = 1.0f / norm.stddev[static_cast<std::size_t>(c % 3)];
        const float* src = img.data.data() + static_cast<std::size_t>(c) * plane;
        float* out = dst + static_cast<std::size_t>(c) * plane;
        for (std::size_t j = 0; j < plane; ++j) out[j] = (src[j] - mean) * inv;
    }
}

inline nn::Tensor to_batch(const std::vector<Image>& images, const Normalization& norm) {
    if (images.empty()) throw std::invalid_argument("to_batch: empty image list");
    const Image& first = images.front();
    nn::Tensor x(static_cast<int>(images.size()), first.channels, first.height, first.width);
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (!images[i].same_shape(first)) throw std::invalid_argument("to_batch: ragged shapes");
        normalize_into(images[i], norm, x.sample(static_cast<int>(i)));
    }
    return x;
}

}  // namespace pbench

#endif  // PBENCH_CORE_PREPROCESS_HPP
