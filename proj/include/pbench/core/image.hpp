#ifndef PBENCH_CORE_IMAGE_HPP
#define PBENCH_CORE_IMAGE_HPP

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pbench {

// CHW float image, values in [0,1]. All pixel math happens in floating point;
// 8-bit quantization is an export concern only.
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int c, int h, int w, float fill = 0.0f)
        : channels(c), height(h), width(w),
          data(static_cast<std::size_t>(c) * h * w, fill) {}

    std::size_t size() const { return data.size(); }

    float& at(int c, int y, int x) {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    float at(int c, int y, int x) const {
        return data[(static_cast<std::size_t>(c) * height + y) * width + x];
    }

    bool same_shape(const Image& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }

    void clip01() {
        for (auto& v : data) v = std::clamp(v, 0.0f, 1.0f);
    }
};

inline float max_abs_diff(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    float m = 0.0f;
    for (std::size_t i = 0; i < a.data.size(); ++i)
        m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

}  // namespace pbench

#endif  // PBENCH_CORE_IMAGE_HPP
