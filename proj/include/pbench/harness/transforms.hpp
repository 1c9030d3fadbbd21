#ifndef PBENCH_HARNESS_TRANSFORMS_HPP
#define PBENCH_HARNESS_TRANSFORMS_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbench/core/image.hpp"
#include "pbench/core/rng.hpp"

namespace pbench {

enum class TransformKind { none, random_crop, random_horizontal_flip, random_rotation, color_jitter };

inline std::string to_string(TransformKind t) {
    switch (t) {
        case TransformKind::none: return "none";
        case TransformKind::random_crop: return "random_crop";
        case TransformKind::random_horizontal_flip: return "random_horizontal_flip";
        case TransformKind::random_rotation: return "random_rotation";
        case TransformKind::color_jitter: return "color_jitter";
    }
    throw std::logic_error("unknown transform");
}

inline TransformKind transform_from(const std::string& s) {
    if (s == "none") return TransformKind::none;
    if (s == "random_crop") return TransformKind::random_crop;
    if (s == "random_horizontal_flip") return TransformKind::random_horizontal_flip;
    if (s == "random_rotation") return TransformKind::random_rotation;
    if (s == "color_jitter") return TransformKind::color_jitter;
    throw std::invalid_argument("unknown transform: " + s);
}

inline void validate_transforms(const std::vector<TransformKind>& list) {
    std::set<TransformKind> seen;
    for (auto t : list)
        if (!seen.insert(t).second)
            throw std::invalid_argument("transform list contains duplicates");
}

namespace transforms {

// Pad-4 reflectionless crop back to the original extent (CIFAR convention).
inline Image random_crop(const Image& img, RngStream& rng, int pad = 4) {
    const int oy = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(2 * pad + 1)));
    const int ox = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(2 * pad + 1)));
    Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y) {
            const int sy = y + oy - pad;
            if (sy < 0 || sy >= img.height) continue;
            for (int x = 0; x < img.width; ++x) {
                const int sx = x + ox - pad;
                if (sx < 0 || sx >= img.width) continue;
                out.at(c, y, x) = img.at(c, sy, sx);
            }
        }
    return out;
}

inline Image horizontal_flip(const Image& img, RngStream& rng) {
    if (!rng.bernoulli(0.5)) return img;
    Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    return out;
}

// Bilinear rotation about the image center, +/- max_deg, zero fill.
inline Image random_rotation(const Image& img, RngStream& rng, double max_deg = 15.0) {
    const double deg = rng.uniform(-max_deg, max_deg);
    const double rad = deg * std::numbers::pi / 180.0;
    const double cs = std::cos(rad), sn = std::sin(rad);
    const double cy = (img.height - 1) / 2.0, cx = (img.width - 1) / 2.0;
    Image out(img.channels, img.height, img.width);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            // inverse map: rotate destination back into the source frame
            const double dy = y - cy, dx = x - cx;
            const double sy = cs * dy + sn * dx + cy;
            const double sx = -sn * dy + cs * dx + cx;
            const int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
            if (y0 < -1 || y0 >= img.height || x0 < -1 || x0 >= img.width) continue;
            const double ty = sy - y0, tx = sx - x0;
            for (int c = 0; c < img.channels; ++c) {
                auto px = [&](int yy, int xx) -> double {
                    if (yy < 0 || yy >= img.height || xx < 0 || xx >= img.width) return 0.0;
                    return img.at(c, yy, xx);
                };
                const double v = px(y0, x0) * (1 - ty) * (1 - tx) + px(y0, x0 + 1) * (1 - ty) * tx +
                                 px(y0 + 1, x0) * ty * (1 - tx) + px(y0 + 1, x0 + 1) * ty * tx;
                out.at(c, y, x) = static_cast<float>(v);
            }
        }
    }
    return out;
}

// Brightness/contrast/saturation factors of (0.25, 0.25, 0.25), zero hue.
inline Image color_jitter(const Image& img, RngStream& rng, float amount = 0.25f) {
    const float fb = rng.uniform_f(std::max(0.0f, 1.0f - amount), 1.0f + amount);
    const float fc = rng.uniform_f(std::max(0.0f, 1.0f - amount), 1.0f + amount);
    const float fs = rng.uniform_f(std::max(0.0f, 1.0f - amount), 1.0f + amount);
    Image out = img;
    for (auto& v : out.data) v *= fb;
    if (img.channels == 3) {
        const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
        // contrast blends toward the mean gray level
        double mean_gray = 0.0;
        for (std::size_t j = 0; j < plane; ++j)
            mean_gray += 0.299 * out.data[j] + 0.587 * out.data[plane + j] +
                         0.114 * out.data[2 * plane + j];
        mean_gray /= static_cast<double>(plane);
        for (auto& v : out.data) v = fc * v + (1.0f - fc) * static_cast<float>(mean_gray);
        // saturation blends toward per-pixel gray
        for (std::size_t j = 0; j < plane; ++j) {
            const float gray = static_cast<float>(0.299 * out.data[j] + 0.587 * out.data[plane + j] +
                                                  0.114 * out.data[2 * plane + j]);
            out.data[j] = fs * out.data[j] + (1 - fs) * gray;
            out.data[plane + j] = fs * out.data[plane + j] + (1 - fs) * gray;
            out.data[2 * plane + j] = fs * out.data[2 * plane + j] + (1 - fs) * gray;
        }
    }
    out.clip01();
    return out;
}

}  // namespace transforms

inline Image apply_transforms(const Image& img, const std::vector<TransformKind>& list,
                              RngStream& rng) {
    Image cur = img;
    for (auto t : list) {
        switch (t) {
            case TransformKind::none: break;
            case TransformKind::random_crop: cur = transforms::random_crop(cur, rng); break;
            case TransformKind::random_horizontal_flip:
                cur = transforms::horizontal_flip(cur, rng);
                break;
            case TransformKind::random_rotation: cur = transforms::random_rotation(cur, rng); break;
            case TransformKind::color_jitter: cur = transforms::color_jitter(cur, rng); break;
        }
    }
    return cur;
}

}  // namespace pbench

#endif  // PBENCH_HARNESS_TRANSFORMS_HPP
