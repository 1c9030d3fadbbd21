#ifndef PBENCH_NN_TENSOR_HPP
#define PBENCH_NN_TENSOR_HPP

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace pbench::nn {

// NCHW minibatch. Fully-connected activations use h = w = 1.
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<float> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_),
          v(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0f) {}

    std::size_t per_sample() const { return static_cast<std::size_t>(c) * h * w; }
    std::size_t size() const { return v.size(); }

    float* sample(int i) { return v.data() + static_cast<std::size_t>(i) * per_sample(); }
    const float* sample(int i) const { return v.data() + static_cast<std::size_t>(i) * per_sample(); }

    bool same_shape(const Tensor& o) const {
        return n == o.n && c == o.c && h == o.h && w == o.w;
    }
};

inline void check_shape(const Tensor& t, int c, int h, int w, const char* who) {
    if (t.c != c || t.h != h || t.w != w)
        throw std::invalid_argument(std::string(who) + ": input shape mismatch");
}

}  // namespace pbench::nn

#endif  // PBENCH_NN_TENSOR_HPP
