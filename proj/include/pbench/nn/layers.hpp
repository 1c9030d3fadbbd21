#ifndef PBENCH_NN_LAYERS_HPP
#define PBENCH_NN_LAYERS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pbench/core/rng.hpp"
#include "pbench/nn/tensor.hpp"

namespace pbench::nn {

using MatMap = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

struct Param {
    std::vector<float> value;
    std::vector<float> grad;

    explicit Param(std::size_t n = 0) : value(n, 0.0f), grad(n, 0.0f) {}
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0f); }
};

class Layer {
  public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect_params(std::vector<Param*>& out) { (void)out; }
    // Buffers that persist with the weights but take no gradient (BN stats).
    virtual void collect_buffers(std::vector<std::vector<float>*>& out) { (void)out; }
};

namespace detail {

inline void im2col(const float* src, int c, int h, int w, int k, int stride, int pad, int oh,
                   int ow, float* col) {
    // col is [c*k*k, oh*ow]
    for (int ch = 0; ch < c; ++ch) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* dst = col + (static_cast<std::size_t>(ch) * k * k + ky * k + kx) *
                                       (static_cast<std::size_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) {
                        for (int ox = 0; ox < ow; ++ox) *dst++ = 0.0f;
                        continue;
                    }
                    const float* row = src + (static_cast<std::size_t>(ch) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        *dst++ = (ix < 0 || ix >= w) ? 0.0f : row[ix];
                    }
                }
            }
        }
    }
}

inline void col2im_add(const float* col, int c, int h, int w, int k, int stride, int pad, int oh,
                       int ow, float* dst) {
    for (int ch = 0; ch < c; ++ch) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* src = col + (static_cast<std::size_t>(ch) * k * k + ky * k + kx) *
                                             (static_cast<std::size_t>(oh) * ow);
                for (int oy = 0; oy < oh; ++oy) {
                    const int iy = oy * stride + ky - pad;
                    if (iy < 0 || iy >= h) {
                        src += ow;
                        continue;
                    }
                    float* row = dst + (static_cast<std::size_t>(ch) * h + iy) * w;
                    for (int ox = 0; ox < ow; ++ox) {
                        const int ix = ox * stride + kx - pad;
                        if (ix >= 0 && ix < w) row[ix] += src[ox];
                    }
                    src += ow;
                }
            }
        }
    }
}

}  // namespace detail

class Conv2d final : public Layer {
  public:
    Conv2d(int in_c, int out_c, int kernel, int stride, int pad, RngStream& rng)
        : in_c_(in_c), out_c_(out_c), k_(kernel), stride_(stride), pad_(pad),
          weight_(static_cast<std::size_t>(out_c) * in_c * kernel * kernel) {
        // Kaiming-style fan-in scaling.
        const double scale = std::sqrt(2.0 / (static_cast<double>(in_c) * kernel * kernel));
        for (auto& v : weight_.value) v = static_cast<float>(rng.normal(0.0, scale));
    }

    Tensor forward(const Tensor& x, bool) override {
        if (x.c != in_c_) throw std::invalid_argument("conv2d: channel mismatch");
        x_ = x;
        const int oh = out_dim(x.h), ow = out_dim(x.w);
        Tensor y(x.n, out_c_, oh, ow);
        const int ck2 = in_c_ * k_ * k_;
        col_.resize(static_cast<std::size_t>(ck2) * oh * ow);
        ConstMatMap wmat(weight_.value.data(), out_c_, ck2);
        for (int i = 0; i < x.n; ++i) {
            detail::im2col(x.sample(i), in_c_, x.h, x.w, k_, stride_, pad_, oh, ow, col_.data());
            ConstMatMap cmat(col_.data(), ck2, oh * ow);
            MatMap ymat(y.sample(i), out_c_, oh * ow);
            ymat.noalias() = wmat * cmat;
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        const int oh = out_dim(x_.h), ow = out_dim(x_.w);
        const int ck2 = in_c_ * k_ * k_;
        Tensor gx(x_.n, in_c_, x_.h, x_.w);
        col_.resize(static_cast<std::size_t>(ck2) * oh * ow);
        std::vector<float> gcol(static_cast<std::size_t>(ck2) * oh * ow);
        ConstMatMap wmat(weight_.value.data(), out_c_, ck2);
        MatMap gwmat(weight_.grad.data(), out_c_, ck2);
        for (int i = 0; i < x_.n; ++i) {
            detail::im2col(x_.sample(i), in_c_, x_.h, x_.w, k_, stride_, pad_, oh, ow, col_.data());
            ConstMatMap cmat(col_.data(), ck2, oh * ow);
            ConstMatMap gymat(gy.sample(i), out_c_, oh * ow);
            gwmat.noalias() += gymat * cmat.transpose();
            MatMap gcmat(gcol.data(), ck2, oh * ow);
            gcmat.noalias() = wmat.transpose() * gymat;
            detail::col2im_add(gcol.data(), in_c_, x_.h, x_.w, k_, stride_, pad_, oh, ow,
                               gx.sample(i));
        }
        return gx;
    }

    void collect_params(std::vector<Param*>& out) override { out.push_back(&weight_); }

  private:
    int out_dim(int d) const { return (d + 2 * pad_ - k_) / stride_ + 1; }

    int in_c_, out_c_, k_, stride_, pad_;
    Param weight_;
    Tensor x_;
    std::vector<float> col_;
};

class BatchNorm2d final : public Layer {
  public:
    explicit BatchNorm2d(int c, float eps = 1e-5f, float momentum = 0.1f)
        : c_(c), eps_(eps), momentum_(momentum), gamma_(static_cast<std::size_t>(c)),
          beta_(static_cast<std::size_t>(c)), running_mean_(static_cast<std::size_t>(c), 0.0f),
          running_var_(static_cast<std::size_t>(c), 1.0f) {
        std::fill(gamma_.value.begin(), gamma_.value.end(), 1.0f);
    }

    Tensor forward(const Tensor& x, bool train) override {
        if (x.c != c_) throw std::invalid_argument("batchnorm: channel mismatch");
        x_ = x;
        train_ = train;
        const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
        const std::size_t m = static_cast<std::size_t>(x.n) * plane;
        mean_.assign(static_cast<std::size_t>(c_), 0.0f);
        inv_std_.assign(static_cast<std::size_t>(c_), 0.0f);
        Tensor y(x.n, x.c, x.h, x.w);
        xhat_.assign(x.v.size(), 0.0f);
        for (int ch = 0; ch < c_; ++ch) {
            float mean, var;
            if (train) {
                double sum = 0.0, sq = 0.0;
                for (int i = 0; i < x.n; ++i) {
                    const float* p = x.sample(i) + static_cast<std::size_t>(ch) * plane;
                    for (std::size_t j = 0; j < plane; ++j) {
                        sum += p[j];
                        sq += static_cast<double>(p[j]) * p[j];
                    }
                }
                mean = static_cast<float>(sum / static_cast<double>(m));
                var = static_cast<float>(sq / static_cast<double>(m) - mean * static_cast<double>(mean));
                var = std::max(var, 0.0f);
                running_mean_[static_cast<std::size_t>(ch)] =
                    (1 - momentum_) * running_mean_[static_cast<std::size_t>(ch)] + momentum_ * mean;
                running_var_[static_cast<std::size_t>(ch)] =
                    (1 - momentum_) * running_var_[static_cast<std::size_t>(ch)] + momentum_ * var;
            } else {
                mean = running_mean_[static_cast<std::size_t>(ch)];
                var = running_var_[static_cast<std::size_t>(ch)];
            }
            const float inv = 1.0f / std::sqrt(var + eps_);
            mean_[static_cast<std::size_t>(ch)] = mean;
            inv_std_[static_cast<std::size_t>(ch)] = inv;
            const float g = gamma_.value[static_cast<std::size_t>(ch)];
            const float b = beta_.value[static_cast<std::size_t>(ch)];
            for (int i = 0; i < x.n; ++i) {
                const float* px = x.sample(i) + static_cast<std::size_t>(ch) * plane;
                float* py = y.sample(i) + static_cast<std::size_t>(ch) * plane;
                float* ph = xhat_.data() + (static_cast<std::size_t>(i) * c_ + ch) * plane;
                for (std::size_t j = 0; j < plane; ++j) {
                    const float xn = (px[j] - mean) * inv;
                    ph[j] = xn;
                    py[j] = g * xn + b;
                }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        const std::size_t plane = static_cast<std::size_t>(x_.h) * x_.w;
        const auto m = static_cast<double>(static_cast<std::size_t>(x_.n) * plane);
        Tensor gx(x_.n, x_.c, x_.h, x_.w);
        for (int ch = 0; ch < c_; ++ch) {
            double sum_gy = 0.0, sum_gy_xh = 0.0;
            for (int i = 0; i < x_.n; ++i) {
                const float* pg = gy.sample(i) + static_cast<std::size_t>(ch) * plane;
                const float* ph = xhat_.data() + (static_cast<std::size_t>(i) * c_ + ch) * plane;
                for (std::size_t j = 0; j < plane; ++j) {
                    sum_gy += pg[j];
                    sum_gy_xh += static_cast<double>(pg[j]) * ph[j];
                }
            }
            gamma_.grad[static_cast<std::size_t>(ch)] += static_cast<float>(sum_gy_xh);
            beta_.grad[static_cast<std::size_t>(ch)] += static_cast<float>(sum_gy);
            const float g = gamma_.value[static_cast<std::size_t>(ch)];
            const float inv = inv_std_[static_cast<std::size_t>(ch)];
            if (train_) {
                const auto mg = static_cast<float>(sum_gy / m);
                const auto mgx = static_cast<float>(sum_gy_xh / m);
                for (int i = 0; i < x_.n; ++i) {
                    const float* pg = gy.sample(i) + static_cast<std::size_t>(ch) * plane;
                    const float* ph = xhat_.data() + (static_cast<std::size_t>(i) * c_ + ch) * plane;
                    float* px = gx.sample(i) + static_cast<std::size_t>(ch) * plane;
                    for (std::size_t j = 0; j < plane; ++j)
                        px[j] = g * inv * (pg[j] - mg - ph[j] * mgx);
                }
            } else {
                for (int i = 0; i < x_.n; ++i) {
                    const float* pg = gy.sample(i) + static_cast<std::size_t>(ch) * plane;
                    float* px = gx.sample(i) + static_cast<std::size_t>(ch) * plane;
                    for (std::size_t j = 0; j < plane; ++j) px[j] = g * inv * pg[j];
                }
            }
        }
        return gx;
    }

    void collect_params(std::vector<Param*>& out) override {
        out.push_back(&gamma_);
        out.push_back(&beta_);
    }

    void collect_buffers(std::vector<std::vector<float>*>& out) override {
        out.push_back(&running_mean_);
        out.push_back(&running_var_);
    }

  private:
    int c_;
    float eps_, momentum_;
    Param gamma_, beta_;
    std::vector<float> running_mean_, running_var_;
    std::vector<float> mean_, inv_std_, xhat_;
    Tensor x_;
    bool train_ = true;
};

class ReLU final : public Layer {
  public:
    Tensor forward(const Tensor& x, bool) override {
        mask_.assign(x.v.size(), 0);
        Tensor y = x;
        for (std::size_t i = 0; i < y.v.size(); ++i) {
            if (y.v[i] > 0.0f)
                mask_[i] = 1;
            else
                y.v[i] = 0.0f;
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        Tensor gx = gy;
        for (std::size_t i = 0; i < gx.v.size(); ++i)
            if (!mask_[i]) gx.v[i] = 0.0f;
        return gx;
    }

  private:
    std::vector<std::uint8_t> mask_;
};

class MaxPool2d final : public Layer {
  public:
    explicit MaxPool2d(int k = 2) : k_(k) {}

    Tensor forward(const Tensor& x, bool) override {
        if (x.h < k_ || x.w < k_) throw std::invalid_argument("maxpool: input smaller than window");
        in_shape_ = {x.n, x.c, x.h, x.w};
        const int oh = x.h / k_, ow = x.w / k_;
        Tensor y(x.n, x.c, oh, ow);
        argmax_.resize(y.v.size());
        std::size_t oidx = 0;
        for (int i = 0; i < x.n; ++i) {
            for (int ch = 0; ch < x.c; ++ch) {
                const float* plane = x.sample(i) + static_cast<std::size_t>(ch) * x.h * x.w;
                for (int oy = 0; oy < oh; ++oy) {
                    for (int ox = 0; ox < ow; ++ox, ++oidx) {
                        float best = -std::numeric_limits<float>::infinity();
                        std::size_t best_at = 0;
                        for (int ky = 0; ky < k_; ++ky)
                            for (int kx = 0; kx < k_; ++kx) {
                                const std::size_t at =
                                    static_cast<std::size_t>(oy * k_ + ky) * x.w + (ox * k_ + kx);
                                if (plane[at] > best) {
                                    best = plane[at];
                                    best_at = at;
                                }
                            }
                        y.v[oidx] = best;
                        argmax_[oidx] = (static_cast<std::size_t>(i) * x.c + ch) *
                                            (static_cast<std::size_t>(x.h) * x.w) +
                                        best_at;
                    }
                }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        Tensor gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
        for (std::size_t i = 0; i < gy.v.size(); ++i) gx.v[argmax_[i]] += gy.v[i];
        return gx;
    }

  private:
    int k_;
    std::array<int, 4> in_shape_{};
    std::vector<std::size_t> argmax_;
};

class GlobalAvgPool final : public Layer {
  public:
    Tensor forward(const Tensor& x, bool) override {
        in_shape_ = {x.n, x.c, x.h, x.w};
        Tensor y(x.n, x.c, 1, 1);
        const std::size_t plane = static_cast<std::size_t>(x.h) * x.w;
        for (int i = 0; i < x.n; ++i)
            for (int ch = 0; ch < x.c; ++ch) {
                const float* p = x.sample(i) + static_cast<std::size_t>(ch) * plane;
                double s = 0.0;
                for (std::size_t j = 0; j < plane; ++j) s += p[j];
                y.sample(i)[ch] = static_cast<float>(s / static_cast<double>(plane));
            }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        Tensor gx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
        const std::size_t plane = static_cast<std::size_t>(in_shape_[2]) * in_shape_[3];
        const float inv = 1.0f / static_cast<float>(plane);
        for (int i = 0; i < gx.n; ++i)
            for (int ch = 0; ch < gx.c; ++ch) {
                const float g = gy.sample(i)[ch] * inv;
                float* p = gx.sample(i) + static_cast<std::size_t>(ch) * plane;
                for (std::size_t j = 0; j < plane; ++j) p[j] = g;
            }
        return gx;
    }

  private:
    std::array<int, 4> in_shape_{};
};

// Fully connected over flattened c*h*w features.
class Linear final : public Layer {
  public:
    Linear(int in_features, int out_features, RngStream& rng)
        : in_(in_features), out_(out_features),
          weight_(static_cast<std::size_t>(in_features) * out_features),
          bias_(static_cast<std::size_t>(out_features)) {
        const double scale = std::sqrt(2.0 / static_cast<double>(in_features));
        for (auto& v : weight_.value) v = static_cast<float>(rng.normal(0.0, scale));
    }

    Tensor forward(const Tensor& x, bool) override {
        if (static_cast<int>(x.per_sample()) != in_)
            throw std::invalid_argument("linear: feature size mismatch");
        x_ = x;
        Tensor y(x.n, out_, 1, 1);
        ConstMatMap xm(x.v.data(), x.n, in_);
        ConstMatMap wm(weight_.value.data(), out_, in_);
        MatMap ym(y.v.data(), x.n, out_);
        ym.noalias() = xm * wm.transpose();
        for (int i = 0; i < x.n; ++i)
            for (int o = 0; o < out_; ++o) y.sample(i)[o] += bias_.value[static_cast<std::size_t>(o)];
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        Tensor gx(x_.n, x_.c, x_.h, x_.w);
        ConstMatMap gym(gy.v.data(), x_.n, out_);
        ConstMatMap xm(x_.v.data(), x_.n, in_);
        ConstMatMap wm(weight_.value.data(), out_, in_);
        MatMap gwm(weight_.grad.data(), out_, in_);
        gwm.noalias() += gym.transpose() * xm;
        for (int i = 0; i < x_.n; ++i)
            for (int o = 0; o < out_; ++o) bias_.grad[static_cast<std::size_t>(o)] += gy.sample(i)[o];
        MatMap gxm(gx.v.data(), x_.n, in_);
        gxm.noalias() = gym * wm;
        return gx;
    }

    void collect_params(std::vector<Param*>& out) override {
        out.push_back(&weight_);
        out.push_back(&bias_);
    }

    int out_features() const { return out_; }

  private:
    int in_, out_;
    Param weight_, bias_;
    Tensor x_;
};

class Sequential final : public Layer {
  public:
    Sequential() = default;

    void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }

    Tensor forward(const Tensor& x, bool train) override {
        Tensor cur = x;
        for (auto& l : layers_) cur = l->forward(cur, train);
        return cur;
    }

    Tensor backward(const Tensor& gy) override {
        Tensor cur = gy;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
        return cur;
    }

    void collect_params(std::vector<Param*>& out) override {
        for (auto& l : layers_) l->collect_params(out);
    }

    void collect_buffers(std::vector<std::vector<float>*>& out) override {
        for (auto& l : layers_) l->collect_buffers(out);
    }

    bool empty() const { return layers_.empty(); }

  private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

// y = act(body(x) + shortcut(x)); pre-activation variants skip the final relu.
class ResidualBlock final : public Layer {
  public:
    ResidualBlock(std::unique_ptr<Sequential> body, std::unique_ptr<Sequential> shortcut,
                  bool post_relu)
        : body_(std::move(body)), shortcut_(std::move(shortcut)), post_relu_(post_relu) {}

    Tensor forward(const Tensor& x, bool train) override {
        Tensor y = body_->forward(x, train);
        Tensor s = shortcut_ && !shortcut_->empty() ? shortcut_->forward(x, train) : x;
        if (!y.same_shape(s)) throw std::logic_error("residual: branch shape mismatch");
        for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += s.v[i];
        if (post_relu_) {
            mask_.assign(y.v.size(), 0);
            for (std::size_t i = 0; i < y.v.size(); ++i) {
                if (y.v[i] > 0.0f)
                    mask_[i] = 1;
                else
                    y.v[i] = 0.0f;
            }
        }
        return y;
    }

    Tensor backward(const Tensor& gy) override {
        Tensor g = gy;
        if (post_relu_)
            for (std::size_t i = 0; i < g.v.size(); ++i)
                if (!mask_[i]) g.v[i] = 0.0f;
        Tensor gx = body_->backward(g);
        if (shortcut_ && !shortcut_->empty()) {
            Tensor gs = shortcut_->backward(g);
            for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gs.v[i];
        } else {
            for (std::size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += g.v[i];
        }
        return gx;
    }

    void collect_params(std::vector<Param*>& out) override {
        body_->collect_params(out);
        if (shortcut_) shortcut_->collect_params(out);
    }

    void collect_buffers(std::vector<std::vector<float>*>& out) override {
        body_->collect_buffers(out);
        if (shortcut_) shortcut_->collect_buffers(out);
    }

  private:
    std::unique_ptr<Sequential> body_;
    std::unique_ptr<Sequential> shortcut_;
    bool post_relu_;
    std::vector<std::uint8_t> mask_;
};

}  // namespace pbench::nn

#endif  // PBENCH_NN_LAYERS_HPP
