#ifndef PBENCH_NN_MODELS_HPP
#define PBENCH_NN_MODELS_HPP

#include <cmath>
#include <cstdint>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbench/core/tensor_file.hpp"
#include "pbench/nn/layers.hpp"

namespace pbench::nn {

struct InputShape {
    int channels = 3;
    int height = 32;
    int width = 32;
};

// Feature stack + linear head. The penultimate activations (post global
// average pool, pre classifier) are the embedding space.
class Network {
  public:
    Network(std::string arch_id, std::unique_ptr<Sequential> features,
            std::unique_ptr<Linear> head, int embed_dim)
        : arch_id_(std::move(arch_id)), features_(std::move(features)), head_(std::move(head)),
          embed_dim_(embed_dim) {}

    const std::string& arch_id() const { return arch_id_; }
    int embed_dim() const { return embed_dim_; }
    int num_classes() const { return head_->out_features(); }

    Tensor forward(const Tensor& x, bool train) {
        return head_->forward(features_->forward(x, train), train);
    }

    // Inference-mode penultimate features: [n, embed_dim, 1, 1].
    Tensor embed(const Tensor& x) { return features_->forward(x, false); }

    Tensor backward(const Tensor& grad_logits) {
        return features_->backward(head_->backward(grad_logits));
    }

    std::vector<Param*> params() {
        std::vector<Param*> out;
        features_->collect_params(out);
        head_->collect_params(out);
        return out;
    }

    std::vector<std::vector<float>*> buffers() {
        std::vector<std::vector<float>*> out;
        features_->collect_buffers(out);
        return out;
    }

    void zero_grad() {
        for (auto* p : params()) p->zero_grad();
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for (auto* p : params()) n += p->value.size();
        return n;
    }

    WeightBundle state() {
        WeightBundle w;
        int idx = 0;
        for (auto* p : params())
            w.tensors.emplace_back("p" + std::to_string(idx++),
                                   TensorBlob{{static_cast<std::uint32_t>(p->value.size())},
                                              p->value});
        idx = 0;
        for (auto* b : buffers())
            w.tensors.emplace_back("b" + std::to_string(idx++),
                                   TensorBlob{{static_cast<std::uint32_t>(b->size())}, *b});
        w.tensors.emplace_back("arch", TensorBlob{{0}, {}});
        w.tensors.back().first = "arch:" + arch_id_;
        return w;
    }

    void load_state(const WeightBundle& w) {
        std::vector<Param*> ps = params();
        std::vector<std::vector<float>*> bs = buffers();
        std::size_t pi = 0, bi = 0;
        for (const auto& [name, blob] : w.tensors) {
            if (name.rfind("arch:", 0) == 0) {
                if (name.substr(5) != arch_id_)
                    throw std::runtime_error("weight bundle is for architecture '" + name.substr(5) +
                                             "', expected '" + arch_id_ + "'");
                continue;
            }
            if (name.rfind("p", 0) == 0) {
                if (pi >= ps.size() || blob.values.size() != ps[pi]->value.size())
                    throw std::runtime_error("weight bundle parameter shape mismatch at " + name);
                ps[pi++]->value = blob.values;
            } else if (name.rfind("b", 0) == 0) {
                if (bi >= bs.size() || blob.values.size() != bs[bi]->size())
                    throw std::runtime_error("weight bundle buffer shape mismatch at " + name);
                *bs[bi++] = blob.values;
            }
        }
        if (pi != ps.size() || bi != bs.size())
            throw std::runtime_error("weight bundle incomplete for " + arch_id_);
    }

  private:
    std::string arch_id_;
    std::unique_ptr<Sequential> features_;
    std::unique_ptr<Linear> head_;
    int embed_dim_;
};

namespace detail {

inline int scaled(int channels, float width_mult) {
    return std::max(4, static_cast<int>(std::lround(channels * width_mult)));
}

inline void add_conv_bn_relu(Sequential& seq, int in_c, int out_c, RngStream& rng, int stride = 1) {
    seq.add(std::make_unique<Conv2d>(in_c, out_c, 3, stride, 1, rng));
    seq.add(std::make_unique<BatchNorm2d>(out_c));
    seq.add(std::make_unique<ReLU>());
}

inline std::unique_ptr<Sequential> basic_block_body(int in_c, int out_c, int stride,
                                                    RngStream& rng) {
    auto body = std::make_unique<Sequential>();
    body->add(std::make_unique<Conv2d>(in_c, out_c, 3, stride, 1, rng));
    body->add(std::make_unique<BatchNorm2d>(out_c));
    body->add(std::make_unique<ReLU>());
    body->add(std::make_unique<Conv2d>(out_c, out_c, 3, 1, 1, rng));
    body->add(std::make_unique<BatchNorm2d>(out_c));
    return body;
}

inline std::unique_ptr<Sequential> preact_block_body(int in_c, int out_c, int stride,
                                                     RngStream& rng) {
    auto body = std::make_unique<Sequential>();
    body->add(std::make_unique<BatchNorm2d>(in_c));
    body->add(std::make_unique<ReLU>());
    body->add(std::make_unique<Conv2d>(in_c, out_c, 3, stride, 1, rng));
    body->add(std::make_unique<BatchNorm2d>(out_c));
    body->add(std::make_unique<ReLU>());
    body->add(std::make_unique<Conv2d>(out_c, out_c, 3, 1, 1, rng));
    return body;
}

inline std::unique_ptr<Sequential> projection_shortcut(int in_c, int out_c, int stride,
                                                       RngStream& rng, bool with_bn) {
    auto sc = std::make_unique<Sequential>();
    if (in_c != out_c || stride != 1) {
        sc->add(std::make_unique<Conv2d>(in_c, out_c, 1, stride, 0, rng));
        if (with_bn) sc->add(std::make_unique<BatchNorm2d>(out_c));
    }
    return sc;
}

}  // namespace detail

// width_mult scales channel counts uniformly; 1.0 is the standard CIFAR-sized
// network, smaller values give the reduced profiles used on weak hardware.
inline Network build_resnet18(const InputShape& in, int num_classes, float width_mult,
                              std::int64_t init_seed, bool preact = false) {
    auto rng = derive_rng(init_seed, preact ? "init/preact_resnet18" : "init/resnet18");
    const int w1 = detail::scaled(64, width_mult), w2 = detail::scaled(128, width_mult);
    const int w3 = detail::scaled(256, width_mult), w4 = detail::scaled(512, width_mult);
    auto features = std::make_unique<Sequential>();
    features->add(std::make_unique<Conv2d>(in.channels, w1, 3, 1, 1, rng));
    if (!preact) {
        features->add(std::make_unique<BatchNorm2d>(w1));
        features->add(std::make_unique<ReLU>());
    }
    const int stage_c[4] = {w1, w2, w3, w4};
    int cur = w1;
    for (int stage = 0; stage < 4; ++stage) {
        const int out_c = stage_c[stage];
        const int first_stride = stage == 0 ? 1 : 2;
        for (int block = 0; block < 2; ++block) {
            const int stride = block == 0 ? first_stride : 1;
            auto body = preact ? detail::preact_block_body(cur, out_c, stride, rng)
                               : detail::basic_block_body(cur, out_c, stride, rng);
            auto shortcut = detail::projection_shortcut(cur, out_c, stride, rng, !preact);
            features->add(std::make_unique<ResidualBlock>(std::move(body), std::move(shortcut),
                                                          /*post_relu=*/!preact));
            cur = out_c;
        }
    }
    if (preact) {
        features->add(std::make_unique<BatchNorm2d>(cur));
        features->add(std::make_unique<ReLU>());
    }
    features->add(std::make_unique<GlobalAvgPool>());
    auto head = std::make_unique<Linear>(cur, num_classes, rng);
    std::ostringstream arch;
    arch << (preact ? "preact_resnet18" : "resnet18") << " w=" << width_mult << " in="
         << in.channels << "x" << in.height << "x" << in.width << " classes=" << num_classes;
    return Network(arch.str(), std::move(features), std::move(head), cur);
}

inline Network build_vgg(const InputShape& in, int num_classes, float width_mult,
                         std::int64_t init_seed, int depth) {
    if (depth != 13 && depth != 16) throw std::invalid_argument("vgg depth must be 13 or 16");
    auto rng = derive_rng(init_seed, "init/vgg" + std::to_string(depth));
    // Stage plan: channels x convs-per-stage, maxpool between stages while
    // spatial extent allows.
    const int convs_per_stage_13[5] = {2, 2, 2, 2, 2};
    const int convs_per_stage_16[5] = {2, 2, 3, 3, 3};
    const int* convs = depth == 13 ? convs_per_stage_13 : convs_per_stage_16;
    const int base[5] = {64, 128, 256, 512, 512};
    auto features = std::make_unique<Sequential>();
    int cur = in.channels;
    int h = in.height;
    for (int stage = 0; stage < 5; ++stage) {
        const int out_c = detail::scaled(base[stage], width_mult);
        for (int k = 0; k < convs[stage]; ++k) {
            detail::add_conv_bn_relu(*features, cur, out_c, rng);
            cur = out_c;
        }
        if (h >= 2) {
            features->add(std::make_unique<MaxPool2d>(2));
            h /= 2;
        }
    }
    features->add(std::make_unique<GlobalAvgPool>());
    auto head = std::make_unique<Linear>(cur, num_classes, rng);
    std::ostringstream arch;
    arch << "vgg" << depth << " w=" << width_mult << " in=" << in.channels << "x" << in.height
         << "x" << in.width << " classes=" << num_classes;
    return Network(arch.str(), std::move(features), std::move(head), cur);
}

// Compact three-stage CNN; the default extractor/victim at reduced scale.
inline Network build_small_cnn(const InputShape& in, int num_classes, float width_mult,
                               std::int64_t init_seed) {
    auto rng = derive_rng(init_seed, "init/small_cnn");
    const int c1 = detail::scaled(16, width_mult), c2 = detail::scaled(32, width_mult),
              c3 = detail::scaled(64, width_mult);
    auto features = std::make_unique<Sequential>();
    detail::add_conv_bn_relu(*features, in.channels, c1, rng);
    if (in.height >= 2) features->add(std::make_unique<MaxPool2d>(2));
    detail::add_conv_bn_relu(*features, c1, c2, rng);
    if (in.height / 2 >= 2) features->add(std::make_unique<MaxPool2d>(2));
    detail::add_conv_bn_relu(*features, c2, c3, rng);
    features->add(std::make_unique<GlobalAvgPool>());
    auto head = std::make_unique<Linear>(c3, num_classes, rng);
    std::ostringstream arch;
    arch << "small_cnn w=" << width_mult << " in=" << in.channels << "x" << in.height << "x"
         << in.width << " classes=" << num_classes;
    return Network(arch.str(), std::move(features), std::move(head), c3);
}

// Flatten-only feature map; embeddings are the raw pixels. Used by the
// hand-computed cosine oracles and available as extractor architecture
// "identity".
inline Network build_identity(const InputShape& in, int num_classes, std::int64_t init_seed) {
    auto rng = derive_rng(init_seed, "init/identity");
    auto features = std::make_unique<Sequential>();  // empty: forward is a reshape-free pass
    const int dim = in.channels * in.height * in.width;
    auto head = std::make_unique<Linear>(dim, num_classes, rng);
    std::ostringstream arch;
    arch << "identity in=" << in.channels << "x" << in.height << "x" << in.width
         << " classes=" << num_classes;
    return Network(arch.str(), std::move(features), std::move(head), dim);
}

// Single linear layer over flattened pixels (the UAP closed-form oracle
// target).
inline Network build_linear(const InputShape& in, int num_classes, std::int64_t init_seed) {
    auto rng = derive_rng(init_seed, "init/linear");
    auto features = std::make_unique<Sequential>();
    const int dim = in.channels * in.height * in.width;
    auto head = std::make_unique<Linear>(dim, num_classes, rng);
    std::ostringstream arch;
    arch << "linear in=" << in.channels << "x" << in.height << "x" << in.width
         << " classes=" << num_classes;
    return Network(arch.str(), std::move(features), std::move(head), dim);
}

inline Network build_network(const std::string& arch, const InputShape& in, int num_classes,
                             float width_mult, std::int64_t init_seed) {
    if (arch == "resnet18") return build_resnet18(in, num_classes, width_mult, init_seed, false);
    if (arch == "preact_resnet18")
        return build_resnet18(in, num_classes, width_mult, init_seed, true);
    if (arch == "vgg13") return build_vgg(in, num_classes, width_mult, init_seed, 13);
    if (arch == "vgg16") return build_vgg(in, num_classes, width_mult, init_seed, 16);
    if (arch == "small_cnn") return build_small_cnn(in, num_classes, width_mult, init_seed);
    if (arch == "identity") return build_identity(in, num_classes, init_seed);
    if (arch == "linear") return build_linear(in, num_classes, init_seed);
    throw std::invalid_argument("unknown architecture: " + arch);
}

}  // namespace pbench::nn

#endif  // PBENCH_NN_MODELS_HPP
