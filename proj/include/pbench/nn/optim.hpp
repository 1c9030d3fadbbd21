#ifndef PBENCH_NN_OPTIM_HPP
#define PBENCH_NN_OPTIM_HPP

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbench/nn/layers.hpp"

namespace pbench::nn {

class Optimizer {
  public:
    virtual ~Optimizer() = default;
    virtual void step(const std::vector<Param*>& params) = 0;
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }

  protected:
    double lr_ = 0.01;
};

class Sgd final : public Optimizer {
  public:
    Sgd(double lr, double momentum, double weight_decay)
        : momentum_(momentum), weight_decay_(weight_decay) {
        lr_ = lr;
    }

    void step(const std::vector<Param*>& params) override {
        if (velocity_.size() != params.size()) {
            velocity_.clear();
            for (auto* p : params) velocity_.emplace_back(p->value.size(), 0.0f);
        }
        for (std::size_t i = 0; i < params.size(); ++i) {
            Param& p = *params[i];
            auto& vel = velocity_[i];
            for (std::size_t j = 0; j < p.value.size(); ++j) {
                const float g = p.grad[j] + static_cast<float>(weight_decay_) * p.value[j];
                vel[j] = static_cast<float>(momentum_) * vel[j] + g;
                p.value[j] -= static_cast<float>(lr_) * vel[j];
            }
        }
    }

  private:
    double momentum_, weight_decay_;
    std::vector<std::vector<float>> velocity_;
};

class Adam final : public Optimizer {
  public:
    Adam(double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
        lr_ = lr;
    }

    void step(const std::vector<Param*>& params) override {
        if (m_.size() != params.size()) {
            m_.clear();
            v_.clear();
            for (auto* p : params) {
                m_.emplace_back(p->value.size(), 0.0f);
                v_.emplace_back(p->value.size(), 0.0f);
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            Param& p = *params[i];
            auto& m = m_[i];
            auto& v = v_[i];
            for (std::size_t j = 0; j < p.value.size(); ++j) {
                const double g = p.grad[j] + weight_decay_ * p.value[j];
                m[j] = static_cast<float>(beta1_ * m[j] + (1.0 - beta1_) * g);
                v[j] = static_cast<float>(beta2_ * v[j] + (1.0 - beta2_) * g * g);
                const double mhat = m[j] / bc1;
                const double vhat = v[j] / bc2;
                p.value[j] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

  private:
    double weight_decay_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

struct OptimizerSpec {
    std::string kind = "sgd";  // sgd | adam
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 5e-4;

    std::string canonical() const {
        return kind + " lr=" + std::to_string(lr) + " mom=" + std::to_string(momentum) +
               " wd=" + std::to_string(weight_decay);
    }
};

inline std::unique_ptr<Optimizer> make_optimizer(const OptimizerSpec& spec) {
    if (spec.kind == "sgd") return std::make_unique<Sgd>(spec.lr, spec.momentum, spec.weight_decay);
    if (spec.kind == "adam") return std::make_unique<Adam>(spec.lr, spec.weight_decay);
    throw std::invalid_argument("unknown optimizer: " + spec.kind);
}

// Cosine decay to zero over the epoch budget.
inline double cosine_lr(double base_lr, int epoch, int total_epochs) {
    if (total_epochs <= 0) return base_lr;
    return base_lr * 0.5 *
           (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) /
                           static_cast<double>(total_epochs)));
}

}  // namespace pbench::nn

#endif  // PBENCH_NN_OPTIM_HPP
