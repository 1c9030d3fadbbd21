#ifndef PBENCH_HARNESS_VICTIM_HPP
#define PBENCH_HARNESS_VICTIM_HPP

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbench/core/artifact_store.hpp"
#include "pbench/core/dataset.hpp"
#include "pbench/core/plan.hpp"
#include "pbench/core/preprocess.hpp"
#include "pbench/features/extractor.hpp"
#include "pbench/harness/transforms.hpp"
#include "pbench/nn/models.hpp"
#include "pbench/nn/train.hpp"

namespace pbench {

// The victim phase H: architecture, optimizer, transforms F, budget.
struct VictimConfig {
    std::string architecture = "resnet18";  // vgg13 | vgg16 | resnet18 | preact_resnet18 | ...
    nn::OptimizerSpec optimizer{};
    std::vector<TransformKind> transforms{TransformKind::random_crop,
                                          TransformKind::random_horizontal_flip};
    int epochs = 30;
    int batch_size = 256;
    float width_mult = 1.0f;
    std::int64_t seed = 0;

    void validate() const {
        if (optimizer.lr <= 0.0) throw std::invalid_argument("victim: learning rate must be > 0");
        if (epochs < 1) throw std::invalid_argument("victim: epochs must be >= 1");
        if (batch_size < 1) throw std::invalid_argument("victim: batch_size must be >= 1");
        validate_transforms(transforms);
    }

    std::string canonical() const {
        std::ostringstream os;
        os << architecture << ' ' << optimizer.canonical() << " F=";
        for (auto t : transforms) os << to_string(t) << ',';
        os << " epochs=" << epochs << " batch=" << batch_size << " w=" << width_mult
           << " seed=" << seed;
        return os.str();
    }

    std::string hash() const { return sha256_hex(canonical()); }
};

// Non-destructive poisoned training view: N records, the plan's P indices
// served as (T(x_i, t), k), everything else untouched.
class PoisonedView {
  public:
    PoisonedView(const Dataset& data, PoisonPlan plan) : data_(data), plan_(std::move(plan)) {
        if (plan_.dataset.canonical() != data.ref().canonical())
            throw std::invalid_argument("poisoned view: plan was built for a different dataset");
        validate_plan(plan_);
        membership_.assign(static_cast<std::size_t>(data.size()), 0);
        for (auto i : plan_.indices) {
            if (i < 0 || i >= data.size()) throw std::out_of_range("poisoned view: plan index");
            membership_[static_cast<std::size_t>(i)] = 1;
        }
    }

    // Empty-plan view (clean training).
    static PoisonedView clean(const Dataset& data) { return PoisonedView(data); }

    std::int64_t size() const { return data_.size(); }
    const Dataset& dataset() const { return data_; }
    const PoisonPlan* plan() const { return has_plan_ ? &plan_ : nullptr; }

    bool poisoned(std::int64_t i) const { return membership_[static_cast<std::size_t>(i)] != 0; }

    std::int32_t label(std::int64_t i) const {
        return poisoned(i) ? plan_.target_label : data_.label(i);
    }

    Image image(std::int64_t i) const {
        Image img = data_.image(i);
        if (poisoned(i)) return apply_trigger(img, plan_.trigger, i).pixels;
        return img;
    }

  private:
    explicit PoisonedView(const Dataset& data) : data_(data), has_plan_(false) {
        membership_.assign(static_cast<std::size_t>(data.size()), 0);
    }

    const Dataset& data_;
    PoisonPlan plan_;
    bool has_plan_ = true;
    std::vector<char> membership_;
};

inline PoisonedView build_poisoned_dataset(const Dataset& data, const PoisonPlan& plan) {
    return PoisonedView(data, plan);
}

struct TrainLog {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_acc;
    double wall_sec = 0.0;
};

struct VictimModel {
    std::shared_ptr<nn::Network> net;
    VictimConfig config;
    Normalization norm{};
    std::string weights_ref;  // set when persisted
    TrainLog log;
};

// Eq. 1 empirical risk over the released (poisoned) dataset. Victims apply
// their own transforms F after the attacker's trigger is baked in.
inline VictimModel train_victim(const PoisonedView& view, const VictimConfig& config,
                                ArtifactStore* store = nullptr,
                                const std::function<void(int, nn::Network&)>& epoch_hook = {}) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const Dataset& data = view.dataset();

    VictimModel model;
    model.config = config;
    model.norm = standard_normalization(data.ref().name);
    const nn::InputShape in{data.channels(), data.height(), data.width()};
    model.net = std::make_shared<nn::Network>(
        nn::build_network(config.architecture, in, data.num_classes(), config.width_mult,
                          config.seed));

    auto opt = nn::make_optimizer(config.optimizer);
    auto order_rng = derive_rng(config.seed, "victim/order");
    auto aug_rng = derive_rng(config.seed, "victim/augment");

    nn::BatchFill fill = [&](const std::vector<std::int64_t>& idx, nn::Tensor& x,
                             std::vector<std::int32_t>& labels, RngStream& rng) {
        std::vector<Image> imgs;
        imgs.reserve(idx.size());
        labels.clear();
        for (auto i : idx) {
            imgs.push_back(apply_transforms(view.image(i), config.transforms, rng));
            labels.push_back(view.label(i));
        }
        x = to_batch(imgs, model.norm);
    };

    std::string last_good;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        opt->set_lr(nn::cosine_lr(config.optimizer.lr, epoch, config.epochs));
        nn::EpochStats stats;
        try {
            stats = nn::run_training_epoch(*model.net, *opt, view.size(), config.batch_size, fill,
                                           order_rng, aug_rng);
        } catch (const std::runtime_error& e) {
            throw TrainingDiverged(std::string("victim training diverged at epoch ") +
                                       std::to_string(epoch) + ": " + e.what(),
                                   last_good);
        }
        model.log.epoch_loss.push_back(stats.loss);
        model.log.epoch_acc.push_back(stats.accuracy);
        if (store) last_good = store->put(encode_weights(model.net->state()));
        if (epoch_hook) epoch_hook(epoch, *model.net);
    }
    if (store) {
        if (last_good.empty()) last_good = store->put(encode_weights(model.net->state()));
        model.weights_ref = last_good;
    }
    model.log.wall_sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return model;
}

struct EvalResult {
    double asr = 0.0;
    double ba = 0.0;
    std::int64_t asr_eligible = 0;  // non-target-class test records
};

using PredictFn = std::function<std::vector<std::int32_t>(const std::vector<Image>&)>;

inline PredictFn make_predictor(nn::Network& net, const Normalization& norm,
                                int batch_size = 256) {
    return [&net, norm, batch_size](const std::vector<Image>& images) {
        std::vector<std::int32_t> preds;
        preds.reserve(images.size());
        for (std::size_t begin = 0; begin < images.size();
             begin += static_cast<std::size_t>(batch_size)) {
            const std::size_t end =
                std::min(images.size(), begin + static_cast<std::size_t>(batch_size));
            const std::vector<Image> chunk(images.begin() + static_cast<std::ptrdiff_t>(begin),
                                           images.begin() + static_cast<std::ptrdiff_t>(end));
            const nn::Tensor x = to_batch(chunk, norm);
            nn::Tensor logits = net.forward(x, /*train=*/false);
            for (auto p : nn::argmax_labels(logits)) preds.push_back(p);
        }
        return preds;
    };
}

// BA = clean test accuracy. ASR = fraction of triggered non-target-class test
// records classified as k.
inline EvalResult evaluate(const PredictFn& predict, const Dataset& test, const TriggerSpec& trigger,
                           std::int32_t target_label, int batch_size = 256) {
    if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
    EvalResult res;
    std::int64_t ba_correct = 0;
    std::int64_t asr_hits = 0;

    for (std::int64_t begin = 0; begin < test.size(); begin += batch_size) {
        const auto end = std::min<std::int64_t>(begin + batch_size, test.size());
        std::vector<Image> clean;
        std::vector<Image> triggered;
        std::vector<std::int64_t> triggered_src;
        for (std::int64_t i = begin; i < end; ++i) {
            Image img = test.image(i);
            if (test.label(i) != target_label) {
                triggered.push_back(apply_trigger(img, trigger, i).pixels);
                triggered_src.push_back(i);
            }
            clean.push_back(std::move(img));
        }
        const auto clean_preds = predict(clean);
        for (std::int64_t i = begin; i < end; ++i)
            if (clean_preds[static_cast<std::size_t>(i - begin)] == test.label(i)) ++ba_correct;
        if (!triggered.empty()) {
            const auto trig_preds = predict(triggered);
            for (std::size_t j = 0; j < trig_preds.size(); ++j)
                if (trig_preds[j] == target_label) ++asr_hits;
            res.asr_eligible += static_cast<std::int64_t>(triggered.size());
        }
    }
    if (res.asr_eligible == 0)
        throw std::invalid_argument("evaluate: no non-target-class test records");
    res.ba = static_cast<double>(ba_correct) / static_cast<double>(test.size());
    res.asr = static_cast<double>(asr_hits) / static_cast<double>(res.asr_eligible);
    return res;
}

inline EvalResult evaluate(VictimModel& model, const Dataset& test, const TriggerSpec& trigger,
                           std::int32_t target_label) {
    return evaluate(make_predictor(*model.net, model.norm, model.config.batch_size), test, trigger,
                    target_label, model.config.batch_size);
}

struct ForgettingCounts {
    std::vector<int> events;  // one per plan index, plan order
    double final_loss = 0.0;
};

// FUS inner scoring: train the proxy on the poisoned view; after each epoch
// re-predict the P poisoned records and count correct->incorrect transitions
// on the target label.
inline ForgettingCounts proxy_forgetting_counts(const Dataset& data, const PoisonPlan& plan,
                                                const VictimConfig& proxy) {
    const PoisonedView view = build_poisoned_dataset(data, plan);
    const Normalization norm = standard_normalization(data.ref().name);

    std::vector<Image> poison_images;
    poison_images.reserve(plan.indices.size());
    for (auto i : plan.indices)
        poison_images.push_back(apply_trigger(data.image(i), plan.trigger, i).pixels);

    ForgettingCounts counts;
    counts.events.assign(plan.indices.size(), 0);
    std::vector<char> was_correct(plan.indices.size(), 0);
    bool first_epoch = true;

    VictimModel model = train_victim(view, proxy, nullptr, [&](int, nn::Network& net) {
        const auto preds = make_predictor(net, norm, proxy.batch_size)(poison_images);
        for (std::size_t j = 0; j < preds.size(); ++j) {
            const bool correct = preds[j] == plan.target_label;
            if (!first_epoch && was_correct[j] && !correct) ++counts.events[j];
            was_correct[j] = correct ? 1 : 0;
        }
        first_epoch = false;
    });
    counts.final_loss = model.log.epoch_loss.empty() ? 0.0 : model.log.epoch_loss.back();
    return counts;
}

}  // namespace pbench

#endif  // PBENCH_HARNESS_VICTIM_HPP
