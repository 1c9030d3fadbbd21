#ifndef PBENCH_FEATURES_EXTRACTOR_HPP
#define PBENCH_FEATURES_EXTRACTOR_HPP

#include <chrono>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pbench/core/artifact_store.hpp"
#include "pbench/core/dataset.hpp"
#include "pbench/core/preprocess.hpp"
#include "pbench/harness/transforms.hpp"
#include "pbench/nn/models.hpp"
#include "pbench/nn/train.hpp"
#include "pbench/triggers/trigger.hpp"

namespace pbench {

struct TrainRecipe {
    nn::OptimizerSpec optimizer{};  // paper extractor: sgd lr 0.01, momentum 0.9, wd 5e-4
    int epochs = 70;
    int batch_size = 256;
    std::vector<TransformKind> transforms{TransformKind::random_crop,
                                          TransformKind::random_horizontal_flip};
    float width_mult = 1.0f;
    std::int64_t seed = 0;

    std::string canonical() const {
        std::ostringstream os;
        os << optimizer.canonical() << " epochs=" << epochs << " batch=" << batch_size << " F=";
        for (auto t : transforms) os << to_string(t) << ',';
        os << " w=" << width_mult << " seed=" << seed;
        return os.str();
    }
};

struct ExtractorHandle {
    std::string architecture = "resnet18";  // resnet18 | imagenet_pretrained | custom | identity
    std::string builder = "resnet18";       // concrete network builder name
    float width_mult = 1.0f;
    nn::InputShape input{};
    int num_classes = 10;
    int embed_dim = 0;
    std::string weights_ref;                // content hash of the weight bundle
    std::string recipe_canonical;
    double train_wall_sec = 0.0;
    double clean_test_acc = -1.0;
    std::shared_ptr<nn::Network> net;

    // Identity of the feature space: architecture + weights.
    std::string id() const {
        return sha256_hex(builder + "|" + std::to_string(width_mult) + "|" + weights_ref);
    }

    nlohmann::json meta() const {
        return {{"architecture", architecture},
                {"builder", builder},
                {"width_mult", width_mult},
                {"in_c", input.channels},
                {"in_h", input.height},
                {"in_w", input.width},
                {"num_classes", num_classes},
                {"embed_dim", embed_dim},
                {"weights_ref", weights_ref},
                {"recipe", recipe_canonical},
                {"train_wall_sec", train_wall_sec},
                {"clean_test_acc", clean_test_acc}};
    }
};

class TrainingDiverged : public std::runtime_error {
  public:
    TrainingDiverged(const std::string& what, std::string checkpoint_ref)
        : std::runtime_error(what), checkpoint_ref(std::move(checkpoint_ref)) {}
    std::string checkpoint_ref;  // last-good weights, already persisted
};

namespace detail {

inline std::string builder_for_extractor_arch(const std::string& arch) {
    if (arch == "resnet18") return "resnet18";
    if (arch == "custom") return "small_cnn";
    if (arch == "identity") return "identity";
    if (arch == "imagenet_pretrained")
        throw std::invalid_argument("imagenet_pretrained extractors load from a weights file");
    return arch;  // allow direct builder names
}

}  // namespace detail

struct ExtractorTrainLog {
    std::vector<double> epoch_loss;
    std::vector<double> epoch_acc;
};

// Trains the feature extractor E on the clean training split. Weights are
// persisted; clean test accuracy is recorded on the handle when a test split
// is supplied.
inline ExtractorHandle train_extractor(const Dataset& train, const TrainRecipe& recipe,
                                       ArtifactStore& store,
                                       const std::string& architecture = "resnet18",
                                       const Dataset* test = nullptr,
                                       ExtractorTrainLog* log = nullptr) {
    if (train.ref().split != Split::train)
        throw std::invalid_argument("train_extractor requires a training split");
    const auto t0 = std::chrono::steady_clock::now();

    ExtractorHandle h;
    h.architecture = architecture;
    h.builder = detail::builder_for_extractor_arch(architecture);
    h.width_mult = recipe.width_mult;
    h.input = {train.channels(), train.height(), train.width()};
    h.num_classes = train.num_classes();
    h.recipe_canonical = recipe.canonical();

    h.net = std::make_shared<nn::Network>(
        nn::build_network(h.builder, h.input, h.num_classes, recipe.width_mult, recipe.seed));
    h.embed_dim = h.net->embed_dim();

    const Normalization norm = standard_normalization(train.ref().name);
    auto opt = nn::make_optimizer(recipe.optimizer);
    auto order_rng = derive_rng(recipe.seed, "extractor/order");
    auto aug_rng = derive_rng(recipe.seed, "extractor/augment");

    nn::BatchFill fill = [&](const std::vector<std::int64_t>& idx, nn::Tensor& x,
                             std::vector<std::int32_t>& labels, RngStream& rng) {
        std::vector<Image> imgs;
        imgs.reserve(idx.size());
        labels.clear();
        for (auto i : idx) {
            imgs.push_back(apply_transforms(train.image(i), recipe.transforms, rng));
            labels.push_back(train.label(i));
        }
        x = to_batch(imgs, norm);
    };

    std::string last_good;
    for (int epoch = 0; epoch < recipe.epochs; ++epoch) {
        opt->set_lr(nn::cosine_lr(recipe.optimizer.lr, epoch, recipe.epochs));
        nn::EpochStats stats;
        try {
            stats = nn::run_training_epoch(*h.net, *opt, train.size(), recipe.batch_size, fill,
                                           order_rng, aug_rng);
        } catch (const std::runtime_error& e) {
            throw TrainingDiverged(std::string("extractor training diverged at epoch ") +
                                       std::to_string(epoch) + ": " + e.what(),
                                   last_good);
        }
        if (log) {
            log->epoch_loss.push_back(stats.loss);
            log->epoch_acc.push_back(stats.accuracy);
        }
        last_good = store.put(encode_weights(h.net->state()));
    }
    if (recipe.epochs == 0) last_good = store.put(encode_weights(h.net->state()));
    h.weights_ref = last_good;

    if (test) {
        const Normalization tnorm = standard_normalization(test->ref().name);
        nn::EvalFill efill = [&](const std::vector<std::int64_t>& idx, nn::Tensor& x) {
            std::vector<Image> imgs;
            imgs.reserve(idx.size());
            for (auto i : idx) imgs.push_back(test->image(i));
            x = to_batch(imgs, tnorm);
        };
        const auto preds = nn::predict_all(*h.net, test->size(), recipe.batch_size, efill);
        std::int64_t correct = 0;
        for (std::int64_t i = 0; i < test->size(); ++i)
            if (preds[static_cast<std::size_t>(i)] == test->label(i)) ++correct;
        h.clean_test_acc = static_cast<double>(correct) / static_cast<double>(test->size());
    }
    h.train_wall_sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return h;
}

inline ExtractorHandle load_extractor(const nlohmann::json& meta, const ArtifactStore& store) {
    ExtractorHandle h;
    h.architecture = meta.at("architecture").get<std::string>();
    h.builder = meta.at("builder").get<std::string>();
    h.width_mult = meta.at("width_mult").get<float>();
    h.input = {meta.at("in_c").get<int>(), meta.at("in_h").get<int>(), meta.at("in_w").get<int>()};
    h.num_classes = meta.at("num_classes").get<int>();
    h.embed_dim = meta.at("embed_dim").get<int>();
    h.weights_ref = meta.at("weights_ref").get<std::string>();
    h.recipe_canonical = meta.at("recipe").get<std::string>();
    h.train_wall_sec = meta.at("train_wall_sec").get<double>();
    h.clean_test_acc = meta.at("clean_test_acc").get<double>();
    h.net = std::make_shared<nn::Network>(
        nn::build_network(h.builder, h.input, h.num_classes, h.width_mult, /*init_seed=*/0));
    h.net->load_state(decode_weights(store.get(h.weights_ref)));
    return h;
}

struct EmbedMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<float> v;

    const float* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
};

// Deterministic inference-mode embedding of a batch of images.
inline EmbedMatrix embed(const ExtractorHandle& extractor, const std::vector<Image>& images,
                         const Normalization& norm) {
    if (!extractor.net) throw std::invalid_argument("embed: extractor has no materialized network");
    for (const auto& img : images)
        if (img.channels != extractor.input.channels || img.height != extractor.input.height ||
            img.width != extractor.input.width)
            throw std::invalid_argument("embed: image shape does not match extractor input");
    EmbedMatrix m;
    m.rows = static_cast<int>(images.size());
    m.cols = extractor.embed_dim;
    if (images.empty()) return m;
    const nn::Tensor x = to_batch(images, norm);
    const nn::Tensor f = extractor.net->embed(x);
    if (static_cast<int>(f.per_sample()) != extractor.embed_dim)
        throw std::logic_error("embed: embedding width mismatch");
    m.v = f.v;
    for (float val : m.v)
        if (!std::isfinite(val)) throw std::runtime_error("embed: non-finite embedding value");
    return m;
}

}  // namespace pbench

#endif  // PBENCH_FEATURES_EXTRACTOR_HPP
