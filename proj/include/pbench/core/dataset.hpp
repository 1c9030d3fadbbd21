#ifndef PBENCH_CORE_DATASET_HPP
#define PBENCH_CORE_DATASET_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbench/core/bytes.hpp"
#include "pbench/core/image.hpp"
#include "pbench/core/rng.hpp"
#include "pbench/core/text.hpp"

namespace pbench {

enum class DatasetName { cifar10, cifar100, tiny_imagenet, synthetic };
enum class Split { train, test };

inline std::string to_string(DatasetName n) {
    switch (n) {
        case DatasetName::cifar10: return "cifar10";
        case DatasetName::cifar100: return "cifar100";
        case DatasetName::tiny_imagenet: return "tiny-imagenet";
        case DatasetName::synthetic: return "synthetic";
    }
    throw std::logic_error("unknown dataset name");
}

inline DatasetName dataset_name_from(const std::string& s) {
    if (s == "cifar10") return DatasetName::cifar10;
    if (s == "cifar100") return DatasetName::cifar100;
    if (s == "tiny-imagenet") return DatasetName::tiny_imagenet;
    if (s == "synthetic") return DatasetName::synthetic;
    throw std::invalid_argument("unknown dataset name: " + s);
}

inline std::string to_string(Split s) { return s == Split::train ? "train" : "test"; }

inline Split split_from(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "test") return Split::test;
    throw std::invalid_argument("unknown split: " + s);
}

// Generation parameters for the synthetic dataset family. Each class gets a
// smooth random prototype; per-sample pattern strength varies so some samples
// carry weak class evidence (the difficulty spread similarity filtering keys
// on).
struct SyntheticSpec {
    int classes = 10;
    int channels = 3;
    int height = 12;
    int width = 12;
    std::int64_t train_size = 4000;
    std::int64_t test_size = 1000;
    std::int64_t gen_seed = 7;
    float noise = 0.14f;
    float strength_lo = 0.30f;
    float strength_hi = 1.00f;

    // Canonical text form, embedded in plan manifests.
    std::string canonical() const {
        std::ostringstream os;
        os << classes << ' ' << channels << ' ' << height << ' ' << width << ' ' << train_size
           << ' ' << test_size << ' ' << gen_seed << ' ' << noise << ' ' << strength_lo << ' '
           << strength_hi;
        return os.str();
    }
};

struct DatasetRef {
    DatasetName name = DatasetName::synthetic;
    Split split = Split::train;
    std::filesystem::path root_path;
    int num_classes = 10;
    std::int64_t size = 0;  // N; 0 = fill on load
    std::optional<SyntheticSpec> synthetic;

    // Semantic identity only: paths stay out so hashes survive relocation.
    std::string canonical() const {
        std::ostringstream os;
        os << to_string(name) << ' ' << to_string(split) << ' ' << num_classes << ' ' << size;
        if (synthetic) os << " synth " << synthetic->canonical();
        return os.str();
    }
};

// Materialized dataset: u8 CHW records, labels. Loads validate the registry
// invariants (every index resolves, labels within range).
class Dataset {
  public:
    Dataset(DatasetRef ref, int c, int h, int w, std::vector<std::uint8_t> pixels,
            std::vector<std::int32_t> labels)
        : ref_(std::move(ref)), channels_(c), height_(h), width_(w),
          pixels_(std::move(pixels)), labels_(std::move(labels)) {
        const auto n = static_cast<std::int64_t>(labels_.size());
        if (pixels_.size() != static_cast<std::size_t>(n) * record_size())
            throw std::invalid_argument("dataset: pixel buffer does not match N records");
        for (auto l : labels_)
            if (l < 0 || l >= ref_.num_classes)
                throw std::invalid_argument("dataset: label out of [0, num_classes)");
        if (ref_.size == 0) ref_.size = n;
        if (ref_.size != n) throw std::invalid_argument("dataset: declared N does not match records");
    }

    const DatasetRef& ref() const { return ref_; }
    std::int64_t size() const { return ref_.size; }
    int channels() const { return channels_; }
    int height() const { return height_; }
    int width() const { return width_; }
    int num_classes() const { return ref_.num_classes; }

    std::int32_t label(std::int64_t i) const { return labels_.at(static_cast<std::size_t>(i)); }

    Image image(std::int64_t i) const {
        if (i < 0 || i >= size()) throw std::out_of_range("dataset index");
        Image img(channels_, height_, width_);
        const auto* src = pixels_.data() + static_cast<std::size_t>(i) * record_size();
        for (std::size_t p = 0; p < img.data.size(); ++p)
            img.data[p] = static_cast<float>(src[p]) / 255.0f;
        return img;
    }

  private:
    std::size_t record_size() const {
        return static_cast<std::size_t>(channels_) * height_ * width_;
    }

    DatasetRef ref_;
    int channels_, height_, width_;
    std::vector<std::uint8_t> pixels_;
    std::vector<std::int32_t> labels_;
};

struct Normalization {
    std::array<float, 3> mean;
    std::array<float, 3> stddev;
};

inline Normalization standard_normalization(DatasetName name) {
    switch (name) {
        case DatasetName::cifar10: return {{0.4914f, 0.4822f, 0.4465f}, {0.2470f, 0.2435f, 0.2616f}};
        case DatasetName::cifar100: return {{0.5071f, 0.4865f, 0.4409f}, {0.2673f, 0.2564f, 0.2762f}};
        case DatasetName::tiny_imagenet:
            return {{0.4802f, 0.4481f, 0.3975f}, {0.2770f, 0.2691f, 0.2821f}};
        case DatasetName::synthetic: return {{0.5f, 0.5f, 0.5f}, {0.25f, 0.25f, 0.25f}};
    }
    throw std::logic_error("unknown dataset name");
}

namespace detail {

// Inverse of DatasetRef::canonical(); root_path is intentionally absent.
inline DatasetRef dataset_ref_from_canonical(const std::vector<std::string>& tok) {
    if (tok.size() < 4) throw std::invalid_argument("malformed dataset field");
    DatasetRef ref;
    ref.name = dataset_name_from(tok[0]);
    ref.split = split_from(tok[1]);
    ref.num_classes = static_cast<int>(parse_int(tok[2]));
    ref.size = parse_int(tok[3]);
    if (tok.size() > 4) {
        if (tok[4] != "synth" || tok.size() != 15)
            throw std::invalid_argument("malformed synthetic dataset field");
        SyntheticSpec s;
        s.classes = static_cast<int>(parse_int(tok[5]));
        s.channels = static_cast<int>(parse_int(tok[6]));
        s.height = static_cast<int>(parse_int(tok[7]));
        s.width = static_cast<int>(parse_int(tok[8]));
        s.train_size = parse_int(tok[9]);
        s.test_size = parse_int(tok[10]);
        s.gen_seed = parse_int(tok[11]);
        s.noise = static_cast<float>(parse_real(tok[12]));
        s.strength_lo = static_cast<float>(parse_real(tok[13]));
        s.strength_hi = static_cast<float>(parse_real(tok[14]));
        ref.synthetic = s;
    }
    return ref;
}

inline float bilinear_grid(const std::vector<float>& grid, int gn, float fy, float fx) {
    const float gy = fy * static_cast<float>(gn - 1);
    const float gx = fx * static_cast<float>(gn - 1);
    const int y0 = static_cast<int>(gy), x0 = static_cast<int>(gx);
    const int y1 = std::min(y0 + 1, gn - 1), x1 = std::min(x0 + 1, gn - 1);
    const float ty = gy - static_cast<float>(y0), tx = gx - static_cast<float>(x0);
    const float a = grid[static_cast<std::size_t>(y0) * gn + x0];
    const float b = grid[static_cast<std::size_t>(y0) * gn + x1];
    const float c = grid[static_cast<std::size_t>(y1) * gn + x0];
    const float d = grid[static_cast<std::size_t>(y1) * gn + x1];
    return (a * (1 - tx) + b * tx) * (1 - ty) + (c * (1 - tx) + d * tx) * ty;
}

// Smooth random pattern: coarse 4x4 grid upsampled bilinearly per channel.
inline Image random_prototype(int c, int h, int w, RngStream& rng) {
    constexpr int kGrid = 4;
    Image proto(c, h, w);
    for (int ch = 0; ch < c; ++ch) {
        std::vector<float> grid(kGrid * kGrid);
        for (auto& g : grid) g = rng.uniform_f(0.0f, 1.0f);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                proto.at(ch, y, x) = bilinear_grid(grid, kGrid,
                                                   static_cast<float>(y) / (h - 1),
                                                   static_cast<float>(x) / (w - 1));
    }
    return proto;
}

inline Dataset generate_synthetic(const DatasetRef& ref) {
    if (!ref.synthetic) throw std::invalid_argument("synthetic dataset needs a SyntheticSpec");
    const SyntheticSpec& s = *ref.synthetic;
    if (ref.num_classes != s.classes)
        throw std::invalid_argument("synthetic: num_classes disagrees with spec");
    const std::int64_t n = ref.split == Split::train ? s.train_size : s.test_size;

    auto proto_rng = derive_rng(s.gen_seed, "synthetic/prototypes");
    std::vector<Image> protos;
    protos.reserve(static_cast<std::size_t>(s.classes));
    for (int c = 0; c < s.classes; ++c)
        protos.push_back(random_prototype(s.channels, s.height, s.width, proto_rng));

    auto rng = derive_rng(s.gen_seed, "synthetic/" + to_string(ref.split));
    const std::size_t rec = static_cast<std::size_t>(s.channels) * s.height * s.width;
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(n) * rec);
    std::vector<std::int32_t> labels(static_cast<std::size_t>(n));

    for (std::int64_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(i % s.classes);  // exact class balance
        labels[static_cast<std::size_t>(i)] = cls;
        const Image& proto = protos[static_cast<std::size_t>(cls)];
        const float strength = rng.uniform_f(s.strength_lo, s.strength_hi);
        const float bg = rng.uniform_f(0.35f, 0.65f);
        auto* dst = pixels.data() + static_cast<std::size_t>(i) * rec;
        for (std::size_t p = 0; p < rec; ++p) {
            const float v = bg + strength * (proto.data[p] - 0.5f) +
                            s.noise * static_cast<float>(rng.normal());
            const float q = std::clamp(v, 0.0f, 1.0f);
            dst[p] = static_cast<std::uint8_t>(std::lround(q * 255.0f));
        }
    }

    DatasetRef resolved = ref;
    resolved.size = n;
    return Dataset(resolved, s.channels, s.height, s.width, std::move(pixels), std::move(labels));
}

inline void append_cifar_file(const std::filesystem::path& path, int label_bytes, int fine_label_pos,
                              int num_classes, std::vector<std::uint8_t>& pixels,
                              std::vector<std::int32_t>& labels) {
    const Bytes raw = read_file(path);
    const std::size_t rec = static_cast<std::size_t>(label_bytes) + 3072;
    if (raw.size() % rec != 0)
        throw std::runtime_error("corrupt CIFAR file (size not a record multiple): " + path.string());
    const std::size_t n = raw.size() / rec;
    for (std::size_t i = 0; i < n; ++i) {
        const auto* r = raw.data() + i * rec;
        const int label = r[fine_label_pos];
        if (label < 0 || label >= num_classes)
            throw std::runtime_error("CIFAR label out of range in " + path.string());
        labels.push_back(label);
        pixels.insert(pixels.end(), r + label_bytes, r + rec);
    }
}

inline Dataset load_cifar(const DatasetRef& ref) {
    std::vector<std::uint8_t> pixels;
    std::vector<std::int32_t> labels;
    const auto& root = ref.root_path;
    if (ref.name == DatasetName::cifar10) {
        if (ref.split == Split::train) {
            for (int b = 1; b <= 5; ++b)
                append_cifar_file(root / ("data_batch_" + std::to_string(b) + ".bin"), 1, 0, 10,
                                  pixels, labels);
        } else {
            append_cifar_file(root / "test_batch.bin", 1, 0, 10, pixels, labels);
        }
    } else {
        append_cifar_file(root / (ref.split == Split::train ? "train.bin" : "test.bin"), 2, 1, 100,
                          pixels, labels);
    }
    return Dataset(ref, 3, 32, 32, std::move(pixels), std::move(labels));
}

// Packed dataset container ("PBD1"): u32 num_classes, u32 N, u32 c/h/w,
// N u32 labels, then N*c*h*w u8 CHW pixels. Tiny-ImageNet ships as two of
// these (train.pbd / test.pbd) produced by any external converter.
inline Dataset load_packed(const DatasetRef& ref) {
    const auto path = ref.root_path / (to_string(ref.split) + ".pbd");
    const Bytes raw = read_file(path);
    ByteReader r(raw);
    const auto magic = r.raw(4);
    if (!(magic[0] == 'P' && magic[1] == 'B' && magic[2] == 'D' && magic[3] == '1'))
        throw std::runtime_error("not a PBD1 dataset file: " + path.string());
    const int num_classes = static_cast<int>(r.u32());
    const auto n = static_cast<std::int64_t>(r.u32());
    const int c = static_cast<int>(r.u32());
    const int h = static_cast<int>(r.u32());
    const int w = static_cast<int>(r.u32());
    if (num_classes != ref.num_classes)
        throw std::runtime_error("packed dataset class count mismatch: " + path.string());
    std::vector<std::int32_t> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<std::int32_t>(r.u32());
    const std::size_t total = static_cast<std::size_t>(n) * c * h * w;
    const auto span = r.raw(total);
    return Dataset(ref, c, h, w, std::vector<std::uint8_t>(span.begin(), span.end()),
                   std::move(labels));
}

}  // namespace detail

inline Dataset load_dataset(const DatasetRef& ref) {
    switch (ref.name) {
        case DatasetName::synthetic: return detail::generate_synthetic(ref);
        case DatasetName::cifar10:
        case DatasetName::cifar100: return detail::load_cifar(ref);
        case DatasetName::tiny_imagenet: return detail::load_packed(ref);
    }
    throw std::logic_error("unknown dataset name");
}

}  // namespace pbench

#endif  // PBENCH_CORE_DATASET_HPP
