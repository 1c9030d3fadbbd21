#ifndef PBENCH_TRIGGERS_TRIGGER_HPP
#define PBENCH_TRIGGERS_TRIGGER_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include "pbench/core/artifact_store.hpp"
#include "pbench/core/hash.hpp"
#include "pbench/core/image.hpp"
#include "pbench/core/rng.hpp"
#include "pbench/core/tensor_file.hpp"
#include "pbench/core/text.hpp"

namespace pbench {

struct BadnetsPatch {
    Image patch;  // stamped verbatim; pixels outside stay bit-identical
    int top = 0;
    int left = 0;
};

struct Blended {
    Image blend;  // trigger image t in x' = lambda*t + (1-lambda)*x
    float lambda = 0.15f;
};

struct OptimizedUap {
    Image perturbation;  // delta, |delta|_inf <= linf_bound
    float linf_bound = 8.0f / 255.0f;
};

struct PluginTrigger {
    std::string plugin_id;
};

enum class TriggerKind { badnets_patch, blended, optimized_uap, plugin };

struct TriggerSpec {
    std::variant<BadnetsPatch, Blended, OptimizedUap, PluginTrigger> params;

    TriggerKind kind() const { return static_cast<TriggerKind>(params.index()); }
};

inline std::string to_string(TriggerKind k) {
    switch (k) {
        case TriggerKind::badnets_patch: return "badnets";
        case TriggerKind::blended: return "blended";
        case TriggerKind::optimized_uap: return "uap";
        case TriggerKind::plugin: return "plugin";
    }
    throw std::logic_error("unknown trigger kind");
}

// Out-of-scope trigger families (ISSBA, WaNet, BATT, ...) plug in here.
// Registered functions must be pure in (image, id).
class TriggerPluginRegistry {
  public:
    using Fn = std::function<Image(const Image&)>;

    static TriggerPluginRegistry& instance() {
        static TriggerPluginRegistry reg;
        return reg;
    }

    void register_plugin(const std::string& id, Fn fn) { plugins_[id] = std::move(fn); }

    const Fn& lookup(const std::string& id) const {
        const auto it = plugins_.find(id);
        if (it == plugins_.end()) throw std::invalid_argument("unknown trigger plugin: " + id);
        return it->second;
    }

  private:
    std::map<std::string, Fn> plugins_;
};

inline void validate_trigger(const TriggerSpec& spec, int channels, int height, int width) {
    switch (spec.kind()) {
        case TriggerKind::badnets_patch: {
            const auto& p = std::get<BadnetsPatch>(spec.params);
            if (p.patch.channels != channels)
                throw std::invalid_argument("badnets patch channel mismatch");
            if (p.top < 0 || p.left < 0 || p.top + p.patch.height > height ||
                p.left + p.patch.width > width)
                throw std::invalid_argument("badnets patch exceeds image bounds");
            break;
        }
        case TriggerKind::blended: {
            const auto& b = std::get<Blended>(spec.params);
            if (b.lambda < 0.0f || b.lambda > 1.0f)
                throw std::invalid_argument("blended lambda must lie in [0,1]");
            if (b.blend.channels != channels || b.blend.height != height || b.blend.width != width)
                throw std::invalid_argument("blend image shape mismatch");
            break;
        }
        case TriggerKind::optimized_uap: {
            const auto& u = std::get<OptimizedUap>(spec.params);
            if (u.linf_bound <= 0.0f) throw std::invalid_argument("uap linf bound must be positive");
            if (u.perturbation.channels != channels || u.perturbation.height != height ||
                u.perturbation.width != width)
                throw std::invalid_argument("uap perturbation shape mismatch");
            break;
        }
        case TriggerKind::plugin: break;
    }
}

struct PoisonedImage {
    Image pixels;
    std::int64_t source_index = -1;
    std::string trigger_ref;
};

namespace detail {

inline TensorBlob image_blob(const Image& img) {
    return TensorBlob{{static_cast<std::uint32_t>(img.channels),
                       static_cast<std::uint32_t>(img.height),
                       static_cast<std::uint32_t>(img.width)},
                      img.data};
}

inline Image image_from_blob(const TensorBlob& t) {
    if (t.dims.size() != 3) throw std::runtime_error("image tensor must be rank 3");
    Image img(static_cast<int>(t.dims[0]), static_cast<int>(t.dims[1]),
              static_cast<int>(t.dims[2]));
    img.data = t.values;
    return img;
}

inline std::string image_hash(const Image& img) {
    const Bytes enc = encode_tensor(image_blob(img));
    return sha256_hex(enc);
}

}  // namespace detail

// Canonical one-line form; tensor payloads are referenced by content hash so
// the line (and everything hashed from it) is independent of storage paths.
inline std::string trigger_canonical_line(const TriggerSpec& spec) {
    switch (spec.kind()) {
        case TriggerKind::badnets_patch: {
            const auto& p = std::get<BadnetsPatch>(spec.params);
            return "badnets " + std::to_string(p.top) + " " + std::to_string(p.left) + " " +
                   detail::image_hash(p.patch);
        }
        case TriggerKind::blended: {
            const auto& b = std::get<Blended>(spec.params);
            return "blended " + format_real(b.lambda) + " " + detail::image_hash(b.blend);
        }
        case TriggerKind::optimized_uap: {
            const auto& u = std::get<OptimizedUap>(spec.params);
            return "uap " + format_real(u.linf_bound) + " " + detail::image_hash(u.perturbation);
        }
        case TriggerKind::plugin:
            return "plugin " + std::get<PluginTrigger>(spec.params).plugin_id;
    }
    throw std::logic_error("unknown trigger kind");
}

inline std::string trigger_hash(const TriggerSpec& spec) {
    return sha256_hex(trigger_canonical_line(spec));
}

inline void persist_trigger_tensors(const TriggerSpec& spec, ArtifactStore& store) {
    switch (spec.kind()) {
        case TriggerKind::badnets_patch:
            store.put(encode_tensor(detail::image_blob(std::get<BadnetsPatch>(spec.params).patch)));
            break;
        case TriggerKind::blended:
            store.put(encode_tensor(detail::image_blob(std::get<Blended>(spec.params).blend)));
            break;
        case TriggerKind::optimized_uap:
            store.put(
                encode_tensor(detail::image_blob(std::get<OptimizedUap>(spec.params).perturbation)));
            break;
        case TriggerKind::plugin: break;
    }
}

inline TriggerSpec trigger_from_line(const std::string& line, const ArtifactStore& store) {
    const auto tok = split_ws(line);
    if (tok.empty()) throw std::invalid_argument("empty trigger line");
    auto fetch_image = [&](const std::string& hash) {
        return detail::image_from_blob(decode_tensor(store.get(hash)));
    };
    if (tok[0] == "badnets" && tok.size() == 4) {
        BadnetsPatch p;
        p.top = static_cast<int>(parse_int(tok[1]));
        p.left = static_cast<int>(parse_int(tok[2]));
        p.patch = fetch_image(tok[3]);
        return TriggerSpec{p};
    }
    if (tok[0] == "blended" && tok.size() == 3) {
        Blended b;
        b.lambda = static_cast<float>(parse_real(tok[1]));
        b.blend = fetch_image(tok[2]);
        return TriggerSpec{b};
    }
    if (tok[0] == "uap" && tok.size() == 3) {
        OptimizedUap u;
        u.linf_bound = static_cast<float>(parse_real(tok[1]));
        u.perturbation = fetch_image(tok[2]);
        return TriggerSpec{u};
    }
    if (tok[0] == "plugin" && tok.size() == 2) return TriggerSpec{PluginTrigger{tok[1]}};
    throw std::invalid_argument("malformed trigger line: " + line);
}

// x' = T(x, t). Pure in (image, spec); output clipped to [0,1].
inline PoisonedImage apply_trigger(const Image& image, const TriggerSpec& spec,
                                   std::int64_t source_index = -1) {
    validate_trigger(spec, image.channels, image.height, image.width);
    PoisonedImage out;
    out.source_index = source_index;
    out.trigger_ref = trigger_hash(spec);
    switch (spec.kind()) {
        case TriggerKind::badnets_patch: {
            const auto& p = std::get<BadnetsPatch>(spec.params);
            out.pixels = image;
            for (int c = 0; c < image.channels; ++c)
                for (int y = 0; y < p.patch.height; ++y)
                    for (int x = 0; x < p.patch.width; ++x)
                        out.pixels.at(c, p.top + y, p.left + x) = p.patch.at(c, y, x);
            break;
        }
        case TriggerKind::blended: {
            const auto& b = std::get<Blended>(spec.params);
            out.pixels = Image(image.channels, image.height, image.width);
            for (std::size_t i = 0; i < image.data.size(); ++i)
                out.pixels.data[i] = b.lambda * b.blend.data[i] + (1.0f - b.lambda) * image.data[i];
            break;
        }
        case TriggerKind::optimized_uap: {
            const auto& u = std::get<OptimizedUap>(spec.params);
            out.pixels = Image(image.channels, image.height, image.width);
            for (std::size_t i = 0; i < image.data.size(); ++i)
                out.pixels.data[i] = image.data[i] + u.perturbation.data[i];
            break;
        }
        case TriggerKind::plugin: {
            const auto& pl = std::get<PluginTrigger>(spec.params);
            out.pixels = TriggerPluginRegistry::instance().lookup(pl.plugin_id)(image);
            if (!out.pixels.same_shape(image))
                throw std::runtime_error("trigger plugin changed image shape");
            break;
        }
    }
    out.pixels.clip01();
    return out;
}

// 3x3 checkerboard stamped at the bottom-right corner.
inline TriggerSpec default_badnets(int channels, int height, int width, int patch_size = 3) {
    Image patch(channels, patch_size, patch_size);
    for (int c = 0; c < channels; ++c)
        for (int y = 0; y < patch_size; ++y)
            for (int x = 0; x < patch_size; ++x)
                patch.at(c, y, x) = ((y + x) % 2 == 0) ? 1.0f : 0.0f;
    BadnetsPatch p;
    p.patch = std::move(patch);
    p.top = height - patch_size;
    p.left = width - patch_size;
    return TriggerSpec{p};
}

// Fixed noise blend image shipped procedurally; overridable by loading any
// image tensor instead.
inline TriggerSpec default_blended(int channels, int height, int width, float lambda = 0.15f) {
    auto rng = derive_rng(0xB1ED, "trigger/default-blend-noise");
    Blended b;
    b.lambda = lambda;
    b.blend = Image(channels, height, width);
    for (auto& v : b.blend.data) v = rng.uniform_f(0.0f, 1.0f);
    return TriggerSpec{b};
}

}  // namespace pbench

#endif  // PBENCH_TRIGGERS_TRIGGER_HPP
