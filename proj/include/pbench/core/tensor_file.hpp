#ifndef PBENCH_CORE_TENSOR_FILE_HPP
#define PBENCH_CORE_TENSOR_FILE_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbench/core/bytes.hpp"

namespace pbench {

// Portable binary tensor container: "PBT1" magic, u32 rank, u32 dims, f32
// little-endian payload. Used for UAP perturbations, blend/patch images,
// similarity tables, and model weights.
struct TensorBlob {
    std::vector<std::uint32_t> dims;
    std::vector<float> values;

    std::size_t count() const {
        std::size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

inline Bytes encode_tensor(const TensorBlob& t) {
    if (t.count() != t.values.size()) throw std::invalid_argument("tensor dims/value mismatch");
    Bytes out;
    out.reserve(8 + 4 * t.dims.size() + 4 * t.values.size());
    out.insert(out.end(), {'P', 'B', 'T', '1'});
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    for (float v : t.values) put_f32(out, v);
    return out;
}

inline TensorBlob decode_tensor(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto magic = r.raw(4);
    if (!(magic[0] == 'P' && magic[1] == 'B' && magic[2] == 'T' && magic[3] == '1'))
        throw std::runtime_error("not a PBT1 tensor blob");
    TensorBlob t;
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw std::runtime_error("tensor rank too large");
    t.dims.resize(rank);
    for (auto& d : t.dims) d = r.u32();
    t.values.resize(t.count());
    for (auto& v : t.values) v = r.f32();
    return t;
}

// Named-tensor bundle ("PBW1") for persisting model parameters.
struct WeightBundle {
    std::vector<std::pair<std::string, TensorBlob>> tensors;
};

inline Bytes encode_weights(const WeightBundle& w) {
    Bytes out;
    out.insert(out.end(), {'P', 'B', 'W', '1'});
    put_u32(out, static_cast<std::uint32_t>(w.tensors.size()));
    for (const auto& [name, blob] : w.tensors) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out.insert(out.end(), name.begin(), name.end());
        const Bytes enc = encode_tensor(blob);
        put_u64(out, enc.size());
        out.insert(out.end(), enc.begin(), enc.end());
    }
    return out;
}

inline WeightBundle decode_weights(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    const auto magic = r.raw(4);
    if (!(magic[0] == 'P' && magic[1] == 'B' && magic[2] == 'W' && magic[3] == '1'))
        throw std::runtime_error("not a PBW1 weight bundle");
    WeightBundle w;
    const std::uint32_t n = r.u32();
    w.tensors.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t name_len = r.u32();
        const auto name_bytes = r.raw(name_len);
        std::string name(reinterpret_cast<const char*>(name_bytes.data()), name_len);
        const std::uint64_t blob_len = r.u64();
        w.tensors.emplace_back(std::move(name), decode_tensor(r.raw(blob_len)));
    }
    return w;
}

}  // namespace pbench

#endif  // PBENCH_CORE_TENSOR_FILE_HPP
