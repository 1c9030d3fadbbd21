#ifndef PBENCH_FEATURES_SIMILARITY_HPP
#define PBENCH_FEATURES_SIMILARITY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbench/core/artifact_store.hpp"
#include "pbench/core/dataset.hpp"
#include "pbench/core/tensor_file.hpp"
#include "pbench/core/text.hpp"
#include "pbench/features/extractor.hpp"
#include "pbench/triggers/trigger.hpp"

namespace pbench {

inline double cosine(const float* a, const float* b, int dim) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (int i = 0; i < dim; ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 2.0;  // sentinel: caller records the zero-norm warning
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    return c;
}

// s_i = cos(E(x_i), E(T(x_i, t))) for every record.
struct SimilarityTable {
    DatasetRef dataset;
    std::string trigger_hash;
    std::string extractor_id;
    std::vector<float> values;
    int zero_norm_count = 0;
};

inline void validate_similarity_table(const SimilarityTable& t) {
    if (static_cast<std::int64_t>(t.values.size()) != t.dataset.size)
        throw std::invalid_argument("similarity table: length != N");
    for (float v : t.values)
        if (!(v >= -1.0f && v <= 1.0f))
            throw std::invalid_argument("similarity table: value outside [-1, 1]");
}

inline SimilarityTable similarity_table(const Dataset& data, const TriggerSpec& trigger,
                                        const ExtractorHandle& extractor, int batch_size = 256) {
    validate_trigger(trigger, data.channels(), data.height(), data.width());
    const Normalization norm = standard_normalization(data.ref().name);
    SimilarityTable table;
    table.dataset = data.ref();
    table.trigger_hash = trigger_hash(trigger);
    table.extractor_id = extractor.id();
    table.values.resize(static_cast<std::size_t>(data.size()));

    for (std::int64_t begin = 0; begin < data.size(); begin += batch_size) {
        const auto end = std::min<std::int64_t>(begin + batch_size, data.size());
        std::vector<Image> clean, poisoned;
        clean.reserve(static_cast<std::size_t>(end - begin));
        poisoned.reserve(static_cast<std::size_t>(end - begin));
        for (std::int64_t i = begin; i < end; ++i) {
            Image img = data.image(i);
            poisoned.push_back(apply_trigger(img, trigger, i).pixels);
            clean.push_back(std::move(img));
        }
        const EmbedMatrix ec = embed(extractor, clean, norm);
        const EmbedMatrix ep = embed(extractor, poisoned, norm);
        for (std::int64_t i = begin; i < end; ++i) {
            const int r = static_cast<int>(i - begin);
            const double c = cosine(ec.row(r), ep.row(r), ec.cols);
            if (c > 1.5) {  // zero-norm sentinel
                table.values[static_cast<std::size_t>(i)] = 0.0f;
                ++table.zero_norm_count;
            } else {
                table.values[static_cast<std::size_t>(i)] = static_cast<float>(c);
            }
        }
    }
    validate_similarity_table(table);
    return table;
}

// Binary array blob plus a sidecar text header describing provenance.
inline std::string save_similarity_table(const SimilarityTable& table, ArtifactStore& store) {
    validate_similarity_table(table);
    const Bytes blob =
        encode_tensor(TensorBlob{{static_cast<std::uint32_t>(table.values.size())}, table.values});
    const std::string hash = store.put(blob);
    std::ostringstream header;
    header << "similarity-table v1\n";
    header << "dataset " << table.dataset.canonical() << '\n';
    header << "trigger " << table.trigger_hash << '\n';
    header << "extractor " << table.extractor_id << '\n';
    header << "zero_norm " << table.zero_norm_count << '\n';
    write_file(store.blob_path(hash).string() + ".meta", header.str());
    return hash;
}

inline SimilarityTable load_similarity_table(const std::string& hash, const ArtifactStore& store) {
    const TensorBlob blob = decode_tensor(store.get(hash));
    const Bytes header_raw = read_file(store.blob_path(hash).string() + ".meta");
    std::istringstream is(std::string(header_raw.begin(), header_raw.end()));
    std::string line;
    if (!std::getline(is, line) || line != "similarity-table v1")
        throw std::runtime_error("bad similarity table header");
    SimilarityTable table;
    while (std::getline(is, line)) {
        const auto sp = line.find(' ');
        if (sp == std::string::npos) continue;
        const std::string key = line.substr(0, sp), rest = line.substr(sp + 1);
        if (key == "dataset") table.dataset = detail::dataset_ref_from_canonical(split_ws(rest));
        else if (key == "trigger") table.trigger_hash = rest;
        else if (key == "extractor") table.extractor_id = rest;
        else if (key == "zero_norm") table.zero_norm_count = static_cast<int>(parse_int(rest));
    }
    table.values = blob.values;
    validate_similarity_table(table);
    return table;
}

}  // namespace pbench

#endif  // PBENCH_FEATURES_SIMILARITY_HPP
