#include "scilit/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_set>

#include <json.hpp>

#include "scilit/binfile.hpp"

namespace scilit::vec {

using nlohmann::json;

VectorIndex VectorIndex::build(const annotate::EmbeddingMatrix& embeddings, Modality modality) {
    VectorIndex index;
    index.modality_ = modality;
    index.dims_ = embeddings.dims;
    index.keys_ = embeddings.ids;
    index.values_.resize(embeddings.values.size());

    std::unordered_set<std::string> seen;
    for (const auto& key : index.keys_)
        if (!seen.insert(key).second) throw DuplicateKey("duplicate vector key: " + key);

    for (size_t i = 0; i < embeddings.rows(); ++i) {
        const auto row = embeddings.row(i);
        double norm_sq = 0;
        for (double v : row) norm_sq += v * v;
        if (norm_sq == 0)
            throw ZeroVector("zero vector for key: " + embeddings.ids[i]);
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (size_t d = 0; d < index.dims_; ++d)
            index.values_[i * index.dims_ + d] = row[d] * inv;
    }
    return index;
}

std::vector<std::pair<std::string, double>> VectorIndex::knn(std::span<const double> query,
                                                             size_t k) const {
    if (query.size() != dims_)
        throw DimensionMismatch("knn: query dimension " + std::to_string(query.size()) +
                                " != index dimension " + std::to_string(dims_));
    double norm_sq = 0;
    for (double v : query) norm_sq += v * v;
    if (norm_sq == 0) throw ZeroVector("knn: zero query vector");
    const double inv = 1.0 / std::sqrt(norm_sq);

    std::vector<double> cosines(keys_.size());
    for (size_t i = 0; i < keys_.size(); ++i) {
        const auto r = row(i);
        double dot = 0;
        for (size_t d = 0; d < dims_; ++d) dot += r[d] * query[d];
        cosines[i] = dot * inv;
    }

    std::vector<size_t> order(keys_.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    auto better = [&](size_t a, size_t b) {
        if (cosines[a] != cosines[b]) return cosines[a] > cosines[b];
        return keys_[a] < keys_[b];
    };
    const size_t take = std::min(k, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(take), order.end(),
                      better);

    std::vector<std::pair<std::string, double>> results;
    results.reserve(take);
    for (size_t i = 0; i < take; ++i) results.emplace_back(keys_[order[i]], cosines[order[i]]);
    return results;
}

void VectorIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::vector<float> values(values_.begin(), values_.end());
    binfile::write_matrix(dir / "vectors.bin", keys_.size(), dims_, values);
    json j;
    j["modality"] = modality_ == Modality::IMAGE ? "IMAGE" : "CAPTION";
    j["keys"] = keys_;
    std::ofstream out(dir / "keys.json", std::ios::trunc);
    if (!out) throw IoError("cannot write keys.json");
    out << j.dump() << "\n";
}

VectorIndex VectorIndex::load(const std::filesystem::path& dir, size_t chunk_size) {
    auto file = binfile::read_matrix(dir / "vectors.bin", chunk_size);
    json j;
    {
        std::ifstream in(dir / "keys.json");
        if (!in) throw IoError("cannot read keys.json in " + dir.string());
        in >> j;
    }
    VectorIndex index;
    index.modality_ = j.value("modality", "IMAGE") == "CAPTION" ? Modality::CAPTION
                                                                : Modality::IMAGE;
    index.keys_ = j.at("keys").get<std::vector<std::string>>();
    if (index.keys_.size() != file.rows)
        throw IoError("vectors.bin row count disagrees with keys.json");
    index.dims_ = file.cols;
    index.values_.assign(file.values.begin(), file.values.end());
    return index;
}

std::vector<HybridResult> hybrid_query(const lexical::LexicalIndex* lex,
                                       const VectorIndex* vindex,
                                       const std::optional<std::string>& text,
                                       const std::optional<std::vector<double>>& query_vector,
                                       size_t k, const FusionConfig& fusion) {
    if (!text && !query_vector) throw EmptyQuery("hybrid query needs text or a vector");
    if (text && !lex) throw InvalidArgument("text query given but no lexical index");
    if (query_vector && !vindex) throw InvalidArgument("vector query given but no vector index");
    if (k == 0) throw InvalidArgument("hybrid query: k must be >= 1");

    std::map<std::string, HybridResult> by_key;
    if (text) {
        const auto hits = lex->query(*text, k);
        for (size_t rank = 0; rank < hits.size(); ++rank) {
            auto& r = by_key[hits[rank].first];
            r.key = hits[rank].first;
            r.lexical_rank = rank + 1;
        }
    }
    if (query_vector) {
        const auto hits = vindex->knn(*query_vector, k);
        for (size_t rank = 0; rank < hits.size(); ++rank) {
            auto& r = by_key[hits[rank].first];
            r.key = hits[rank].first;
            r.vector_rank = rank + 1;
        }
    }

    std::vector<HybridResult> results;
    results.reserve(by_key.size());
    for (auto& [key, r] : by_key) {
        r.fused_score = 0;
        if (r.lexical_rank)
            r.fused_score += fusion.lexical_weight / (fusion.c + static_cast<double>(*r.lexical_rank));
        if (r.vector_rank)
            r.fused_score += fusion.vector_weight / (fusion.c + static_cast<double>(*r.vector_rank));
        results.push_back(std::move(r));
    }
    std::sort(results.begin(), results.end(), [](const HybridResult& a, const HybridResult& b) {
        if (a.fused_score != b.fused_score) return a.fused_score > b.fused_score;
        return a.key < b.key;
    });
    if (results.size() > k) results.resize(k);
    return results;
}

}  // namespace scilit::vec
