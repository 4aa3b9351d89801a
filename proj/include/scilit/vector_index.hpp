#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scilit/annotate.hpp"
#include "scilit/error.hpp"
#include "scilit/lexical.hpp"

namespace scilit::vec {

class ZeroVector : public Error {
public:
    using Error::Error;
};

class EmptyQuery : public Error {
public:
    using Error::Error;
};

enum class Modality { IMAGE, CAPTION };

// Flat cosine index: rows stored unit-normalized, search is exhaustive and
// exact. Builds produce immutable snapshots safe for concurrent queries.
class VectorIndex {
public:
    static VectorIndex build(const annotate::EmbeddingMatrix& embeddings, Modality modality);

    // Exact top-k by cosine similarity, ties broken by ascending key. The
    // query is normalized internally; zero queries raise ZeroVector and a
    // wrong dimension raises DimensionMismatch.
    std::vector<std::pair<std::string, double>> knn(std::span<const double> query,
                                                    size_t k) const;

    size_t size() const { return keys_.size(); }
    size_t dims() const { return dims_; }
    Modality modality() const { return modality_; }
    const std::vector<std::string>& keys() const { return keys_; }
    std::span<const double> row(size_t i) const { return {values_.data() + i * dims_, dims_}; }

    // vectors.bin (f32 rows + checksum) and keys.json in `dir`. f32
    // quantization keeps row norms within 1e-6 of unit.
    void save(const std::filesystem::path& dir) const;
    static VectorIndex load(const std::filesystem::path& dir, size_t chunk_size = 0);

private:
    std::vector<std::string> keys_;
    std::vector<double> values_;  // row-major, unit rows
    size_t dims_ = 0;
    Modality modality_ = Modality::IMAGE;
};

// --- hybrid fusion ---------------------------------------------------------------

struct FusionConfig {
    double c = 60.0;            // reciprocal-rank constant
    double lexical_weight = 1.0;
    double vector_weight = 1.0;
};

struct HybridResult {
    std::string key;
    std::optional<size_t> lexical_rank;  // 1-based
    std::optional<size_t> vector_rank;   // 1-based
    double fused_score = 0;
};

// Reciprocal-rank fusion over the available components:
//   fused(key) = sum over present ranks of weight / (c + rank)
// With one component absent the output order equals the surviving ranking.
// Each component is queried at depth k; the fused list is sorted by score
// descending, ties by key, and truncated to k. Throws EmptyQuery when
// neither text nor query vector is given.
std::vector<HybridResult> hybrid_query(const lexical::LexicalIndex* lex,
                                       const VectorIndex* vindex,
                                       const std::optional<std::string>& text,
                                       const std::optional<std::vector<double>>& query_vector,
                                       size_t k, const FusionConfig& fusion = {});

}  // namespace scilit::vec
