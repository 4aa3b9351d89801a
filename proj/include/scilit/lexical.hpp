#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scilit/error.hpp"

namespace scilit::lexical {

struct Bm25Params {
    double k1 = 1.5;
    double b = 0.75;
    uint32_t min_df = 5;
};

// Smoothed IDF: ln(1 + (N - df + 0.5) / (df + 0.5)). Positive for df <= N.
double idf(uint64_t n_docs, uint64_t df);

// Per-(term, doc) partial score:
//   idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg_len))
double partial_score(double idf_value, uint64_t tf, uint64_t doc_len, double avg_doc_len,
                     const Bm25Params& params);

struct Vocabulary {
    std::vector<std::string> terms;     // term_id -> term, sorted lexicographically
    std::vector<uint32_t> doc_freq;     // term_id -> df (>= min_df)
    uint32_t min_df = 5;

    std::optional<uint32_t> id_of(std::string_view term) const;
    size_t size() const { return terms.size(); }
};

// Term-major sparse layout (CSC style): the postings of term t live in
// [offsets[t], offsets[t+1]), doc ids strictly increasing within a term.
// Scores are kept in doubles in memory and quantized to f32 on disk.
struct SparseScoreMatrix {
    std::vector<uint64_t> offsets;   // n_terms + 1
    std::vector<uint32_t> doc_ids;
    std::vector<double> scores;
    uint64_t n_docs = 0;
};

class LexicalIndex {
public:
    // Builds the pruned-vocabulary index with every partial score
    // precomputed. Document keys must be unique (DuplicateKey otherwise);
    // avg_doc_len is taken over all documents before pruning.
    static LexicalIndex build(std::span<const std::pair<std::string, std::string>> docs,
                              const Bm25Params& params = {});

    // Sum of precomputed partial scores over the query's in-vocabulary
    // tokens (each occurrence counts). Results sorted by score descending,
    // ties broken by ascending key, truncated to top_k. An all-OOV query
    // yields an empty result.
    std::vector<std::pair<std::string, double>> query(std::string_view text,
                                                      size_t top_k) const;

    const Vocabulary& vocabulary() const { return vocab_; }
    const SparseScoreMatrix& matrix() const { return matrix_; }
    const std::vector<std::string>& doc_keys() const { return doc_keys_; }
    const Bm25Params& params() const { return params_; }
    double avg_doc_len() const { return avg_doc_len_; }
    size_t doc_count() const { return doc_keys_.size(); }

    // On-disk layout in `dir`: vocab.json, matrix.bin, meta.json.
    void save(const std::filesystem::path& dir) const;
    static LexicalIndex load(const std::filesystem::path& dir, size_t chunk_size = 0);

private:
    Vocabulary vocab_;
    SparseScoreMatrix matrix_;
    std::vector<std::string> doc_keys_;
    Bm25Params params_;
    double avg_doc_len_ = 0;
};

}  // namespace scilit::lexical
