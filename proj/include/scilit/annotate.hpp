#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scilit/corpus.hpp"
#include "scilit/error.hpp"

namespace scilit::annotate {

class RankDeficiency : public Error {
public:
    using Error::Error;
};

class TooFewPoints : public Error {
public:
    using Error::Error;
};

class UnlabeledCluster : public Error {
public:
    UnlabeledCluster(const std::string& msg, std::vector<uint32_t> ids)
        : Error(msg), cluster_ids(std::move(ids)) {}
    std::vector<uint32_t> cluster_ids;
};

// --- embeddings -----------------------------------------------------------------

struct EmbeddingMatrix {
    std::vector<std::string> ids;  // one per row, row order
    size_t dims = 0;
    std::vector<double> values;  // row-major, ids.size() * dims

    size_t rows() const { return ids.size(); }
    std::span<const double> row(size_t i) const { return {values.data() + i * dims, dims}; }
};

// Fixed-dimension embedding of a pair record. Implementations must be pure:
// the same record always yields the same vector.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual size_t dimension() const = 0;
    virtual std::vector<double> embed(const corpus::PairRecord& record) const = 0;
};

// Deterministic stand-in for a neural image encoder, for tests and desk-scale
// pipelines. The vector for a record is fully specified:
//   state  = SplitMix64 seeded with mix_seed(seed, fnv1a64(pair_id))
//   v[j]   = 2 * u_j - 1 with u_j the j-th next_double() draw
//   output = v / ||v||2
class HashEmbedder : public Embedder {
public:
    explicit HashEmbedder(size_t dimension = 64, uint64_t seed = 0)
        : dimension_(dimension), seed_(seed) {}

    size_t dimension() const override { return dimension_; }
    std::vector<double> embed(const corpus::PairRecord& record) const override;

private:
    size_t dimension_;
    uint64_t seed_;
};

// One row per pair in input order. Throws DimensionMismatch when the
// embedder yields a vector whose size differs from its declared dimension.
EmbeddingMatrix embed(std::span<const corpus::PairRecord> pairs, const Embedder& embedder);

// f32 container on disk (see docs/formats.md); ids stored in <path>.keys.json.
void save_embeddings(const std::filesystem::path& path, const EmbeddingMatrix& matrix);
EmbeddingMatrix load_embeddings(const std::filesystem::path& path, size_t chunk_size = 0);

// --- PCA ------------------------------------------------------------------------

struct PcaModel {
    std::vector<double> mean;                // D
    size_t input_dims = 0;                   // D
    size_t n_components = 0;                 // C
    std::vector<double> components;          // C x D row-major, orthonormal rows
    std::vector<double> explained_variance;  // C, non-increasing

    std::span<const double> component(size_t i) const {
        return {components.data() + i * input_dims, input_dims};
    }
    // (X - mean) * components^T, row by row.
    EmbeddingMatrix project(const EmbeddingMatrix& X) const;
    // projected * components + mean.
    EmbeddingMatrix reconstruct(const EmbeddingMatrix& projected,
                                std::span<const std::string> ids) const;
};

// Top-C eigenvectors of the sample covariance, eigenvalues in descending
// order. Deterministic sign convention: the largest-magnitude entry of each
// component is made positive (first such entry on magnitude ties).
// Throws RankDeficiency when N < n_components.
PcaModel fit_pca(const EmbeddingMatrix& X, size_t n_components = 25);

// --- K-means ----------------------------------------------------------------------

struct Clustering {
    size_t k = 0;
    size_t dims = 0;
    std::vector<double> centroids;     // k x dims row-major
    std::vector<std::string> ids;      // canonical (sorted) order
    std::vector<uint32_t> assignment;  // aligned with ids
    double inertia = 0;
    std::vector<double> inertia_history;  // one entry per Lloyd iteration

    std::vector<std::vector<std::string>> members_by_cluster() const;
    nlohmann::json to_json() const;
    static Clustering from_json(const nlohmann::json& j);
};

// Lloyd iterations from k-means++ seeding with an explicit 64-bit generator.
// Rows are first put into canonical order (sorted by id), which makes the
// result invariant to input row permutation for a given seed. Ties: nearest
// centroid by lowest index; k-means++ weighted draws by cumulative sum.
// Empty clusters are re-seeded from the point farthest from its centroid.
// Stops when the relative inertia improvement drops below rel_tol.
// Throws TooFewPoints when N < k.
Clustering kmeans(const EmbeddingMatrix& X, size_t k, uint64_t seed, size_t max_iters = 100,
                  double rel_tol = 1e-6);

// --- annotation sheets ---------------------------------------------------------------

struct AnnotationSheet {
    uint32_t cluster_id = 0;
    std::vector<std::string> sampled_pair_ids;
    std::optional<corpus::AnnotationLabels> assigned_labels;

    nlohmann::json to_json() const;
    static AnnotationSheet from_json(const nlohmann::json& j);
};

// One sheet per non-empty cluster with min(|cluster|, sample_size) members
// drawn without replacement; per-cluster generator derived from (seed,
// cluster_id) so sheets do not depend on cluster iteration order.
std::vector<AnnotationSheet> make_sheets(const Clustering& clustering, size_t sample_size = 30,
                                         uint64_t seed = 0);

// Every pair in a labeled cluster receives that cluster's labels. Throws
// UnlabeledCluster (listing the offending ids) when any non-empty cluster
// lacks a sheet with assigned labels.
std::map<std::string, corpus::AnnotationLabels> propagate_labels(
    const Clustering& clustering, std::span<const AnnotationSheet> sheets);

}  // namespace scilit::annotate
