#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "scilit/error.hpp"

namespace scilit::eval {

class NonPositiveTemperature : public Error {
public:
    using Error::Error;
};

class ZeroProbability : public Error {
public:
    using Error::Error;
};

class VariantCountMismatch : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

// --- InfoNCE -----------------------------------------------------------------

// N matched image/text embedding pairs, rows unit-norm (checked to 1e-6),
// with temperature tau > 0.
struct ContrastiveBatch {
    size_t n = 0;
    size_t dims = 0;
    std::vector<double> z_image;  // n x dims row-major
    std::vector<double> z_text;   // n x dims row-major
    double tau = 0.07;

    std::span<const double> image_row(size_t i) const { return {z_image.data() + i * dims, dims}; }
    std::span<const double> text_row(size_t i) const { return {z_text.data() + i * dims, dims}; }
};

struct InfoNceLoss {
    double image_to_text = 0;  // L_I
    double text_to_image = 0;  // L_T
    double total = 0;          // (L_I + L_T) / 2
};

// Temperature-scaled similarity matrix S[k][j] = sim(z_image_k, z_text_j)/tau
// with sim = cosine (dot product on unit rows); L_I and L_T are the mean
// negative log softmax of the diagonal of S and of its transpose-counterpart.
// Computed via log-sum-exp for stability.
InfoNceLoss infonce_loss(const ContrastiveBatch& batch);

// --- closed VQA ----------------------------------------------------------------

struct ClosedVqaInstance {
    std::vector<double> image_embedding;       // d, unit norm
    std::vector<double> candidate_embeddings;  // m x d row-major, unit norm
    size_t n_candidates = 0;
    size_t correct_index = 0;
};

// Index of the candidate with the highest cosine similarity to the image;
// ties resolve to the lowest index.
size_t closed_vqa_predict(const ClosedVqaInstance& instance);

// Mean over caption variants of per-variant accuracy. All variants must
// carry the same instances (equal counts) and the variant count must match
// expected_variants; VariantCountMismatch otherwise.
double classification_accuracy(std::span<const std::vector<ClosedVqaInstance>> variants,
                               size_t expected_variants = 2);

// --- retrieval -------------------------------------------------------------------

enum class Direction { I2T, T2I };

struct RetrievalSet {
    size_t n = 0;
    size_t dims = 0;
    std::vector<double> image_embeddings;    // n x dims
    std::vector<double> caption_embeddings;  // n x dims; row i pairs with image i
};

// For each query, targets are sorted by cosine descending (rank ties to the
// lowest index); a query scores a hit when its true match sits within the
// top k. Returns hits / n.
double recall_at_k(const RetrievalSet& set, size_t k, Direction direction);

// --- generation metrics --------------------------------------------------------------

// Both sides normalized (lowercase, punctuation deleted, whitespace
// collapsed) before comparison; accuracy = exact matches / total.
double exact_match_accuracy(std::span<const std::string> predictions,
                            std::span<const std::string> references);

// -sum(log p_t) over per-position probabilities in (0, 1].
double causal_lm_loss(std::span<const double> probabilities);

// --- human-judged score sheets ---------------------------------------------------------

// Aggregates clinician score sheets (CSV columns question_id, evaluator,
// correct with correct in {0,1,true,false,yes,no}); the judging itself
// happens elsewhere.
struct ScoreSheetSummary {
    std::map<std::string, double> per_evaluator;  // evaluator -> accuracy
    double overall = 0;
    size_t total_rows = 0;
};

ScoreSheetSummary aggregate_score_sheets(std::string_view csv_bytes);

}  // namespace scilit::eval
