#include "scilit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scilit/csv.hpp"
#include "scilit/text.hpp"

namespace scilit::eval {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void check_unit_rows(const std::vector<double>& values, size_t n, size_t dims,
                     const char* what) {
    for (size_t i = 0; i < n; ++i) {
        double norm_sq = 0;
        for (size_t d = 0; d < dims; ++d) {
            const double v = values[i * dims + d];
            norm_sq += v * v;
        }
        if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-6)
            throw InvalidArgument(std::string(what) + " row " + std::to_string(i) +
                                  " is not unit-norm");
    }
}

double log_sum_exp(std::span<const double> values) {
    const double max_v = *std::max_element(values.begin(), values.end());
    double acc = 0;
    for (double v : values) acc += std::exp(v - max_v);
    return max_v + std::log(acc);
}

}  // namespace

InfoNceLoss infonce_loss(const ContrastiveBatch& batch) {
    if (batch.tau <= 0) throw NonPositiveTemperature("tau must be positive");
    if (batch.n == 0) throw InvalidArgument("infonce_loss: empty batch");
    if (batch.z_image.size() != batch.n * batch.dims ||
        batch.z_text.size() != batch.n * batch.dims)
        throw DimensionMismatch("infonce_loss: embedding buffers do not match n x dims");
    check_unit_rows(batch.z_image, batch.n, batch.dims, "z_image");
    check_unit_rows(batch.z_text, batch.n, batch.dims, "z_text");

    const size_t n = batch.n;
    // S[k][j] = sim(image_k, text_j) / tau; S'[k][j] = sim(text_k, image_j) / tau
    std::vector<double> s_row(n);
    double loss_i = 0, loss_t = 0;
    for (size_t k = 0; k < n; ++k) {
        for (size_t j = 0; j < n; ++j)
            s_row[j] = dot(batch.image_row(k), batch.text_row(j)) / batch.tau;
        loss_i += log_sum_exp(s_row) - s_row[k];
    }
    for (size_t k = 0; k < n; ++k) {
        for (size_t j = 0; j < n; ++j)
            s_row[j] = dot(batch.text_row(k), batch.image_row(j)) / batch.tau;
        loss_t += log_sum_exp(s_row) - s_row[k];
    }

    InfoNceLoss out;
    out.image_to_text = loss_i / static_cast<double>(n);
    out.text_to_image = loss_t / static_cast<double>(n);
    out.total = 0.5 * (out.image_to_text + out.text_to_image);
    return out;
}

size_t closed_vqa_predict(const ClosedVqaInstance& instance) {
    const size_t m = instance.n_candidates;
    if (m < 2) throw InvalidArgument("closed VQA needs at least 2 candidates");
    const size_t d = instance.image_embedding.size();
    if (instance.candidate_embeddings.size() != m * d)
        throw DimensionMismatch("candidate embeddings do not match m x d");

    size_t best = 0;
    double best_sim = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < m; ++j) {
        const double sim = dot(instance.image_embedding,
                               {instance.candidate_embeddings.data() + j * d, d});
        if (sim > best_sim) {
            best_sim = sim;
            best = j;
        }
    }
    return best;
}

double classification_accuracy(std::span<const std::vector<ClosedVqaInstance>> variants,
                               size_t expected_variants) {
    if (variants.size() != expected_variants)
        throw VariantCountMismatch("expected " + std::to_string(expected_variants) +
                                   " caption variants, got " + std::to_string(variants.size()));
    for (const auto& v : variants)
        if (v.size() != variants.front().size())
            throw VariantCountMismatch("variants carry different instance counts");
    if (variants.front().empty()) throw InvalidArgument("no instances to score");

    double acc_sum = 0;
    for (const auto& variant : variants) {
        size_t correct = 0;
        for (const auto& instance : variant)
            if (closed_vqa_predict(instance) == instance.correct_index) ++correct;
        acc_sum += static_cast<double>(correct) / static_cast<double>(variant.size());
    }
    return acc_sum / static_cast<double>(variants.size());
}

double recall_at_k(const RetrievalSet& set, size_t k, Direction direction) {
    if (k == 0) throw InvalidArgument("recall_at_k: k must be >= 1");
    if (set.n == 0) throw InvalidArgument("recall_at_k: empty set");
    const auto& queries =
        direction == Direction::I2T ? set.image_embeddings : set.caption_embeddings;
    const auto& targets =
        direction == Direction::I2T ? set.caption_embeddings : set.image_embeddings;

    size_t hits = 0;
    std::vector<double> sims(set.n);
    for (size_t q = 0; q < set.n; ++q) {
        const std::span<const double> query{queries.data() + q * set.dims, set.dims};
        for (size_t t = 0; t < set.n; ++t)
            sims[t] = dot(query, {targets.data() + t * set.dims, set.dims});
        // rank of the true match: targets strictly more similar, plus
        // equally-similar targets with a lower index (ties to lowest index)
        size_t rank = 0;
        for (size_t t = 0; t < set.n; ++t) {
            if (t == q) continue;
            if (sims[t] > sims[q] || (sims[t] == sims[q] && t < q)) ++rank;
        }
        if (rank < k) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(set.n);
}

double exact_match_accuracy(std::span<const std::string> predictions,
                            std::span<const std::string> references) {
    if (predictions.size() != references.size())
        throw LengthMismatch("predictions and references differ in length");
    if (predictions.empty()) throw InvalidArgument("nothing to score");
    size_t matches = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (text::normalize_answer(predictions[i]) == text::normalize_answer(references[i]))
            ++matches;
    return static_cast<double>(matches) / static_cast<double>(predictions.size());
}

double causal_lm_loss(std::span<const double> probabilities) {
    if (probabilities.empty()) throw InvalidArgument("causal_lm_loss: empty sequence");
    double loss = 0;
    for (double p : probabilities) {
        if (p <= 0) throw ZeroProbability("token probability must be in (0, 1]");
        if (p > 1) throw InvalidArgument("token probability exceeds 1");
        loss -= std::log(p);
    }
    return loss;
}

ScoreSheetSummary aggregate_score_sheets(std::string_view csv_bytes) {
    const auto rows = csv::parse(csv_bytes);
    if (rows.empty()) throw InvalidArgument("score sheet: empty input");
    const auto& header = rows.front();
    auto col = [&](std::string_view name) -> size_t {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw InvalidArgument("score sheet: missing column " + std::string(name));
    };
    const size_t c_eval = col("evaluator");
    const size_t c_correct = col("correct");
    col("question_id");

    std::map<std::string, std::pair<size_t, size_t>> tallies;  // evaluator -> (correct, total)
    size_t correct_total = 0, total = 0;
    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& cells = rows[i];
        if (cells.size() <= std::max(c_eval, c_correct)) continue;
        const auto& raw = cells[c_correct];
        bool correct;
        if (raw == "1" || raw == "true" || raw == "yes") correct = true;
        else if (raw == "0" || raw == "false" || raw == "no") correct = false;
        else throw InvalidArgument("score sheet: bad correct value '" + raw + "'");
        auto& [c, t] = tallies[cells[c_eval]];
        if (correct) ++c;
        ++t;
        if (correct) ++correct_total;
        ++total;
    }
    if (total == 0) throw InvalidArgument("score sheet: no data rows");

    ScoreSheetSummary summary;
    summary.total_rows = total;
    summary.overall = static_cast<double>(correct_total) / static_cast<double>(total);
    for (const auto& [evaluator, ct] : tallies)
        summary.per_evaluator[evaluator] =
            static_cast<double>(ct.first) / static_cast<double>(ct.second);
    return summary;
}

}  // namespace scilit::eval
