#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scilit/error.hpp"
#include "scilit/lexical.hpp"
#include "scilit/vector_index.hpp"

namespace scilit::rag {

class LlmError : public Error {
public:
    using Error::Error;
};

// --- LLM interface --------------------------------------------------------------

class LlmInterface {
public:
    virtual ~LlmInterface() = default;
    // Total: either returns the completion or throws LlmError; max_tokens
    // bounds the response length in whitespace tokens.
    virtual std::string complete(const std::string& prompt, size_t max_tokens) = 0;
    virtual size_t context_window() const = 0;  // prompt budget in tokens
};

// Deterministic mock keyed on the TASK tag in the first prompt line.
// QUERY_GENERATION returns the question text (or its canned mapping when one
// is set); SUMMARIZE/REFINE/FINAL_ANSWER return short digests derived from
// the prompt content. Same prompt, same output, always.
class MockLlm : public LlmInterface {
public:
    explicit MockLlm(size_t context_window = 4096) : window_(context_window) {}

    void set_query_mapping(std::map<std::string, std::string> mapping) {
        query_mapping_ = std::move(mapping);
    }
    // When set, throws LlmError on any prompt whose TASK tag matches (fault
    // injection for chain tests).
    void fail_on_task(const std::string& task_tag) { fail_task_ = task_tag; }

    std::string complete(const std::string& prompt, size_t max_tokens) override;
    size_t context_window() const override { return window_; }

private:
    size_t window_;
    std::map<std::string, std::string> query_mapping_;
    std::optional<std::string> fail_task_;
};

// Echoes the prompt back (truncated to max_tokens whitespace tokens).
class EchoLlm : public LlmInterface {
public:
    explicit EchoLlm(size_t context_window = 1 << 20) : window_(context_window) {}
    std::string complete(const std::string& prompt, size_t max_tokens) override;
    size_t context_window() const override { return window_; }

private:
    size_t window_;
};

// Adapter for an HTTP completion endpoint: POST {model, prompt, max_tokens}
// to `path`, expecting {"text": "..."} back.
struct HttpLlmConfig {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string path = "/complete";
    std::string model = "default";
    size_t context_window = 8192;
    int timeout_seconds = 60;
};

class HttpLlm : public LlmInterface {
public:
    explicit HttpLlm(HttpLlmConfig config) : config_(std::move(config)) {}
    std::string complete(const std::string& prompt, size_t max_tokens) override;
    size_t context_window() const override { return config_.context_window; }

private:
    HttpLlmConfig config_;
};

// --- prompts ---------------------------------------------------------------------

// Templates live in versioned text files; placeholders: {question},
// {article}, {summary}, {segment}, {summaries}.
struct PromptTemplates {
    std::string query_generation;
    std::string summarize;
    std::string refine;
    std::string final_answer;
    std::string insufficient_evidence;

    static PromptTemplates load(const std::filesystem::path& dir);
    static const PromptTemplates& builtin();  // compiled-in copy of prompts/
};

std::string render_template(std::string_view tpl,
                            const std::map<std::string, std::string>& slots);

// --- chain types ------------------------------------------------------------------

using TokenCounter = std::function<size_t(std::string_view)>;
size_t whitespace_tokens(std::string_view s);

using Clock = std::function<int64_t()>;  // microseconds
int64_t steady_clock_us();

enum class RefineStrategy { SEQUENTIAL, MAP_REDUCE };

struct StepTiming {
    std::string step;
    int64_t start_us = 0;
    int64_t end_us = 0;
};

struct ArticleSummary {
    std::string key;
    size_t chunk_count = 0;
    std::string summary;
};

struct RagTrace {
    std::string question;
    std::string generated_query;
    std::vector<std::string> retrieved;  // most to least relevant
    std::vector<ArticleSummary> per_article;
    std::string final_answer;
    std::vector<StepTiming> step_timings;
    std::optional<std::string> error;  // "<step>: <message>" when a step failed

    nlohmann::json to_json() const;
};

// Retrieval + article access used by the chain. fetch_article_text returns
// the full text for a retrieved key.
struct IndexHandles {
    const lexical::LexicalIndex* article_index = nullptr;
    const vec::VectorIndex* article_vectors = nullptr;  // hybrid opt-in
    std::function<std::string(const std::string&)> fetch_article_text;
};

struct ChainConfig {
    RefineStrategy strategy = RefineStrategy::SEQUENTIAL;
    TokenCounter token_counter = whitespace_tokens;
    Clock clock = steady_clock_us;
    const PromptTemplates* templates = &PromptTemplates::builtin();
    size_t answer_max_tokens = 512;
    std::optional<std::vector<double>> query_vector;  // enables hybrid retrieval
    // reserved for VLM-style image input; not consumed by the current chain
    std::optional<std::string> image_path;
};

// --- chain steps ------------------------------------------------------------------

// Step 1: question -> structured query via the query-generation template.
std::string generate_query(const std::string& question, LlmInterface& llm,
                           const PromptTemplates& templates = PromptTemplates::builtin());

// Step 2: top-n keys from the full-text index, ranking order preserved;
// hybrid when a query vector is supplied. May return fewer than n.
std::vector<std::string> retrieve_articles(
    const std::string& query, const IndexHandles& handles, size_t n,
    const std::optional<std::vector<double>>& query_vector = std::nullopt);

// Step 3 helpers: byte spans of the article partitioned at paragraph
// boundaries into segments of at most budget_tokens whitespace tokens;
// oversized single paragraphs fall back to hard token-boundary splits. The
// concatenation of the returned segments is exactly the input text.
std::vector<std::string_view> split_into_segments(std::string_view text, size_t budget_tokens,
                                                  const TokenCounter& count = whitespace_tokens);

struct SummarizeResult {
    std::string summary;
    size_t chunk_count = 0;
    size_t refine_calls = 0;
};

// Step 3: single completion when the rendered prompt fits the context
// window; otherwise segment + multi-step refinement (sequential by default,
// map-reduce optional).
SummarizeResult summarize_evidence(const std::string& article_text,
                                   const std::string& question, LlmInterface& llm,
                                   const PromptTemplates& templates = PromptTemplates::builtin(),
                                   const TokenCounter& count = whitespace_tokens,
                                   RefineStrategy strategy = RefineStrategy::SEQUENTIAL);

// Step 4: final answer over the enumerated summaries; with no summaries the
// fixed insufficient-evidence text is returned without an LLM call.
std::string answer(const std::string& question, std::span<const ArticleSummary> summaries,
                   LlmInterface& llm,
                   const PromptTemplates& templates = PromptTemplates::builtin(),
                   size_t max_tokens = 512);

// Steps 1-4 in order. Step failures are recorded in the trace with their
// step id and abort the remainder of the chain; preconditions (empty
// question, n == 0) throw InvalidArgument instead.
RagTrace run_chain(const std::string& question, size_t n, LlmInterface& llm,
                   const IndexHandles& handles, const ChainConfig& config = {});

}  // namespace scilit::rag
