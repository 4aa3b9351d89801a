#include <doctest.h>

#include <cmath>
#include <map>
#include <memory>

#include "scilit/rag.hpp"
#include "scilit/text.hpp"
#include "support/fixtures.hpp"

using namespace scilit;

namespace {

// article full text as the chain consumes it: sections and paragraphs
// joined with blank lines
std::string article_text(const corpus::ArticleRecord& a) {
    std::string text;
    for (const auto& sec : a.full_text) {
        for (const auto& p : sec.paragraphs) {
            if (!text.empty()) text += "\n\n";
            text += p;
        }
    }
    return text;
}

struct ChainFixture {
    std::vector<corpus::ArticleRecord> articles = fixtures::corpus5();
    std::vector<std::pair<std::string, std::string>> docs;
    std::unique_ptr<lexical::LexicalIndex> index;
    rag::IndexHandles handles;

    ChainFixture() {
        for (const auto& a : articles)
            docs.emplace_back(a.metadata.accession_id, article_text(a));
        lexical::Bm25Params params;
        params.min_df = 1;
        index = std::make_unique<lexical::LexicalIndex>(lexical::LexicalIndex::build(docs, params));
        handles.article_index = index.get();
        handles.fetch_article_text = [this](const std::string& key) {
            for (const auto& [k, text] : docs)
                if (k == key) return text;
            throw IoError("no article " + key);
        };
    }
};

struct CountingLlm : rag::LlmInterface {
    rag::MockLlm inner;
    std::map<std::string, int> calls;
    size_t window;

    explicit CountingLlm(size_t w) : inner(w), window(w) {}
    std::string complete(const std::string& prompt, size_t max_tokens) override {
        const auto nl = prompt.find('\n');
        ++calls[prompt.substr(0, nl == std::string::npos ? prompt.size() : nl)];
        return inner.complete(prompt, max_tokens);
    }
    size_t context_window() const override { return window; }
};

std::string repeated_paragraphs(size_t n_paragraphs, size_t tokens_per_paragraph) {
    std::string text;
    for (size_t p = 0; p < n_paragraphs; ++p) {
        if (p) text += "\n\n";
        for (size_t t = 0; t < tokens_per_paragraph; ++t) {
            if (t) text.push_back(' ');
            text += "tok" + std::to_string(p % 17) + std::to_string(t);
        }
    }
    return text;
}

}  // namespace

// --- templates & query generation -------------------------------------------------

TEST_CASE("builtin templates match the versioned prompt files") {
    const auto loaded = rag::PromptTemplates::load(SCILIT_PROMPTS_DIR);
    const auto& builtin = rag::PromptTemplates::builtin();
    CHECK(loaded.query_generation == builtin.query_generation);
    CHECK(loaded.summarize == builtin.summarize);
    CHECK(loaded.refine == builtin.refine);
    CHECK(loaded.final_answer == builtin.final_answer);
    CHECK(loaded.insufficient_evidence == builtin.insufficient_evidence);
}

TEST_CASE("render_template substitutes slots and leaves unknown braces alone") {
    const auto out = rag::render_template("Q: {question} unknown {other}",
                                          {{"question", "why"}});
    CHECK(out == "Q: why unknown {other}");
}

TEST_CASE("generate_query: echo mock returns the question verbatim") {
    rag::MockLlm llm;
    CHECK(rag::generate_query("What stains mitochondria?", llm) ==
          "What stains mitochondria?");
}

TEST_CASE("generate_query: canned mapping returns exactly the mapped query") {
    rag::MockLlm llm;
    llm.set_query_mapping(
        {{"Q1", "EGFR lung adenocarcinoma guideline"}});
    CHECK(rag::generate_query("Q1", llm) == "EGFR lung adenocarcinoma guideline");
}

TEST_CASE("generate_query: empty question violates the precondition") {
    rag::MockLlm llm;
    CHECK_THROWS_AS(rag::generate_query("", llm), InvalidArgument);
}

// --- retrieval ------------------------------------------------------------------

TEST_CASE("retrieve_articles: uniquely matching article comes first") {
    ChainFixture fx;
    // only PMC0004 talks about sequencing coverage
    const auto keys = rag::retrieve_articles("sequencing coverage variant", fx.handles, 1);
    REQUIRE(keys.size() == 1);
    CHECK(keys[0] == "PMC0004");
}

TEST_CASE("retrieve_articles: no vocabulary overlap returns empty") {
    ChainFixture fx;
    CHECK(rag::retrieve_articles("qqqqqq zzzzzz", fx.handles, 3).empty());
}

TEST_CASE("retrieve_articles: n beyond corpus returns all matches") {
    ChainFixture fx;
    const auto keys = rag::retrieve_articles("the", fx.handles, 50);
    CHECK(keys.size() <= 5);
    CHECK(rag::retrieve_articles("staining", fx.handles, 50).size() >= 1);
}

// --- segmentation ------------------------------------------------------------------

TEST_CASE("split_into_segments: concatenation reproduces the original text") {
    const auto original = repeated_paragraphs(37, 13);
    for (size_t budget : {5, 13, 40, 100, 10000}) {
        const auto segments = rag::split_into_segments(original, budget);
        std::string joined;
        for (const auto& s : segments) joined += std::string(s);
        CHECK(joined == original);
        for (const auto& s : segments)
            CHECK(text::whitespace_token_count(s) <= std::max(budget, size_t(13)));
    }
}

TEST_CASE("split_into_segments: oversized paragraph falls back to hard splits") {
    std::string big;
    for (int t = 0; t < 100; ++t) {
        if (t) big.push_back(' ');
        big += "w" + std::to_string(t);
    }
    const auto segments = rag::split_into_segments(big, 30);
    REQUIRE(segments.size() == 4);  // 30+30+30+10
    std::string joined;
    for (const auto& s : segments) joined += std::string(s);
    CHECK(joined == big);
    CHECK(text::whitespace_token_count(segments[0]) == 30);
    CHECK(text::whitespace_token_count(segments[3]) == 10);
}

TEST_CASE("split_into_segments: exact packing when paragraph size divides the budget") {
    const auto twelve = repeated_paragraphs(12, 10);  // 120 tokens
    const auto segments = rag::split_into_segments(twelve, 40);
    CHECK(segments.size() == 3);  // ceil(120 / 40)
}

// --- summarization ------------------------------------------------------------------

TEST_CASE("summarize_evidence: article within the window is one chunk") {
    CountingLlm llm(4096);
    const auto result = rag::summarize_evidence("A short article body.", "What?", llm);
    CHECK(result.chunk_count == 1);
    CHECK(result.refine_calls == 0);
    CHECK(llm.calls["TASK: SUMMARIZE"] == 1);
    CHECK(llm.calls.count("TASK: REFINE") == 0);
}

TEST_CASE("summarize_evidence: 2.5x-window article gives 3 chunks and 2 refines") {
    const size_t window = 4096;
    CountingLlm llm(window);
    const std::string question = "How does staining change?";
    // 1024 paragraphs x 10 tokens = 2.5 * window tokens
    const auto article = repeated_paragraphs(1024, 10);
    REQUIRE(text::whitespace_token_count(article) == size_t(2.5 * window));

    const auto result = rag::summarize_evidence(article, question, llm);

    // ceiling arithmetic oracle, using the documented budget rule
    const auto& tpl = rag::PromptTemplates::builtin();
    const size_t overhead = std::max(
        text::whitespace_token_count(
            rag::render_template(tpl.summarize, {{"question", question}, {"article", ""}})),
        text::whitespace_token_count(rag::render_template(
            tpl.refine, {{"question", question}, {"summary", ""}, {"segment", ""}})) +
            256);
    const size_t budget = window - overhead;
    const size_t expected =
        (text::whitespace_token_count(article) + budget - 1) / budget;
    CHECK(expected == 3);
    CHECK(result.chunk_count == 3);
    CHECK(result.refine_calls == 2);
    CHECK(llm.calls["TASK: SUMMARIZE"] == 1);
    CHECK(llm.calls["TASK: REFINE"] == 2);
}

TEST_CASE("summarize_evidence: empty article violates the precondition") {
    rag::MockLlm llm;
    CHECK_THROWS_AS(rag::summarize_evidence("", "Q", llm), InvalidArgument);
}

TEST_CASE("summarize_evidence: map-reduce summarizes each segment then reduces") {
    CountingLlm llm(400);
    const auto article = repeated_paragraphs(100, 10);  // 1000 tokens > window
    const auto result = rag::summarize_evidence(article, "Q", llm,
                                                rag::PromptTemplates::builtin(),
                                                rag::whitespace_tokens,
                                                rag::RefineStrategy::MAP_REDUCE);
    CHECK(result.chunk_count > 1);
    CHECK(result.refine_calls == 0);
    CHECK(llm.calls["TASK: SUMMARIZE"] == int(result.chunk_count) + 1);
}

// --- answer ---------------------------------------------------------------------------

TEST_CASE("answer: empty summaries return the fixed insufficient-evidence text") {
    rag::MockLlm llm;
    const auto response = rag::answer("Q", {}, llm);
    CHECK(response == "Insufficient evidence: no relevant articles were retrieved for this "
                  "question.");
}

TEST_CASE("answer: prompt enumerates all summaries in retrieval order") {
    rag::EchoLlm echo;
    std::vector<rag::ArticleSummary> summaries = {
        {"PMC1", 1, "First summary text"},
        {"PMC2", 2, "Second summary text"},
        {"PMC3", 1, "Third summary text"}};
    const auto prompt = rag::answer("The question?", summaries, echo);
    const auto p1 = prompt.find("1. First summary text");
    const auto p2 = prompt.find("2. Second summary text");
    const auto p3 = prompt.find("3. Third summary text");
    REQUIRE(p1 != std::string::npos);
    REQUIRE(p2 != std::string::npos);
    REQUIRE(p3 != std::string::npos);
    CHECK(p1 < p2);
    CHECK(p2 < p3);
    CHECK(prompt.find("The question?") != std::string::npos);
}

// --- the chain ------------------------------------------------------------------------

TEST_CASE("run_chain: end-to-end over the 5-article fixture") {
    ChainFixture fx;
    rag::MockLlm llm;
    int64_t tick = 0;
    rag::ChainConfig config;
    config.clock = [&tick]() { return ++tick; };

    const auto trace =
        rag::run_chain("Which article discusses mitochondria staining in cells?", 2,
                       llm, fx.handles, config);
    CHECK_FALSE(trace.error.has_value());
    CHECK(trace.generated_query ==
          "Which article discusses mitochondria staining in cells?");
    REQUIRE(trace.retrieved.size() == 2);
    CHECK(trace.retrieved[0] == "PMC0001");  // the staining article ranks first
    REQUIRE(trace.per_article.size() == 2);
    for (const auto& a : trace.per_article) {
        CHECK(a.chunk_count == 1);
        CHECK_FALSE(a.summary.empty());
    }
    CHECK_FALSE(trace.final_answer.empty());
    REQUIRE(trace.step_timings.size() == 4);
    CHECK(trace.step_timings[0].step == "query_generation");
    CHECK(trace.step_timings[3].step == "final_answer");
    // timestamps monotone across steps
    for (size_t i = 1; i < trace.step_timings.size(); ++i)
        CHECK(trace.step_timings[i].start_us >= trace.step_timings[i - 1].end_us);
}

TEST_CASE("run_chain: byte-stable across runs with a deterministic clock") {
    ChainFixture fx;
    std::string first;
    for (int run = 0; run < 2; ++run) {
        rag::MockLlm llm;
        int64_t tick = 0;
        rag::ChainConfig config;
        config.clock = [&tick]() { return ++tick; };
        const auto trace = rag::run_chain(
            "Which article discusses mitochondria staining in cells?", 2, llm, fx.handles,
            config);
        const auto dumped = trace.to_json().dump();
        if (run == 0) first = dumped;
        else CHECK(dumped == first);
    }
}

TEST_CASE("run_chain: empty retrieval falls through to insufficient evidence") {
    ChainFixture fx;
    rag::MockLlm llm;
    const auto trace = rag::run_chain("zzzz qqqq xxxx", 3, llm, fx.handles);
    CHECK_FALSE(trace.error.has_value());
    CHECK(trace.retrieved.empty());
    CHECK(trace.per_article.empty());
    CHECK(trace.final_answer.find("Insufficient evidence") == 0);
}

TEST_CASE("run_chain: preconditions throw") {
    ChainFixture fx;
    rag::MockLlm llm;
    CHECK_THROWS_AS(rag::run_chain("", 1, llm, fx.handles), InvalidArgument);
    CHECK_THROWS_AS(rag::run_chain("q", 0, llm, fx.handles), InvalidArgument);
}

TEST_CASE("run_chain: LLM failure at step 3 leaves steps 1-2 populated") {
    ChainFixture fx;
    rag::MockLlm llm;
    llm.fail_on_task("SUMMARIZE");
    const auto trace = rag::run_chain("Which article discusses mitochondria staining in cells?",
                                      2, llm, fx.handles);
    REQUIRE(trace.error.has_value());
    CHECK(trace.error->rfind("summarization:", 0) == 0);
    CHECK_FALSE(trace.generated_query.empty());
    CHECK(trace.retrieved.size() == 2);
    CHECK(trace.final_answer.empty());
}
