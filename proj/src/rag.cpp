#include "scilit/rag.hpp"

#include <httplib.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "scilit/rng.hpp"
#include "scilit/text.hpp"

namespace scilit::rag {

using nlohmann::json;

namespace {

constexpr size_t kSummaryMaxTokens = 256;

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read template: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string truncate_tokens(const std::string& s, size_t max_tokens) {
    const auto spans = text::whitespace_token_spans(s);
    if (spans.size() <= max_tokens) return s;
    return s.substr(0, spans[max_tokens - 1].second);
}

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() &&
           (s.back() == ' ' || s.back() == '\t' || s.back() == '\n' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

// text following `marker` up to end of line (for "Question:") or end of
// prompt (for block markers like "Article:").
std::string extract_after(const std::string& prompt, std::string_view marker, bool to_eol) {
    const auto pos = prompt.rfind(marker);
    if (pos == std::string::npos) return "";
    const size_t start = pos + marker.size();
    size_t end = prompt.size();
    if (to_eol) {
        const auto nl = prompt.find('\n', start);
        if (nl != std::string::npos) end = nl;
    }
    return std::string(trim_view(std::string_view(prompt).substr(start, end - start)));
}

std::string short_hash(const std::string& s) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%08x", static_cast<uint32_t>(fnv1a64(s) & 0xFFFFFFFFu));
    return buf;
}

std::string first_tokens(const std::string& s, size_t n) {
    const auto spans = text::whitespace_token_spans(s);
    std::string out;
    for (size_t i = 0; i < std::min(n, spans.size()); ++i) {
        if (!out.empty()) out.push_back(' ');
        out += s.substr(spans[i].first, spans[i].second - spans[i].first);
    }
    if (spans.size() > n) out += " ...";
    return out;
}

}  // namespace

size_t whitespace_tokens(std::string_view s) { return text::whitespace_token_count(s); }

int64_t steady_clock_us() {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

// --- LLMs -----------------------------------------------------------------------

std::string MockLlm::complete(const std::string& prompt, size_t max_tokens) {
    std::string task;
    if (prompt.rfind("TASK: ", 0) == 0) {
        const auto nl = prompt.find('\n');
        task = prompt.substr(6, (nl == std::string::npos ? prompt.size() : nl) - 6);
    }
    if (fail_task_ && task == *fail_task_)
        throw LlmError("mock LLM configured to fail on task " + task);

    std::string out;
    if (task == "QUERY_GENERATION") {
        const auto question = extract_after(prompt, "Question:", /*to_eol=*/true);
        const auto it = query_mapping_.find(question);
        out = it != query_mapping_.end() ? it->second : question;
    } else if (task == "SUMMARIZE") {
        const auto article = extract_after(prompt, "Article:", /*to_eol=*/false);
        out = "Summary[" + short_hash(prompt) + "] " + first_tokens(article, 12);
    } else if (task == "REFINE") {
        const auto segment = extract_after(prompt, "Segment:", /*to_eol=*/false);
        out = "Refined[" + short_hash(prompt) + "] " + first_tokens(segment, 12);
    } else if (task == "FINAL_ANSWER") {
        const auto block = extract_after(prompt, "Summaries:", /*to_eol=*/false);
        size_t n = 0;
        std::istringstream lines(block);
        std::string line;
        while (std::getline(lines, line))
            if (!line.empty() && line[0] >= '1' && line[0] <= '9') ++n;
        out = "Answer[" + short_hash(prompt) + "] synthesized from " + std::to_string(n) +
              " summaries.";
    } else {
        out = prompt;
    }
    return truncate_tokens(out, max_tokens);
}

std::string EchoLlm::complete(const std::string& prompt, size_t max_tokens) {
    return truncate_tokens(prompt, max_tokens);
}

std::string HttpLlm::complete(const std::string& prompt, size_t max_tokens) {
    httplib::Client client(config_.host, config_.port);
    client.set_read_timeout(config_.timeout_seconds, 0);
    json body;
    body["model"] = config_.model;
    body["prompt"] = prompt;
    body["max_tokens"] = max_tokens;
    const auto res = client.Post(config_.path, body.dump(), "application/json");
    if (!res) throw LlmError("LLM endpoint unreachable: " + config_.host + ":" +
                             std::to_string(config_.port));
    if (res->status != 200)
        throw LlmError("LLM endpoint returned status " + std::to_string(res->status));
    try {
        const auto parsed = json::parse(res->body);
        return parsed.at("text").get<std::string>();
    } catch (const json::exception& e) {
        throw LlmError("bad LLM response: " + std::string(e.what()));
    }
}

// --- templates -------------------------------------------------------------------

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    PromptTemplates t;
    t.query_generation = read_text_file(dir / "query_generation.txt");
    t.summarize = read_text_file(dir / "summarize.txt");
    t.refine = read_text_file(dir / "refine.txt");
    t.final_answer = read_text_file(dir / "final_answer.txt");
    t.insufficient_evidence = read_text_file(dir / "insufficient_evidence.txt");
    return t;
}

const PromptTemplates& PromptTemplates::builtin() {
    // mirrors prompts/*.txt
    static const PromptTemplates t = [] {
        PromptTemplates p;
        p.query_generation =
            "TASK: QUERY_GENERATION\n"
            "Rewrite the question below as a concise search query for a scientific-literature\n"
            "index. Return only the query terms, nothing else.\n"
            "\n"
            "Question: {question}\n";
        p.summarize =
            "TASK: SUMMARIZE\n"
            "Summarize the evidence in the article text below as it pertains to the question.\n"
            "Keep only statements supported by the text.\n"
            "\n"
            "Question: {question}\n"
            "\n"
            "Article:\n"
            "{article}\n";
        p.refine =
            "TASK: REFINE\n"
            "Refine the running summary using the additional article segment below, keeping\n"
            "only evidence relevant to the question.\n"
            "\n"
            "Question: {question}\n"
            "\n"
            "Current summary:\n"
            "{summary}\n"
            "\n"
            "Segment:\n"
            "{segment}\n";
        p.final_answer =
            "TASK: FINAL_ANSWER\n"
            "Answer the question using the numbered article summaries below. Ground every\n"
            "claim in the summaries and mention the supporting summary numbers.\n"
            "\n"
            "Question: {question}\n"
            "\n"
            "Summaries:\n"
            "{summaries}\n";
        p.insufficient_evidence =
            "Insufficient evidence: no relevant articles were retrieved for this question.\n";
        return p;
    }();
    return t;
}

std::string render_template(std::string_view tpl,
                            const std::map<std::string, std::string>& slots) {
    std::string out;
    out.reserve(tpl.size());
    size_t i = 0;
    while (i < tpl.size()) {
        if (tpl[i] == '{') {
            const auto close = tpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const std::string key(tpl.substr(i + 1, close - i - 1));
                const auto it = slots.find(key);
                if (it != slots.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tpl[i++]);
    }
    return out;
}

// --- steps -----------------------------------------------------------------------

std::string generate_query(const std::string& question, LlmInterface& llm,
                           const PromptTemplates& templates) {
    if (question.empty()) throw InvalidArgument("generate_query: question must be non-empty");
    const auto prompt = render_template(templates.query_generation, {{"question", question}});
    return llm.complete(prompt, 128);
}

std::vector<std::string> retrieve_articles(const std::string& query,
                                           const IndexHandles& handles, size_t n,
                                           const std::optional<std::vector<double>>& query_vector) {
    if (n == 0) throw InvalidArgument("retrieve_articles: n must be >= 1");
    if (!handles.article_index) throw InvalidArgument("no article index configured");

    std::vector<std::string> keys;
    if (query_vector && handles.article_vectors) {
        const auto fused = vec::hybrid_query(handles.article_index, handles.article_vectors,
                                             query, query_vector, n);
        for (const auto& hit : fused) keys.push_back(hit.key);
    } else {
        for (const auto& [key, score] : handles.article_index->query(query, n))
            keys.push_back(key);
    }
    return keys;
}

std::vector<std::string_view> split_into_segments(std::string_view textv, size_t budget_tokens,
                                                  const TokenCounter& count) {
    if (budget_tokens == 0) throw InvalidArgument("segment budget must be positive");

    // paragraph slices: each ends after its trailing newline run
    std::vector<std::string_view> paragraphs;
    size_t start = 0;
    while (start < textv.size()) {
        size_t brk = textv.find("\n\n", start);
        if (brk == std::string_view::npos) {
            paragraphs.push_back(textv.substr(start));
            break;
        }
        size_t end = brk;
        while (end < textv.size() && textv[end] == '\n') ++end;
        paragraphs.push_back(textv.substr(start, end - start));
        start = end;
    }

    std::vector<std::string_view> segments;
    size_t seg_start = 0, seg_len = 0, seg_tokens = 0;
    auto flush = [&] {
        if (seg_len > 0) segments.push_back(textv.substr(seg_start, seg_len));
        seg_start += seg_len;
        seg_len = 0;
        seg_tokens = 0;
    };
    for (const auto& para : paragraphs) {
        const size_t para_tokens = count(para);
        if (para_tokens > budget_tokens) {
            // oversized paragraph: hard split at token boundaries
            flush();
            const auto spans = text::whitespace_token_spans(para);
            size_t chunk_begin = 0;
            for (size_t t = budget_tokens; t < spans.size(); t += budget_tokens) {
                segments.push_back(para.substr(chunk_begin, spans[t].first - chunk_begin));
                chunk_begin = spans[t].first;
            }
            segments.push_back(para.substr(chunk_begin));
            seg_start += para.size();
            continue;
        }
        if (seg_tokens + para_tokens > budget_tokens) flush();
        seg_len += para.size();
        seg_tokens += para_tokens;
    }
    flush();
    return segments;
}

SummarizeResult summarize_evidence(const std::string& article_text, const std::string& question,
                                   LlmInterface& llm, const PromptTemplates& templates,
                                   const TokenCounter& count, RefineStrategy strategy) {
    if (article_text.empty())
        throw InvalidArgument("summarize_evidence: article text must be non-empty");

    const auto full_prompt = render_template(
        templates.summarize, {{"question", question}, {"article", article_text}});
    if (count(full_prompt) <= llm.context_window()) {
        SummarizeResult r;
        r.summary = llm.complete(full_prompt, kSummaryMaxTokens);
        r.chunk_count = 1;
        return r;
    }

    // prompt overhead: whichever of the two templates costs more with empty
    // payload slots, reserving room for the running summary in refine steps
    const size_t summarize_overhead =
        count(render_template(templates.summarize, {{"question", question}, {"article", ""}}));
    const size_t refine_overhead =
        count(render_template(templates.refine,
                              {{"question", question}, {"summary", ""}, {"segment", ""}})) +
        kSummaryMaxTokens;
    const size_t overhead = std::max(summarize_overhead, refine_overhead);
    if (overhead >= llm.context_window())
        throw LlmError("context window too small for the summarization prompts");
    const size_t budget = llm.context_window() - overhead;

    const auto segments = split_into_segments(article_text, budget, count);
    SummarizeResult r;
    r.chunk_count = segments.size();

    if (strategy == RefineStrategy::SEQUENTIAL) {
        r.summary = llm.complete(
            render_template(templates.summarize,
                            {{"question", question}, {"article", std::string(segments[0])}}),
            kSummaryMaxTokens);
        for (size_t i = 1; i < segments.size(); ++i) {
            r.summary = llm.complete(
                render_template(templates.refine, {{"question", question},
                                                   {"summary", r.summary},
                                                   {"segment", std::string(segments[i])}}),
                kSummaryMaxTokens);
            ++r.refine_calls;
        }
    } else {
        std::string joined;
        for (const auto& seg : segments) {
            const auto partial = llm.complete(
                render_template(templates.summarize,
                                {{"question", question}, {"article", std::string(seg)}}),
                kSummaryMaxTokens);
            if (!joined.empty()) joined += "\n";
            joined += partial;
        }
        r.summary = llm.complete(
            render_template(templates.summarize, {{"question", question}, {"article", joined}}),
            kSummaryMaxTokens);
    }
    return r;
}

std::string answer(const std::string& question, std::span<const ArticleSummary> summaries,
                   LlmInterface& llm, const PromptTemplates& templates, size_t max_tokens) {
    if (summaries.empty()) {
        std::string text = templates.insufficient_evidence;
        while (!text.empty() && text.back() == '\n') text.pop_back();
        return text;
    }
    std::string numbered;
    for (size_t i = 0; i < summaries.size(); ++i) {
        numbered += std::to_string(i + 1) + ". " + summaries[i].summary;
        if (i + 1 < summaries.size()) numbered += "\n";
    }
    const auto prompt = render_template(templates.final_answer,
                                        {{"question", question}, {"summaries", numbered}});
    return llm.complete(prompt, max_tokens);
}

RagTrace run_chain(const std::string& question, size_t n, LlmInterface& llm,
                   const IndexHandles& handles, const ChainConfig& config) {
    if (question.empty()) throw InvalidArgument("run_chain: question must be non-empty");
    if (n == 0) throw InvalidArgument("run_chain: n must be >= 1");
    if (!handles.fetch_article_text) throw InvalidArgument("run_chain: no article fetcher");

    RagTrace trace;
    trace.question = question;
    const auto& templates = *config.templates;

    auto timed = [&](const char* step, auto&& fn) -> bool {
        StepTiming t;
        t.step = step;
        t.start_us = config.clock();
        try {
            fn();
            t.end_us = config.clock();
            trace.step_timings.push_back(std::move(t));
            return true;
        } catch (const std::exception& e) {
            t.end_us = config.clock();
            trace.step_timings.push_back(std::move(t));
            trace.error = std::string(step) + ": " + e.what();
            return false;
        }
    };

    if (!timed("query_generation", [&] {
            trace.generated_query = generate_query(question, llm, templates);
        }))
        return trace;

    if (!timed("retrieval", [&] {
            trace.retrieved =
                retrieve_articles(trace.generated_query, handles, n, config.query_vector);
        }))
        return trace;

    if (!trace.retrieved.empty()) {
        const bool ok = timed("summarization", [&] {
            for (const auto& key : trace.retrieved) {
                const auto article_text = handles.fetch_article_text(key);
                auto result = summarize_evidence(article_text, question, llm, templates,
                                                 config.token_counter, config.strategy);
                trace.per_article.push_back({key, result.chunk_count, std::move(result.summary)});
            }
        });
        if (!ok) return trace;
    }

    timed("final_answer", [&] {
        trace.final_answer = answer(question, trace.per_article, llm, templates,
                                    config.answer_max_tokens);
    });
    return trace;
}

json RagTrace::to_json() const {
    json j;
    j["question"] = question;
    j["generated_query"] = generated_query;
    j["retrieved"] = retrieved;
    json articles = json::array();
    for (const auto& a : per_article)
        articles.push_back(json{{"key", a.key},
                                {"chunk_count", a.chunk_count},
                                {"summary", a.summary}});
    j["per_article"] = std::move(articles);
    j["final_answer"] = final_answer;
    json timings = json::array();
    for (const auto& t : step_timings)
        timings.push_back(
            json{{"step", t.step}, {"start_us", t.start_us}, {"end_us", t.end_us}});
    j["step_timings"] = std::move(timings);
    if (error) j["error"] = *error;
    return j;
}

}  // namespace scilit::rag
