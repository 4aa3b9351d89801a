// scilit: corpus ingestion, sharding, annotation, indexing, search, RAG, and
// evaluation for scientific-literature archives.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "scilit/annotate.hpp"
#include "scilit/config.hpp"
#include "scilit/corpus.hpp"
#include "scilit/eval.hpp"
#include "scilit/jats.hpp"
#include "scilit/lexical.hpp"
#include "scilit/rag.hpp"
#include "scilit/rng.hpp"
#include "scilit/service.hpp"
#include "scilit/shard.hpp"
#include "scilit/vector_index.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scilit;

namespace {

bool g_verbose = false;
bool g_json_logs = false;

void log_line(const std::string& level, const std::string& message) {
    if (g_json_logs) {
        std::cerr << json{{"level", level}, {"message", message}}.dump() << "\n";
    } else {
        std::cerr << level << ": " << message << "\n";
    }
}

void info(const std::string& message) {
    if (g_verbose) log_line("info", message);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<corpus::ArticleRecord> read_articles_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read corpus: " + path.string());
    std::vector<corpus::ArticleRecord> articles;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            articles.push_back(corpus::article_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw IoError(path.string() + ":" + std::to_string(line_no) +
                          ": bad article record: " + e.what());
        }
    }
    return articles;
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) lines.push_back(line);
    return lines;
}

std::string article_full_text(const corpus::ArticleRecord& article) {
    std::string text;
    for (const auto& sec : article.full_text) {
        for (const auto& p : sec.paragraphs) {
            if (!text.empty()) text += "\n\n";
            text += p;
        }
    }
    return text;
}

size_t peak_rss_kb() {
    std::ifstream status("/proc/self/status");
    std::string line;
    while (std::getline(status, line)) {
        if (line.rfind("VmHWM:", 0) == 0) {
            size_t kb = 0;
            std::istringstream fields(line.substr(6));
            fields >> kb;
            return kb;
        }
    }
    return 0;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
}

// env var beats config file
std::string setting(const config::Config& cfg, const std::string& key, const char* env,
                    const std::string& fallback) {
    if (env) {
        if (const char* v = std::getenv(env)) return v;
    }
    return cfg.get_or(key, fallback);
}

// --- ingest ------------------------------------------------------------------------

int run_ingest(const std::string& file_list_path, const std::string& nxml_dir,
               const std::string& entrez_path, const std::string& out_path) {
    std::map<std::string, jats::FileListRow> rows_by_accession;
    if (!file_list_path.empty()) {
        const auto parsed = jats::parse_file_list(read_file(file_list_path));
        for (const auto& row : parsed.rows) rows_by_accession[row.accession_id] = row;
        if (!parsed.rejects.empty())
            log_line("warn", std::to_string(parsed.rejects.size()) +
                                 " file-list lines rejected");
    }

    std::map<std::string, jats::EntrezLikeRecord> entrez_by_accession;
    if (!entrez_path.empty()) {
        const auto records = json::parse(read_file(entrez_path));
        for (const auto& j : records) {
            auto rec = jats::EntrezLikeRecord::from_json(j);
            entrez_by_accession[rec.accession_id] = rec;
        }
    }

    std::vector<fs::path> nxml_files;
    for (const auto& entry : fs::directory_iterator(nxml_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".nxml")
            nxml_files.push_back(entry.path());
    std::sort(nxml_files.begin(), nxml_files.end());
    if (nxml_files.empty()) throw IoError("no .nxml files in " + nxml_dir);

    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + out_path);

    std::vector<corpus::ArticleRecord> articles;
    size_t total_figures = 0, total_refs = 0, total_unresolved = 0;
    for (const auto& path : nxml_files) {
        auto parsed = jats::parse_nxml(read_file(path));
        total_unresolved += jats::extract_inline_refs(parsed.full_text, parsed.figures,
                                                      parsed.xref_marks,
                                                      parsed.figure_numbers);
        const auto& accession = parsed.metadata.accession_id;
        std::optional<jats::FileListRow> row;
        if (auto it = rows_by_accession.find(accession); it != rows_by_accession.end())
            row = it->second;
        std::optional<jats::EntrezLikeRecord> entrez;
        if (auto it = entrez_by_accession.find(accession); it != entrez_by_accession.end())
            entrez = it->second;

        corpus::ArticleRecord article;
        article.metadata = jats::merge_metadata(parsed.metadata, row, entrez);
        article.full_text = std::move(parsed.full_text);
        article.figures = std::move(parsed.figures);
        total_figures += article.figures.size();
        for (const auto& f : article.figures) total_refs += f.inline_refs.size();
        out << corpus::canonical_json(corpus::to_json(article)) << "\n";
        articles.push_back(std::move(article));
        info("ingested " + accession + " from " + path.filename().string());
    }

    const auto report = corpus::validate_corpus(articles);
    for (const auto& v : report.violations)
        log_line("warn", "validation: " + v.accession_id + ": " + v.detail);

    std::cout << json{{"articles", articles.size()},
                      {"figures", total_figures},
                      {"inline_refs", total_refs},
                      {"unresolved_mentions", total_unresolved},
                      {"validation_violations", report.violations.size()},
                      {"out", out_path}}
                     .dump()
              << "\n";
    return 0;
}

// --- shard -------------------------------------------------------------------------

int run_shard_write(const std::string& in_path, const std::string& out_dir, uint64_t size,
                    const std::string& images_root) {
    const auto articles = read_articles_jsonl(in_path);
    const auto pairs = shard::reshape_to_pairs(articles);
    shard::ImageProvider images = shard::placeholder_image_bytes;
    if (!images_root.empty()) {
        images = [root = fs::path(images_root)](const corpus::PairRecord& p) {
            const auto path = root / p.image_path;
            if (fs::exists(path)) return read_file(path);
            return shard::placeholder_image_bytes(p);
        };
    }
    const auto manifest = shard::write_shards(pairs, out_dir, size, images);
    std::cout << json{{"pairs", manifest.total_records},
                      {"shards", manifest.shard_paths.size()},
                      {"manifest", (fs::path(out_dir) / "manifest.json").string()}}
                     .dump()
              << "\n";
    return 0;
}

int run_shard_stream(const std::string& manifest_path, const std::string& filter_expr,
                     uint64_t limit, bool stats_only) {
    const auto manifest = shard::ShardManifest::load(manifest_path);
    std::optional<shard::FilterPredicate> filter;
    if (!filter_expr.empty()) filter = shard::FilterPredicate::parse(filter_expr);
    shard::ShardStream stream(manifest, fs::path(manifest_path).parent_path(),
                              std::move(filter));
    size_t count = 0;
    while (auto record = stream.next()) {
        if (!stats_only) std::cout << corpus::canonical_json(corpus::to_json(*record)) << "\n";
        ++count;
        if (limit && count >= limit) break;
    }
    if (stats_only)
        std::cout << json{{"records", count}, {"peak_rss_kb", peak_rss_kb()}}.dump() << "\n";
    return 0;
}

int run_shard_instructions(const std::string& manifest_path, const std::string& brief_path,
                           const std::string& detailed_path, uint64_t seed,
                           const std::string& out_path) {
    const auto pairs = shard::read_all(manifest_path);
    const auto brief = read_lines(brief_path);
    const auto detailed = read_lines(detailed_path);
    const auto records = shard::make_instructions(pairs, brief, detailed, seed);
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + out_path);
    for (const auto& r : records) {
        out << json{{"pair_id", r.pair_id},
                    {"image_path", r.image_path},
                    {"instruction", r.instruction},
                    {"response", r.response}}
                   .dump()
            << "\n";
    }
    std::cout << json{{"instructions", records.size()}, {"out", out_path}}.dump() << "\n";
    return 0;
}

// --- annotate -----------------------------------------------------------------------

int run_annotate_embed(const std::string& manifest_path, const std::string& out_path,
                       size_t dim, uint64_t seed) {
    const auto pairs = shard::read_all(manifest_path);
    annotate::HashEmbedder embedder(dim, seed);
    const auto matrix = annotate::embed(pairs, embedder);
    annotate::save_embeddings(out_path, matrix);
    std::cout << json{{"rows", matrix.rows()}, {"dims", matrix.dims}, {"out", out_path}}.dump()
              << "\n";
    return 0;
}

int run_annotate_cluster(const std::string& emb_path, size_t k, size_t pca_components,
                         uint64_t seed, size_t max_iters, size_t sample_size,
                         const std::string& out_path, const std::string& sheets_path) {
    const auto matrix = annotate::load_embeddings(emb_path);
    annotate::EmbeddingMatrix projected;
    if (pca_components > 0 && pca_components < matrix.dims) {
        const auto model = annotate::fit_pca(matrix, pca_components);
        projected = model.project(matrix);
    } else {
        projected = matrix;
    }
    const auto clustering = annotate::kmeans(projected, k, seed, max_iters);
    write_text(out_path, clustering.to_json().dump() + "\n");

    if (!sheets_path.empty()) {
        const auto sheets = annotate::make_sheets(clustering, sample_size, seed);
        json arr = json::array();
        for (const auto& s : sheets) arr.push_back(s.to_json());
        write_text(sheets_path, arr.dump() + "\n");
    }
    std::cout << json{{"points", projected.rows()},
                      {"k", clustering.k},
                      {"iterations", clustering.inertia_history.size()},
                      {"inertia", clustering.inertia},
                      {"out", out_path}}
                     .dump()
              << "\n";
    return 0;
}

int run_annotate_propagate(const std::string& clustering_path, const std::string& sheets_path,
                           const std::string& out_path) {
    const auto clustering =
        annotate::Clustering::from_json(json::parse(read_file(clustering_path)));
    std::vector<annotate::AnnotationSheet> sheets;
    for (const auto& j : json::parse(read_file(sheets_path)))
        sheets.push_back(annotate::AnnotationSheet::from_json(j));
    const auto labels = annotate::propagate_labels(clustering, sheets);
    json out = json::object();
    for (const auto& [pair_id, l] : labels) out[pair_id] = corpus::to_json(l);
    write_text(out_path, out.dump() + "\n");
    std::cout << json{{"labeled_pairs", labels.size()}, {"out", out_path}}.dump() << "\n";
    return 0;
}

// --- index -------------------------------------------------------------------------

int run_index_build_lexical(const std::string& source, const std::string& manifest_path,
                            const std::string& corpus_path, const std::string& out_dir,
                            const lexical::Bm25Params& params) {
    std::vector<std::pair<std::string, std::string>> docs;
    if (source == "captions") {
        if (manifest_path.empty()) throw InvalidArgument("captions source needs --manifest");
        for (const auto& p : shard::read_all(manifest_path))
            docs.emplace_back(p.pair_id, p.caption);
    } else if (source == "articles") {
        if (corpus_path.empty()) throw InvalidArgument("articles source needs --corpus");
        for (const auto& a : read_articles_jsonl(corpus_path))
            docs.emplace_back(a.metadata.accession_id, article_full_text(a));
    } else {
        throw InvalidArgument("unknown lexical source: " + source);
    }
    const auto index = lexical::LexicalIndex::build(docs, params);
    index.save(out_dir);
    std::cout << json{{"docs", index.doc_count()},
                      {"terms", index.vocabulary().size()},
                      {"out", out_dir}}
                     .dump()
              << "\n";
    return 0;
}

int run_index_build_vector(const std::string& emb_path, const std::string& modality,
                           const std::string& out_dir) {
    const auto matrix = annotate::load_embeddings(emb_path);
    const auto m = modality == "CAPTION" ? vec::Modality::CAPTION : vec::Modality::IMAGE;
    const auto index = vec::VectorIndex::build(matrix, m);
    index.save(out_dir);
    std::cout << json{{"vectors", index.size()}, {"dims", index.dims()}, {"out", out_dir}}.dump()
              << "\n";
    return 0;
}

// --- query -------------------------------------------------------------------------

std::vector<double> parse_vector_arg(const std::string& csv_floats) {
    std::vector<double> v;
    std::istringstream in(csv_floats);
    std::string cell;
    while (std::getline(in, cell, ',')) v.push_back(std::stod(cell));
    return v;
}

int run_query(const std::string& lexical_dir, const std::string& vectors_dir,
              const std::string& text_query, const std::string& vector_arg, size_t k) {
    std::optional<lexical::LexicalIndex> lex;
    std::optional<vec::VectorIndex> vectors;
    if (!lexical_dir.empty()) lex = lexical::LexicalIndex::load(lexical_dir);
    if (!vectors_dir.empty()) vectors = vec::VectorIndex::load(vectors_dir);

    std::optional<std::string> text;
    if (!text_query.empty()) text = text_query;
    std::optional<std::vector<double>> query_vector;
    if (!vector_arg.empty()) query_vector = parse_vector_arg(vector_arg);

    const auto hits = vec::hybrid_query(lex ? &*lex : nullptr, vectors ? &*vectors : nullptr,
                                        text, query_vector, k);
    json arr = json::array();
    for (const auto& h : hits) {
        json jh;
        jh["key"] = h.key;
        jh["fused_score"] = h.fused_score;
        if (h.lexical_rank) jh["lexical_rank"] = *h.lexical_rank;
        if (h.vector_rank) jh["vector_rank"] = *h.vector_rank;
        arr.push_back(std::move(jh));
    }
    std::cout << json{{"hits", arr}}.dump() << "\n";
    return 0;
}

// --- serve -------------------------------------------------------------------------

int run_serve(const config::Config& cfg, int port_flag) {
    config::Config effective = cfg;
    static const std::pair<const char*, const char*> env_paths[] = {
        {"SCILIT_SHARDS_MANIFEST", "shards.manifest"},
        {"SCILIT_INDEX_CAPTIONS_LEXICAL", "index.captions_lexical"},
        {"SCILIT_INDEX_ARTICLES_LEXICAL", "index.articles_lexical"},
        {"SCILIT_INDEX_CAPTIONS_VECTORS", "index.captions_vectors"},
        {"SCILIT_INDEX_IMAGES_VECTORS", "index.images_vectors"},
    };
    for (const auto& [env, key] : env_paths)
        if (const char* v = std::getenv(env)) effective.set(key, v);
    const auto components = service::load_components(effective);
    service::SearchService svc(components);

    const std::string bind = setting(effective, "service.bind", "SCILIT_BIND", "127.0.0.1");
    int port = port_flag;
    if (port < 0)
        port = static_cast<int>(
            std::stol(setting(effective, "service.port", "SCILIT_PORT", "8080")));

    service::HttpServer server(svc, bind, port);
    server.start();
    std::cout << json{{"listening", bind + ":" + std::to_string(server.port())}}.dump()
              << std::endl;
    // serve until killed
    for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
    return 0;
}

// --- rag ---------------------------------------------------------------------------

std::unique_ptr<rag::LlmInterface> make_llm(const std::string& spec, size_t window) {
    if (spec == "mock") return std::make_unique<rag::MockLlm>(window);
    if (spec.rfind("http:", 0) == 0) {
        // http:host:port[/path]
        rag::HttpLlmConfig cfg;
        cfg.context_window = window;
        std::string rest = spec.substr(5);
        const auto slash = rest.find('/');
        if (slash != std::string::npos) {
            cfg.path = rest.substr(slash);
            rest = rest.substr(0, slash);
        }
        const auto colon = rest.find(':');
        if (colon == std::string::npos) throw InvalidArgument("http llm needs host:port");
        cfg.host = rest.substr(0, colon);
        cfg.port = std::stoi(rest.substr(colon + 1));
        return std::make_unique<rag::HttpLlm>(cfg);
    }
    throw InvalidArgument("unknown --llm: " + spec + " (use mock or http:host:port[/path])");
}

int run_rag_ask(const config::Config& cfg, const std::string& question, size_t n,
                const std::string& llm_spec, const std::string& corpus_path,
                const std::string& index_dir, const std::string& trace_path, size_t window,
                bool map_reduce) {
    const auto articles = read_articles_jsonl(corpus_path);
    std::map<std::string, std::string> texts;
    for (const auto& a : articles) texts[a.metadata.accession_id] = article_full_text(a);

    std::optional<lexical::LexicalIndex> index;
    if (!index_dir.empty()) {
        index = lexical::LexicalIndex::load(index_dir);
    } else {
        std::vector<std::pair<std::string, std::string>> docs;
        for (const auto& [key, text] : texts) docs.emplace_back(key, text);
        lexical::Bm25Params params;
        params.min_df = static_cast<uint32_t>(cfg.get_int("rag.min_df", 1));
        index = lexical::LexicalIndex::build(docs, params);
    }

    rag::IndexHandles handles;
    handles.article_index = &*index;
    handles.fetch_article_text = [&texts](const std::string& key) {
        const auto it = texts.find(key);
        if (it == texts.end()) throw IoError("no article text for " + key);
        return it->second;
    };

    auto llm = make_llm(llm_spec, window);
    rag::ChainConfig chain_config;
    if (map_reduce) chain_config.strategy = rag::RefineStrategy::MAP_REDUCE;
    // prefer the versioned template files when running from a checkout
    rag::PromptTemplates templates;
    if (fs::exists("prompts/query_generation.txt")) {
        templates = rag::PromptTemplates::load("prompts");
        chain_config.templates = &templates;
    }

    const auto trace = rag::run_chain(question, n, *llm, handles, chain_config);
    const auto dumped = trace.to_json().dump();
    if (!trace_path.empty()) write_text(trace_path, dumped + "\n");
    std::cout << dumped << "\n";
    return trace.error ? 1 : 0;
}

// --- eval --------------------------------------------------------------------------

json metrics_to_json(const std::map<std::string, double>& metrics) {
    json j = json::object();
    for (const auto& [k, v] : metrics) j[k] = v;
    return j;
}

void write_metrics_csv(const fs::path& path, const std::map<std::string, double>& metrics) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << "metric,value\n";
    for (const auto& [k, v] : metrics) out << k << "," << v << "\n";
}

std::vector<std::vector<double>> rows_from_json(const json& j) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : j) rows.push_back(r.get<std::vector<double>>());
    return rows;
}

int run_eval(const std::string& task, const std::string& fixture_path, const std::string& ks,
             const std::string& out_json, const std::string& out_csv) {
    std::map<std::string, double> metrics;

    if (task == "infonce") {
        const auto fixture = json::parse(read_file(fixture_path));
        const auto imgs = rows_from_json(fixture.at("z_image"));
        const auto txts = rows_from_json(fixture.at("z_text"));
        eval::ContrastiveBatch batch;
        batch.n = imgs.size();
        batch.dims = imgs.empty() ? 0 : imgs[0].size();
        batch.tau = fixture.value("tau", 0.07);
        for (const auto& r : imgs) batch.z_image.insert(batch.z_image.end(), r.begin(), r.end());
        for (const auto& r : txts) batch.z_text.insert(batch.z_text.end(), r.begin(), r.end());
        const auto loss = eval::infonce_loss(batch);
        metrics["loss_image_to_text"] = loss.image_to_text;
        metrics["loss_text_to_image"] = loss.text_to_image;
        metrics["loss"] = loss.total;
    } else if (task == "recall") {
        const auto fixture = json::parse(read_file(fixture_path));
        const auto imgs = rows_from_json(fixture.at("image_embeddings"));
        const auto caps = rows_from_json(fixture.at("caption_embeddings"));
        eval::RetrievalSet set;
        set.n = imgs.size();
        set.dims = imgs.empty() ? 0 : imgs[0].size();
        for (const auto& r : imgs)
            set.image_embeddings.insert(set.image_embeddings.end(), r.begin(), r.end());
        for (const auto& r : caps)
            set.caption_embeddings.insert(set.caption_embeddings.end(), r.begin(), r.end());
        std::istringstream klist(ks);
        std::string cell;
        while (std::getline(klist, cell, ',')) {
            const size_t k = std::min<size_t>(std::stoull(cell), set.n);
            metrics["recall_i2t@" + cell] = eval::recall_at_k(set, k, eval::Direction::I2T);
            metrics["recall_t2i@" + cell] = eval::recall_at_k(set, k, eval::Direction::T2I);
        }
    } else if (task == "vqa") {
        const auto fixture = json::parse(read_file(fixture_path));
        std::vector<std::vector<eval::ClosedVqaInstance>> variants;
        for (const auto& jv : fixture.at("variants")) {
            std::vector<eval::ClosedVqaInstance> variant;
            for (const auto& ji : jv) {
                eval::ClosedVqaInstance inst;
                inst.image_embedding = ji.at("image_embedding").get<std::vector<double>>();
                const auto candidates = rows_from_json(ji.at("candidate_embeddings"));
                inst.n_candidates = candidates.size();
                for (const auto& c : candidates)
                    inst.candidate_embeddings.insert(inst.candidate_embeddings.end(), c.begin(),
                                                     c.end());
                inst.correct_index = ji.at("correct_index").get<size_t>();
                variant.push_back(std::move(inst));
            }
            variants.push_back(std::move(variant));
        }
        metrics["accuracy"] = eval::classification_accuracy(variants, variants.size());
    } else if (task == "exact-match") {
        const auto fixture = json::parse(read_file(fixture_path));
        const auto preds = fixture.at("predictions").get<std::vector<std::string>>();
        const auto refs = fixture.at("references").get<std::vector<std::string>>();
        metrics["accuracy"] = eval::exact_match_accuracy(preds, refs);
    } else if (task == "lm-loss") {
        const auto fixture = json::parse(read_file(fixture_path));
        const auto probs = fixture.at("probabilities").get<std::vector<double>>();
        metrics["loss"] = eval::causal_lm_loss(probs);
    } else if (task == "score-sheets") {
        const auto summary = eval::aggregate_score_sheets(read_file(fixture_path));
        metrics["accuracy"] = summary.overall;
        metrics["rows"] = static_cast<double>(summary.total_rows);
        for (const auto& [evaluator, acc] : summary.per_evaluator)
            metrics["accuracy_" + evaluator] = acc;
    } else {
        throw InvalidArgument("unknown eval task: " + task);
    }

    const auto out = metrics_to_json(metrics);
    if (!out_json.empty()) write_text(out_json, out.dump() + "\n");
    if (!out_csv.empty()) write_metrics_csv(out_csv, metrics);
    std::cout << out.dump() << "\n";
    return 0;
}

// --- bench-latency ---------------------------------------------------------------------

int run_bench_latency(size_t n_docs, size_t max_len, size_t reps, uint64_t seed,
                      const std::string& out_path) {
    SplitMix64 rng(seed);
    std::vector<std::string> vocabulary;
    for (size_t i = 0; i < 2000; ++i) vocabulary.push_back("term" + std::to_string(i));

    std::vector<std::pair<std::string, std::string>> docs;
    docs.reserve(n_docs);
    for (size_t i = 0; i < n_docs; ++i) {
        std::string body;
        for (int t = 0; t < 100; ++t) {
            if (t) body.push_back(' ');
            body += vocabulary[rng.next_below(vocabulary.size())];
        }
        docs.emplace_back("d" + std::to_string(i), std::move(body));
    }
    lexical::Bm25Params params;
    params.min_df = 5;
    const auto index = lexical::LexicalIndex::build(docs, params);
    info("benchmark index built: " + std::to_string(index.vocabulary().size()) + " terms");

    std::vector<service::LatencyRecord> log;
    for (size_t len = 1; len <= max_len; len = len < 8 ? len + 1 : len * 2) {
        for (size_t rep = 0; rep < reps; ++rep) {
            std::string query;
            for (size_t t = 0; t < len; ++t) {
                if (t) query.push_back(' ');
                query += vocabulary[rng.next_below(vocabulary.size())];
            }
            const auto start = std::chrono::steady_clock::now();
            const auto hits = index.query(query, 100);
            const auto end = std::chrono::steady_clock::now();
            (void)hits;
            const double ms =
                std::chrono::duration_cast<std::chrono::nanoseconds>(end - start).count() / 1e6;
            log.push_back({service::Scope::CAPTIONS, len, ms});
        }
    }
    const auto report = service::latency_report(log);
    const auto out = report.to_json();
    if (!out_path.empty()) write_text(out_path, out.dump() + "\n");
    std::cout << out.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"scilit: scientific-literature corpus, retrieval, and evaluation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name

    std::string config_path;
    uint64_t global_seed = 0;
    app.add_option("--config", config_path, "key = value config file");
    app.add_option("--seed", global_seed, "global seed fallback");
    app.add_flag("--verbose", g_verbose, "verbose logging to stderr");
    app.add_flag("--json-logs", g_json_logs, "structured JSON log lines on stderr");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse nXML articles into a corpus JSONL");
    std::string in_file_list, in_nxml_dir, in_entrez, in_out;
    ingest->add_option("--file-list", in_file_list, "file-list CSV");
    ingest->add_option("--nxml-dir", in_nxml_dir, "directory of .nxml files")->required();
    ingest->add_option("--entrez", in_entrez, "entrez-like records JSON fixture");
    ingest->add_option("--out", in_out, "output corpus JSONL")->required();

    // shard
    auto* shard_cmd = app.add_subcommand("shard", "serialize and stream pair shards");
    shard_cmd->require_subcommand(1);
    auto* shard_write = shard_cmd->add_subcommand("write", "write tar shards from a corpus");
    std::string sw_in, sw_out, sw_images;
    uint64_t sw_size = shard::kDefaultRecordsPerShard;
    shard_write->add_option("--in", sw_in, "corpus JSONL")->required();
    shard_write->add_option("--out", sw_out, "shard output directory")->required();
    shard_write->add_option("--size", sw_size, "records per shard");
    shard_write->add_option("--images-root", sw_images, "directory with image files");

    auto* shard_stream = shard_cmd->add_subcommand("stream", "stream records from shards");
    std::string ss_manifest, ss_filter;
    uint64_t ss_limit = 0;
    bool ss_stats = false;
    shard_stream->add_option("--manifest", ss_manifest, "manifest.json path")->required();
    shard_stream->add_option("--filter", ss_filter, "filter expression");
    shard_stream->add_option("--limit", ss_limit, "stop after N records");
    shard_stream->add_flag("--stats", ss_stats, "print summary instead of records");

    auto* shard_instr =
        shard_cmd->add_subcommand("instructions", "generate instruction records");
    std::string si_manifest, si_brief, si_detailed, si_out;
    uint64_t si_seed = 0;
    bool si_seed_set = false;
    shard_instr->add_option("--manifest", si_manifest)->required();
    shard_instr->add_option("--brief", si_brief, "brief instruction pool file")->required();
    shard_instr->add_option("--detailed", si_detailed, "detailed instruction pool file")
        ->required();
    shard_instr->add_option_function<uint64_t>(
        "--seed",
        [&](const uint64_t& v) {
            si_seed = v;
            si_seed_set = true;
        },
        "sampling seed");
    shard_instr->add_option("--out", si_out)->required();

    // annotate
    auto* annotate_cmd = app.add_subcommand("annotate", "embedding, clustering, labels");
    annotate_cmd->require_subcommand(1);
    auto* ann_embed = annotate_cmd->add_subcommand("embed", "embed pairs with the hash stub");
    std::string ae_manifest, ae_out;
    size_t ae_dim = 64;
    uint64_t ae_seed = 0;
    ann_embed->add_option("--manifest", ae_manifest)->required();
    ann_embed->add_option("--out", ae_out)->required();
    ann_embed->add_option("--dim", ae_dim, "embedding dimension");
    ann_embed->add_option("--seed", ae_seed, "embedder seed")->required();

    auto* ann_cluster = annotate_cmd->add_subcommand("cluster", "PCA + K-means over embeddings");
    std::string ac_emb, ac_out = "clustering.json", ac_sheets;
    size_t ac_k = 2000, ac_pca = 25, ac_iters = 100, ac_sample = 30;
    uint64_t ac_seed = 0;
    ann_cluster->add_option("--emb", ac_emb, "embeddings file")->required();
    ann_cluster->add_option("--k", ac_k, "number of clusters");
    ann_cluster->add_option("--pca", ac_pca, "PCA components (0 disables)");
    ann_cluster->add_option("--seed", ac_seed, "clustering seed")->required();
    ann_cluster->add_option("--max-iters", ac_iters, "Lloyd iteration cap");
    ann_cluster->add_option("--sample", ac_sample, "sheet sample size");
    ann_cluster->add_option("--out", ac_out, "clustering JSON output");
    ann_cluster->add_option("--sheets", ac_sheets, "annotation sheets JSON output");

    auto* ann_prop = annotate_cmd->add_subcommand("propagate", "propagate sheet labels");
    std::string ap_clustering, ap_sheets, ap_out;
    ann_prop->add_option("--clustering", ap_clustering)->required();
    ann_prop->add_option("--sheets", ap_sheets)->required();
    ann_prop->add_option("--out", ap_out)->required();

    // index
    auto* index_cmd = app.add_subcommand("index", "build lexical or vector indexes");
    index_cmd->require_subcommand(1);
    auto* index_build = index_cmd->add_subcommand("build", "build an index");
    std::string ib_kind, ib_source = "captions", ib_manifest, ib_corpus, ib_out, ib_emb,
                ib_modality = "IMAGE";
    double ib_k1 = 1.5, ib_b = 0.75;
    uint32_t ib_min_df = 5;
    index_build->add_option("--kind", ib_kind, "lexical | vector")->required();
    index_build->add_option("--source", ib_source, "captions | articles (lexical)");
    index_build->add_option("--manifest", ib_manifest, "shard manifest (captions)");
    index_build->add_option("--corpus", ib_corpus, "corpus JSONL (articles)");
    index_build->add_option("--emb", ib_emb, "embeddings file (vector)");
    index_build->add_option("--modality", ib_modality, "IMAGE | CAPTION (vector)");
    index_build->add_option("--out", ib_out, "output directory")->required();
    index_build->add_option("--k1", ib_k1, "BM25 k1");
    index_build->add_option("--b", ib_b, "BM25 b");
    index_build->add_option("--min-df", ib_min_df, "vocabulary pruning threshold");

    // query
    auto* query_cmd = app.add_subcommand("query", "query indexes directly");
    std::string q_lexical, q_vectors, q_text, q_vector;
    size_t q_k = 10;
    query_cmd->add_option("--lexical", q_lexical, "lexical index directory");
    query_cmd->add_option("--vectors", q_vectors, "vector index directory");
    query_cmd->add_option("--text", q_text, "text query");
    query_cmd->add_option("--vector", q_vector, "comma-separated query vector");
    query_cmd->add_option("--k", q_k, "result count");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "run the search HTTP service");
    int serve_port = -1;
    serve_cmd->add_option("--port", serve_port, "override service.port");

    // rag
    auto* rag_cmd = app.add_subcommand("rag", "retrieval-augmented answering");
    rag_cmd->require_subcommand(1);
    auto* rag_ask = rag_cmd->add_subcommand("ask", "run the 4-step chain");
    std::string ra_question, ra_llm = "mock", ra_corpus, ra_index, ra_trace;
    size_t ra_n = 5, ra_window = 4096;
    bool ra_map_reduce = false;
    rag_ask->add_option("--question", ra_question)->required();
    rag_ask->add_option("--n", ra_n, "articles to retrieve");
    rag_ask->add_option("--llm", ra_llm, "mock | http:host:port[/path]");
    rag_ask->add_option("--corpus", ra_corpus, "articles JSONL")->required();
    rag_ask->add_option("--index", ra_index, "prebuilt article lexical index");
    rag_ask->add_option("--trace", ra_trace, "write the trace JSON here");
    rag_ask->add_option("--window", ra_window, "LLM context window in tokens");
    rag_ask->add_flag("--map-reduce", ra_map_reduce, "map-reduce summarization");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluation metrics");
    eval_cmd->require_subcommand(1);
    auto* eval_run = eval_cmd->add_subcommand("run", "compute a metric from a fixture");
    std::string ev_task, ev_fixture, ev_ks = "1,10,100", ev_out_json, ev_out_csv;
    eval_run->add_option("--task", ev_task,
                         "infonce | recall | vqa | exact-match | lm-loss | score-sheets")
        ->required();
    eval_run->add_option("--fixture", ev_fixture, "fixture file")->required();
    eval_run->add_option("--k", ev_ks, "comma-separated recall cut-offs");
    eval_run->add_option("--out", ev_out_json, "metrics JSON output path");
    eval_run->add_option("--csv", ev_out_csv, "metrics CSV output path");

    // bench-latency
    auto* bench = app.add_subcommand("bench-latency", "query-latency vs token count");
    size_t bl_docs = 10000, bl_max_len = 64, bl_reps = 30;
    uint64_t bl_seed = 1;
    std::string bl_out;
    bench->add_option("--docs", bl_docs, "synthetic corpus size");
    bench->add_option("--max-len", bl_max_len, "maximum query token count");
    bench->add_option("--reps", bl_reps, "queries per length");
    bench->add_option("--seed", bl_seed, "benchmark seed");
    bench->add_option("--out", bl_out, "report JSON output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    config::Config cfg;
    try {
        if (!config_path.empty()) cfg = config::Config::parse_file(config_path);

        if (*ingest) return run_ingest(in_file_list, in_nxml_dir, in_entrez, in_out);
        if (*shard_write) return run_shard_write(sw_in, sw_out, sw_size, sw_images);
        if (*shard_stream) return run_shard_stream(ss_manifest, ss_filter, ss_limit, ss_stats);
        if (*shard_instr)
            return run_shard_instructions(si_manifest, si_brief, si_detailed,
                                          si_seed_set ? si_seed : global_seed, si_out);
        if (*ann_embed) return run_annotate_embed(ae_manifest, ae_out, ae_dim, ae_seed);
        if (*ann_cluster)
            return run_annotate_cluster(ac_emb, ac_k, ac_pca, ac_seed, ac_iters, ac_sample,
                                        ac_out, ac_sheets);
        if (*ann_prop) return run_annotate_propagate(ap_clustering, ap_sheets, ap_out);
        if (*index_build) {
            if (ib_kind == "lexical")
                return run_index_build_lexical(ib_source, ib_manifest, ib_corpus, ib_out,
                                               {ib_k1, ib_b, ib_min_df});
            if (ib_kind == "vector") return run_index_build_vector(ib_emb, ib_modality, ib_out);
            throw InvalidArgument("unknown index kind: " + ib_kind);
        }
        if (*query_cmd) return run_query(q_lexical, q_vectors, q_text, q_vector, q_k);
        if (*serve_cmd) return run_serve(cfg, serve_port);
        if (*rag_ask)
            return run_rag_ask(cfg, ra_question, ra_n, ra_llm, ra_corpus, ra_index, ra_trace,
                               ra_window, ra_map_reduce);
        if (*eval_run) return run_eval(ev_task, ev_fixture, ev_ks, ev_out_json, ev_out_csv);
        if (*bench) return run_bench_latency(bl_docs, bl_max_len, bl_reps, bl_seed, bl_out);
    } catch (const std::exception& e) {
        if (g_json_logs) {
            std::cerr << json{{"level", "error"}, {"message", e.what()}}.dump() << "\n";
        } else {
            std::cerr << "error: " << e.what() << "\n";
        }
        return 1;
    }
    return 0;
}
