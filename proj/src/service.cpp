#include "scilit/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "scilit/text.hpp"

namespace scilit::service {

using nlohmann::json;

std::string to_string(Scope scope) {
    switch (scope) {
        case Scope::CAPTIONS: return "CAPTIONS";
        case Scope::ARTICLES: return "ARTICLES";
        case Scope::IMAGES: return "IMAGES";
    }
    return "CAPTIONS";
}

Scope scope_from_string(const std::string& s) {
    if (s == "CAPTIONS" || s == "captions") return Scope::CAPTIONS;
    if (s == "ARTICLES" || s == "articles") return Scope::ARTICLES;
    if (s == "IMAGES" || s == "images") return Scope::IMAGES;
    throw RequestError(404, "unknown scope: " + s);
}

SearchRequest SearchRequest::from_json(const json& j) {
    SearchRequest r;
    if (!j.contains("scope")) throw RequestError(400, "missing field: scope");
    r.scope = scope_from_string(j["scope"].get<std::string>());
    if (j.contains("text") && !j["text"].is_null()) r.text = j["text"].get<std::string>();
    if (j.contains("vector") && !j["vector"].is_null())
        r.vector = j["vector"].get<std::vector<double>>();
    if (j.contains("k")) {
        if (!j["k"].is_number_integer() || j["k"].get<int64_t>() < 1)
            throw RequestError(400, "k must be an integer >= 1");
        r.k = j["k"].get<size_t>();
    }
    r.hydrate = j.value("hydrate", false);
    if (!r.text && !r.vector) throw RequestError(400, "request needs text or vector");
    return r;
}

json SearchResponse::to_json() const {
    json hits_json = json::array();
    for (const auto& h : hits) {
        json jh;
        jh["key"] = h.key;
        jh["fused_score"] = h.fused_score;
        if (h.lexical_rank) jh["lexical_rank"] = *h.lexical_rank;
        if (h.vector_rank) jh["vector_rank"] = *h.vector_rank;
        if (h.record) jh["record"] = *h.record;
        hits_json.push_back(std::move(jh));
    }
    return json{{"schema_version", kApiSchemaVersion},
                {"hits", std::move(hits_json)},
                {"latency_ms", latency_ms},
                {"token_count", token_count}};
}

// --- latency report ---------------------------------------------------------------

LatencyReport latency_report(std::span<const LatencyRecord> log) {
    std::map<size_t, std::vector<double>> grouped;
    for (const auto& rec : log) grouped[rec.token_count].push_back(rec.latency_ms);
    if (grouped.size() < 2)
        throw InsufficientData("latency report needs >= 2 distinct token counts, have " +
                               std::to_string(grouped.size()));

    LatencyReport report;
    for (const auto& [tokens, values] : grouped) {
        LatencyRow row;
        row.token_count = tokens;
        row.samples = values.size();
        double sum = 0;
        for (double v : values) sum += v;
        row.mean_ms = sum / static_cast<double>(values.size());
        if (values.size() > 1) {
            double ss = 0;
            for (double v : values) ss += (v - row.mean_ms) * (v - row.mean_ms);
            const double stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
            row.stderr_ms = stddev / std::sqrt(static_cast<double>(values.size()));
        }
        report.rows.push_back(row);
    }

    // least squares of mean_ms on token_count, one point per distinct count
    const double n = static_cast<double>(report.rows.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (const auto& row : report.rows) {
        const double x = static_cast<double>(row.token_count);
        sx += x;
        sy += row.mean_ms;
        sxx += x * x;
        sxy += x * row.mean_ms;
        syy += row.mean_ms * row.mean_ms;
    }
    const double var_x = sxx - sx * sx / n;
    const double var_y = syy - sy * sy / n;
    const double cov = sxy - sx * sy / n;
    if (var_x <= 0 || var_y <= 0) {
        report.slope = 0;
        report.intercept = sy / n;
        report.pearson_r = std::numeric_limits<double>::quiet_NaN();
        report.degenerate = true;
    } else {
        report.slope = cov / var_x;
        report.intercept = (sy - report.slope * sx) / n;
        report.pearson_r = cov / std::sqrt(var_x * var_y);
    }
    return report;
}

json LatencyReport::to_json() const {
    json rows_json = json::array();
    for (const auto& row : rows)
        rows_json.push_back(json{{"token_count", row.token_count},
                                 {"mean_ms", row.mean_ms},
                                 {"stderr_ms", row.stderr_ms},
                                 {"samples", row.samples}});
    json j;
    j["rows"] = std::move(rows_json);
    j["slope"] = slope;
    j["intercept"] = intercept;
    j["degenerate"] = degenerate;
    if (std::isnan(pearson_r)) j["pearson_r"] = nullptr;
    else j["pearson_r"] = pearson_r;
    return j;
}

// --- hydrator ---------------------------------------------------------------------

ShardHydrator::ShardHydrator(shard::ShardManifest manifest, std::filesystem::path base_dir,
                             size_t max_open_files)
    : manifest_(std::move(manifest)),
      base_dir_(std::move(base_dir)),
      max_open_files_(std::max<size_t>(1, max_open_files)) {}

void ShardHydrator::build_location_index() {
    for (uint32_t s = 0; s < manifest_.shard_paths.size(); ++s) {
        tar::Reader reader(base_dir_ / manifest_.shard_paths[s]);
        while (auto member = reader.next()) {
            if (member->name.size() > 5 &&
                member->name.compare(member->name.size() - 5, 5, ".json") == 0) {
                const auto key = member->name.substr(0, member->name.size() - 5);
                locations_[key] = {s, reader.last_data_offset(), member->data.size()};
            }
        }
    }
    indexed_ = true;
}

std::string ShardHydrator::read_at(const std::filesystem::path& path, uint64_t offset,
                                   uint64_t size) {
    // LRU over open streams, bounded by max_open_files_
    const auto key = path.string();
    std::ifstream* stream = nullptr;
    for (auto it = open_files_.begin(); it != open_files_.end(); ++it) {
        if (it->first == key) {
            open_files_.splice(open_files_.begin(), open_files_, it);
            stream = open_files_.front().second.get();
            break;
        }
    }
    if (!stream) {
        auto file = std::make_unique<std::ifstream>(path, std::ios::binary);
        if (!*file) throw IoError("hydrator: cannot open shard " + key);
        open_files_.emplace_front(key, std::move(file));
        stream = open_files_.front().second.get();
        while (open_files_.size() > max_open_files_) open_files_.pop_back();
    }
    stream->clear();
    stream->seekg(static_cast<std::streamoff>(offset));
    std::string data(size, '\0');
    stream->read(data.data(), static_cast<std::streamsize>(size));
    if (static_cast<uint64_t>(stream->gcount()) != size)
        throw IoError("hydrator: short read from " + key);
    return data;
}

std::optional<corpus::PairRecord> ShardHydrator::fetch(const std::string& key) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (!indexed_) build_location_index();
    const auto it = locations_.find(key);
    if (it == locations_.end()) return std::nullopt;
    const auto& loc = it->second;
    const auto bytes =
        read_at(base_dir_ / manifest_.shard_paths[loc.shard], loc.offset, loc.size);
    try {
        return corpus::pair_from_json(json::parse(bytes));
    } catch (const std::exception& e) {
        throw shard::CorruptShard("hydrated record " + key + " is invalid: " + e.what());
    }
}

// --- loading ----------------------------------------------------------------------

ServiceComponents load_components(const config::Config& cfg) {
    ServiceComponents c;
    auto lexical_at = [&](const std::string& key) -> std::shared_ptr<lexical::LexicalIndex> {
        const auto path = cfg.get(key);
        if (!path) return nullptr;
        try {
            return std::make_shared<lexical::LexicalIndex>(lexical::LexicalIndex::load(*path));
        } catch (const std::exception& e) {
            throw IndexLoadError("loading " + key + " from " + *path + ": " + e.what());
        }
    };
    auto vectors_at = [&](const std::string& key) -> std::shared_ptr<vec::VectorIndex> {
        const auto path = cfg.get(key);
        if (!path) return nullptr;
        try {
            return std::make_shared<vec::VectorIndex>(vec::VectorIndex::load(*path));
        } catch (const std::exception& e) {
            throw IndexLoadError("loading " + key + " from " + *path + ": " + e.what());
        }
    };
    c.captions_lexical = lexical_at("index.captions_lexical");
    c.articles_lexical = lexical_at("index.articles_lexical");
    c.captions_vectors = vectors_at("index.captions_vectors");
    c.images_vectors = vectors_at("index.images_vectors");
    if (const auto manifest_path = cfg.get("shards.manifest")) {
        try {
            auto manifest = shard::ShardManifest::load(*manifest_path);
            c.hydrator = std::make_shared<ShardHydrator>(
                std::move(manifest), std::filesystem::path(*manifest_path).parent_path(),
                static_cast<size_t>(cfg.get_int("shards.max_open_files", 8)));
        } catch (const std::exception& e) {
            throw IndexLoadError("loading shard manifest " + *manifest_path + ": " + e.what());
        }
    }
    c.fusion.c = cfg.get_double("service.fusion_c", 60.0);
    c.fusion.lexical_weight = cfg.get_double("service.lexical_weight", 1.0);
    c.fusion.vector_weight = cfg.get_double("service.vector_weight", 1.0);
    c.k_max = static_cast<size_t>(cfg.get_int("service.k_max", 1000));
    if (!c.captions_lexical && !c.articles_lexical && !c.captions_vectors && !c.images_vectors)
        throw IndexLoadError("no indexes configured");
    return c;
}

// --- service ----------------------------------------------------------------------

SearchService::SearchService(ServiceComponents components)
    : components_(std::move(components)) {}

SearchResponse SearchService::handle_search(const SearchRequest& request) {
    if (request.k < 1) throw RequestError(400, "k must be >= 1");
    if (request.k > components_.k_max)
        throw RequestError(400, "k exceeds limit of " + std::to_string(components_.k_max));
    if (!request.text && !request.vector)
        throw RequestError(400, "request needs text or vector");

    const lexical::LexicalIndex* lex = nullptr;
    const vec::VectorIndex* vectors = nullptr;
    switch (request.scope) {
        case Scope::CAPTIONS:
            lex = components_.captions_lexical.get();
            vectors = components_.captions_vectors.get();
            break;
        case Scope::ARTICLES:
            lex = components_.articles_lexical.get();
            break;
        case Scope::IMAGES:
            vectors = components_.images_vectors.get();
            break;
    }
    if (request.text && !lex)
        throw RequestError(400, "scope " + to_string(request.scope) +
                                    " has no lexical index for text queries");
    if (request.vector && !vectors)
        throw RequestError(400, "scope " + to_string(request.scope) +
                                    " has no vector index for vector queries");

    const auto start = std::chrono::steady_clock::now();
    SearchResponse response;
    response.token_count = request.text ? text::tokenize(*request.text).size() : 0;

    std::vector<vec::HybridResult> fused;
    try {
        fused = vec::hybrid_query(lex, vectors, request.text, request.vector, request.k,
                                  components_.fusion);
    } catch (const vec::EmptyQuery& e) {
        throw RequestError(400, e.what());
    } catch (const DimensionMismatch& e) {
        throw RequestError(400, e.what());
    } catch (const vec::ZeroVector& e) {
        throw RequestError(400, e.what());
    }

    response.hits.reserve(fused.size());
    for (auto& hit : fused) {
        SearchHit out;
        out.key = std::move(hit.key);
        out.fused_score = hit.fused_score;
        out.lexical_rank = hit.lexical_rank;
        out.vector_rank = hit.vector_rank;
        if (request.hydrate && components_.hydrator) {
            if (auto rec = components_.hydrator->fetch(out.key))
                out.record = corpus::to_json(*rec);
        }
        response.hits.push_back(std::move(out));
    }

    const auto end = std::chrono::steady_clock::now();
    response.latency_ms =
        std::chrono::duration_cast<std::chrono::nanoseconds>(end - start).count() / 1e6;
    if (response.latency_ms <= 0) response.latency_ms = 1e-6;

    {
        std::lock_guard<std::mutex> lock(log_mutex_);
        log_.push_back({request.scope, response.token_count, response.latency_ms});
    }
    return response;
}

json SearchService::health() const {
    json scopes = json::object();
    auto lex_stats = [](const std::shared_ptr<lexical::LexicalIndex>& idx) {
        return json{{"n_docs", idx->doc_count()}, {"n_terms", idx->vocabulary().size()}};
    };
    if (components_.captions_lexical) scopes["captions"] = lex_stats(components_.captions_lexical);
    if (components_.articles_lexical) scopes["articles"] = lex_stats(components_.articles_lexical);
    if (components_.captions_vectors)
        scopes["caption_vectors"] = json{{"vectors", components_.captions_vectors->size()}};
    if (components_.images_vectors)
        scopes["image_vectors"] = json{{"vectors", components_.images_vectors->size()}};

    const auto& primary = components_.captions_lexical ? components_.captions_lexical
                                                       : components_.articles_lexical;
    json j;
    j["status"] = "ok";
    j["schema_version"] = kApiSchemaVersion;
    j["scopes"] = std::move(scopes);
    j["n_docs"] = primary ? primary->doc_count() : 0;
    j["n_terms"] = primary ? primary->vocabulary().size() : 0;
    size_t vector_count = 0;
    if (components_.captions_vectors) vector_count += components_.captions_vectors->size();
    if (components_.images_vectors) vector_count += components_.images_vectors->size();
    j["vector_count"] = vector_count;
    return j;
}

json SearchService::metrics() const {
    std::vector<LatencyRecord> snapshot = latency_log();
    json per_scope = json::object();
    for (const Scope scope : {Scope::CAPTIONS, Scope::ARTICLES, Scope::IMAGES}) {
        std::vector<LatencyRecord> scoped;
        for (const auto& rec : snapshot)
            if (rec.scope == scope) scoped.push_back(rec);
        if (scoped.empty()) continue;
        json entry;
        entry["queries"] = scoped.size();
        try {
            entry["report"] = latency_report(scoped).to_json();
        } catch (const InsufficientData&) {
            entry["report"] = nullptr;
        }
        per_scope[to_string(scope)] = std::move(entry);
    }
    return json{{"schema_version", kApiSchemaVersion}, {"scopes", std::move(per_scope)}};
}

std::optional<corpus::PairRecord> SearchService::record(const std::string& key) {
    if (!components_.hydrator) return std::nullopt;
    return components_.hydrator->fetch(key);
}

std::vector<LatencyRecord> SearchService::latency_log() const {
    std::lock_guard<std::mutex> lock(log_mutex_);
    return log_;
}

// --- HTTP wrapper -----------------------------------------------------------------

class HttpServerImpl {
public:
    httplib::Server server;
    std::thread thread;
};

HttpServer::HttpServer(SearchService& service, std::string bind_address, int port)
    : service_(service),
      bind_address_(std::move(bind_address)),
      port_(port),
      impl_(std::make_unique<HttpServerImpl>()) {}

HttpServer::~HttpServer() { stop(); }

void HttpServer::start() {
    auto& server = impl_->server;

    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(service_.health().dump(), "application/json");
    });

    server.Get("/metrics", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(service_.metrics().dump(), "application/json");
    });

    server.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            json body = json::parse(req.body);
            const auto request = SearchRequest::from_json(body);
            const auto response = service_.handle_search(request);
            res.set_content(response.to_json().dump(), "application/json");
        } catch (const RequestError& e) {
            res.status = e.status();
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        } catch (const json::exception& e) {
            res.status = 400;
            res.set_content(json{{"error", std::string("bad JSON: ") + e.what()}}.dump(),
                            "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
    });

    server.Get(R"(/record/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            const auto record = service_.record(req.matches[1]);
            if (!record) {
                res.status = 404;
                res.set_content(json{{"error", "no record for key"}}.dump(), "application/json");
                return;
            }
            res.set_content(
                json{{"schema_version", kApiSchemaVersion}, {"record", corpus::to_json(*record)}}
                    .dump(),
                "application/json");
        } catch (const std::exception& e) {
            res.status = 500;
            res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
    });

    if (port_ == 0) {
        port_ = server.bind_to_any_port(bind_address_);
        if (port_ < 0) throw BindError("cannot bind to " + bind_address_);
    } else if (!server.bind_to_port(bind_address_, port_)) {
        throw BindError("cannot bind to " + bind_address_ + ":" + std::to_string(port_));
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    server.wait_until_ready();
}

void HttpServer::stop() {
    if (impl_ && impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

}  // namespace scilit::service
