#pragma once

#include <atomic>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "scilit/config.hpp"
#include "scilit/error.hpp"
#include "scilit/lexical.hpp"
#include "scilit/shard.hpp"
#include "scilit/vector_index.hpp"

namespace scilit::service {

class IndexLoadError : public Error {
public:
    using Error::Error;
};

class BindError : public Error {
public:
    using Error::Error;
};

class InsufficientData : public Error {
public:
    using Error::Error;
};

// Maps to an HTTP status for the wire layer; thrown by request handling.
class RequestError : public Error {
public:
    RequestError(int status, const std::string& msg) : Error(msg), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

inline constexpr int kApiSchemaVersion = 1;

// --- requests/responses -----------------------------------------------------------

enum class Scope { CAPTIONS, ARTICLES, IMAGES };

std::string to_string(Scope scope);
Scope scope_from_string(const std::string& s);  // throws RequestError(404)

struct SearchRequest {
    Scope scope = Scope::CAPTIONS;
    std::optional<std::string> text;
    std::optional<std::vector<double>> vector;
    size_t k = 10;
    bool hydrate = false;

    static SearchRequest from_json(const nlohmann::json& j);  // RequestError(400/404)
};

struct SearchHit {
    std::string key;
    double fused_score = 0;
    std::optional<size_t> lexical_rank;
    std::optional<size_t> vector_rank;
    std::optional<nlohmann::json> record;  // hydrated pair/article record
};

struct SearchResponse {
    std::vector<SearchHit> hits;
    double latency_ms = 0;
    size_t token_count = 0;

    nlohmann::json to_json() const;
};

// --- latency instrumentation ---------------------------------------------------------

struct LatencyRecord {
    Scope scope = Scope::CAPTIONS;
    size_t token_count = 0;
    double latency_ms = 0;
};

struct LatencyRow {
    size_t token_count = 0;
    double mean_ms = 0;
    double stderr_ms = 0;
    size_t samples = 0;
};

struct LatencyReport {
    std::vector<LatencyRow> rows;  // ascending token_count
    double slope = 0;
    double intercept = 0;
    double pearson_r = 0;   // NaN when degenerate
    bool degenerate = false;

    nlohmann::json to_json() const;
};

// Aggregates a query log per token count and fits mean_ms against
// token_count by least squares; Pearson R of the fit is reported. Requires
// at least two distinct token counts (InsufficientData otherwise); a
// constant-latency log yields slope 0 and R = NaN with the degenerate flag.
LatencyReport latency_report(std::span<const LatencyRecord> log);

// --- hydration ------------------------------------------------------------------------

// On-demand record lookup in shards: a one-time scan records each .json
// member's location, after which fetches pread exactly one member through a
// bounded LRU pool of open shard handles.
class ShardHydrator {
public:
    ShardHydrator(shard::ShardManifest manifest, std::filesystem::path base_dir,
                  size_t max_open_files = 8);

    std::optional<corpus::PairRecord> fetch(const std::string& key);  // thread-safe

private:
    struct Location {
        uint32_t shard = 0;
        uint64_t offset = 0;
        uint64_t size = 0;
    };
    void build_location_index();
    std::string read_at(const std::filesystem::path& path, uint64_t offset, uint64_t size);

    shard::ShardManifest manifest_;
    std::filesystem::path base_dir_;
    size_t max_open_files_;
    std::mutex mutex_;
    bool indexed_ = false;
    std::map<std::string, Location> locations_;
    std::list<std::pair<std::string, std::unique_ptr<std::ifstream>>> open_files_;  // LRU
};

// --- the service ------------------------------------------------------------------------

struct ServiceComponents {
    std::shared_ptr<lexical::LexicalIndex> captions_lexical;
    std::shared_ptr<lexical::LexicalIndex> articles_lexical;
    std::shared_ptr<vec::VectorIndex> captions_vectors;
    std::shared_ptr<vec::VectorIndex> images_vectors;
    std::shared_ptr<ShardHydrator> hydrator;
    vec::FusionConfig fusion;
    size_t k_max = 1000;
};

// Loads every index named in the config (keys: index.captions_lexical,
// index.articles_lexical, index.captions_vectors, index.images_vectors,
// shards.manifest). Missing keys leave that component disabled; a named
// path that fails to load raises IndexLoadError.
ServiceComponents load_components(const config::Config& cfg);

class SearchService {
public:
    explicit SearchService(ServiceComponents components);

    // Core handler shared by HTTP and in-process callers. Validation
    // failures raise RequestError; rankings are exactly what the underlying
    // indices produce.
    SearchResponse handle_search(const SearchRequest& request);

    nlohmann::json health() const;
    nlohmann::json metrics() const;  // per-scope latency reports
    std::optional<corpus::PairRecord> record(const std::string& key);

    std::vector<LatencyRecord> latency_log() const;
    const ServiceComponents& components() const { return components_; }

private:
    ServiceComponents components_;
    mutable std::mutex log_mutex_;
    std::vector<LatencyRecord> log_;
};

// httplib wrapper: GET /health, POST /search, GET /record/{key},
// GET /metrics. start() binds (BindError on failure) and serves on a
// background thread until stop().
class HttpServer {
public:
    HttpServer(SearchService& service, std::string bind_address, int port);
    ~HttpServer();

    void start();
    void stop();
    int port() const { return port_; }

private:
    SearchService& service_;
    std::string bind_address_;
    int port_;
    std::unique_ptr<class HttpServerImpl> impl_;
};

}  // namespace scilit::service
