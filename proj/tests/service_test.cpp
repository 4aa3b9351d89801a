#include <doctest.h>

#include <httplib.h>

#include <cmath>
#include <filesystem>
#include <thread>

#include "scilit/annotate.hpp"
#include "scilit/service.hpp"
#include "support/fixtures.hpp"

using namespace scilit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ServiceFixture {
    fs::path dir;
    std::vector<corpus::PairRecord> pairs;
    service::ServiceComponents components;

    ServiceFixture() {
        dir = fs::temp_directory_path() / ("scilit_service_" + std::to_string(::getpid()));
        fs::remove_all(dir);
        fs::create_directories(dir);

        // 20 caption documents
        const char* captions[] = {
            "mitochondria staining in control cells",
            "nuclear staining of cultured cells",
            "chest radiograph scoring rubric",
            "inter reader agreement plot",
            "hematoxylin and eosin section",
            "s100 immunostaining of lesion",
            "genome coverage distribution",
            "variant validation rates",
            "imaging modality breakdown",
            "acquisition parameter table",
            "flow cytometry gating",
            "western blot quantification",
            "confocal stack of neurons",
            "electron micrograph of cristae",
            "liver histology overview",
            "staining platform comparison",
            "mitochondrial dna copy number",
            "immune profiling panel",
            "segmented nuclei masks",
            "lysosome colocalization map",
        };
        for (int i = 0; i < 20; ++i) {
            corpus::PairRecord p;
            p.pair_id = "PMCV" + std::to_string(100 + i) + "_f1";
            p.image_path = "f1.jpg";
            p.caption = captions[i];
            p.article_metadata.accession_id = "PMCV" + std::to_string(100 + i);
            p.article_metadata.license = corpus::License::parse(i % 2 ? "CC-BY" : "CC0");
            p.license = p.article_metadata.license;
            pairs.push_back(std::move(p));
        }

        // captions lexical index
        std::vector<std::pair<std::string, std::string>> docs;
        for (const auto& p : pairs) docs.emplace_back(p.pair_id, p.caption);
        lexical::Bm25Params params;
        params.min_df = 1;
        components.captions_lexical =
            std::make_shared<lexical::LexicalIndex>(lexical::LexicalIndex::build(docs, params));

        // caption vectors via the hash embedder
        annotate::HashEmbedder embedder(16, 7);
        const auto matrix = annotate::embed(pairs, embedder);
        components.captions_vectors = std::make_shared<vec::VectorIndex>(
            vec::VectorIndex::build(matrix, vec::Modality::CAPTION));

        // shards + hydrator
        const auto manifest = shard::write_shards(pairs, dir / "shards", 8);
        components.hydrator = std::make_shared<service::ShardHydrator>(
            manifest, dir / "shards", 2);
    }
    ~ServiceFixture() { fs::remove_all(dir); }
};

}  // namespace

// --- latency report ------------------------------------------------------------------

TEST_CASE("latency_report: exact linear data gives R = 1") {
    std::vector<service::LatencyRecord> log;
    for (size_t tokens = 1; tokens <= 8; ++tokens)
        for (int rep = 0; rep < 3; ++rep)
            log.push_back({service::Scope::CAPTIONS, tokens, 2.0 * double(tokens)});
    const auto report = service::latency_report(log);
    CHECK(report.pearson_r == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_FALSE(report.degenerate);
    CHECK(report.rows.size() == 8);
    for (const auto& row : report.rows) CHECK(row.samples == 3);
}

TEST_CASE("latency_report: constant latency is degenerate with NaN R") {
    std::vector<service::LatencyRecord> log;
    for (size_t tokens : {1, 2, 3})
        log.push_back({service::Scope::CAPTIONS, tokens, 5.0});
    const auto report = service::latency_report(log);
    CHECK(report.slope == 0.0);
    CHECK(std::isnan(report.pearson_r));
    CHECK(report.degenerate);
}

TEST_CASE("latency_report: fewer than two distinct token counts is insufficient") {
    std::vector<service::LatencyRecord> log = {
        {service::Scope::CAPTIONS, 4, 1.0}, {service::Scope::CAPTIONS, 4, 2.0}};
    CHECK_THROWS_AS(service::latency_report(log), service::InsufficientData);
}

TEST_CASE("latency_report: stderr computed from per-group samples") {
    std::vector<service::LatencyRecord> log = {
        {service::Scope::CAPTIONS, 1, 1.0},
        {service::Scope::CAPTIONS, 1, 3.0},
        {service::Scope::CAPTIONS, 2, 10.0},
    };
    const auto report = service::latency_report(log);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].mean_ms == doctest::Approx(2.0));
    // sample stddev sqrt(2), stderr = sqrt(2)/sqrt(2) = 1
    CHECK(report.rows[0].stderr_ms == doctest::Approx(1.0));
    CHECK(report.rows[1].stderr_ms == 0.0);
}

// --- request validation ----------------------------------------------------------------

TEST_CASE("search request: schema violations and unknown scope") {
    CHECK_THROWS_AS(service::SearchRequest::from_json(json::parse(
                        R"({"scope":"CAPTIONS"})")),
                    service::RequestError);
    CHECK_THROWS_AS(service::SearchRequest::from_json(json::parse(
                        R"({"scope":"CAPTIONS","text":"x","k":0})")),
                    service::RequestError);
    try {
        service::SearchRequest::from_json(json::parse(R"({"scope":"THINGS","text":"x"})"));
        FAIL("expected RequestError");
    } catch (const service::RequestError& e) {
        CHECK(e.status() == 404);
    }
}

// --- core handlers ------------------------------------------------------------------------

TEST_CASE("health reports fixture stats") {
    ServiceFixture fx;
    service::SearchService svc(fx.components);
    const auto h = svc.health();
    CHECK(h["status"] == "ok");
    CHECK(h["n_docs"] == 20);
    CHECK(h["vector_count"] == 20);
    CHECK(h["scopes"]["captions"]["n_docs"] == 20);
}

TEST_CASE("text-only caption search equals the direct lexical query") {
    ServiceFixture fx;
    service::SearchService svc(fx.components);
    service::SearchRequest req;
    req.scope = service::Scope::CAPTIONS;
    req.text = "staining cells";
    req.k = 10;
    const auto response = svc.handle_search(req);
    const auto direct = fx.components.captions_lexical->query("staining cells", 10);
    REQUIRE(response.hits.size() == direct.size());
    for (size_t i = 0; i < direct.size(); ++i) {
        CHECK(response.hits[i].key == direct[i].first);
        CHECK(response.hits[i].lexical_rank == i + 1);
    }
    CHECK(response.latency_ms > 0);
    CHECK(response.token_count == 2);
}

TEST_CASE("repeated identical queries return identical hit lists") {
    ServiceFixture fx;
    service::SearchService svc(fx.components);
    service::SearchRequest req;
    req.scope = service::Scope::CAPTIONS;
    req.text = "staining";
    req.k = 5;
    const auto a = svc.handle_search(req);
    const auto b = svc.handle_search(req);
    REQUIRE(a.hits.size() == b.hits.size());
    for (size_t i = 0; i < a.hits.size(); ++i) {
        CHECK(a.hits[i].key == b.hits[i].key);
        CHECK(a.hits[i].fused_score == b.hits[i].fused_score);
    }
}

TEST_CASE("hydrate=true attaches records matching the shard contents") {
    ServiceFixture fx;
    service::SearchService svc(fx.components);
    service::SearchRequest req;
    req.scope = service::Scope::CAPTIONS;
    req.text = "staining";
    req.k = 5;
    req.hydrate = true;
    const auto response = svc.handle_search(req);
    REQUIRE(!response.hits.empty());
    for (const auto& hit : response.hits) {
        REQUIRE(hit.record.has_value());
        // compare against the record found by streaming the shards
        shard::FilterPredicate filter = shard::FilterPredicate::parse("pair_id=" + hit.key);
        const auto direct = shard::read_all(fx.dir / "shards" / "manifest.json", filter);
        REQUIRE(direct.size() == 1);
        CHECK(*hit.record == corpus::to_json(direct[0]));
    }
}

TEST_CASE("vector queries honor dimension checks with 400-class errors") {
    ServiceFixture fx;
    service::SearchService svc(fx.components);
    service::SearchRequest req;
    req.scope = service::Scope::CAPTIONS;
    req.vector = std::vector<double>{1.0, 2.0};  // wrong dimension (16 expected)
    try {
        svc.handle_search(req);
        FAIL("expected RequestError");
    } catch (const service::RequestError& e) {
        CHECK(e.status() == 400);
    }
}

TEST_CASE("scope without the needed index rejects the request") {
    ServiceFixture fx;
    service::SearchService svc(fx.components);
    service::SearchRequest req;
    req.scope = service::Scope::ARTICLES;  // no articles index in this fixture
    req.text = "staining";
    CHECK_THROWS_AS(svc.handle_search(req), service::RequestError);
}

TEST_CASE("hydrator: fetch equals streamed record, unknown key is nullopt") {
    ServiceFixture fx;
    const auto rec = fx.components.hydrator->fetch(fx.pairs[7].pair_id);
    REQUIRE(rec.has_value());
    CHECK(*rec == fx.pairs[7]);
    CHECK_FALSE(fx.components.hydrator->fetch("nope").has_value());
}

TEST_CASE("load_components: missing index directory raises IndexLoadError") {
    config::Config cfg;
    cfg.set("index.captions_lexical", "/nonexistent/path");
    CHECK_THROWS_AS(service::load_components(cfg), service::IndexLoadError);
    config::Config empty;
    CHECK_THROWS_AS(service::load_components(empty), service::IndexLoadError);
}

// --- HTTP layer --------------------------------------------------------------------------

TEST_CASE("http server: health, search, record, metrics round trip") {
    ServiceFixture fx;
    service::SearchService svc(fx.components);
    service::HttpServer server(svc, "127.0.0.1", 0);
    server.start();

    httplib::Client client("127.0.0.1", server.port());

    auto health = client.Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(json::parse(health->body)["n_docs"] == 20);

    json body;
    body["scope"] = "CAPTIONS";
    body["text"] = "staining cells";
    body["k"] = 5;
    auto search = client.Post("/search", body.dump(), "application/json");
    REQUIRE(search);
    CHECK(search->status == 200);
    const auto parsed = json::parse(search->body);
    CHECK(parsed["schema_version"] == 1);
    CHECK(!parsed["hits"].empty());
    CHECK(parsed["token_count"] == 2);

    // unknown scope -> 404; bad k -> 400
    body["scope"] = "THINGS";
    CHECK(client.Post("/search", body.dump(), "application/json")->status == 404);
    body["scope"] = "CAPTIONS";
    body["k"] = 0;
    CHECK(client.Post("/search", body.dump(), "application/json")->status == 400);

    const auto rec = client.Get(("/record/" + fx.pairs[0].pair_id).c_str());
    REQUIRE(rec);
    CHECK(rec->status == 200);
    CHECK(json::parse(rec->body)["record"]["pair_id"] == fx.pairs[0].pair_id);
    CHECK(client.Get("/record/missing")->status == 404);

    const auto metrics = client.Get("/metrics");
    REQUIRE(metrics);
    CHECK(metrics->status == 200);

    server.stop();
}

TEST_CASE("http server: concurrent identical requests agree") {
    ServiceFixture fx;
    service::SearchService svc(fx.components);
    service::HttpServer server(svc, "127.0.0.1", 0);
    server.start();

    json body;
    body["scope"] = "CAPTIONS";
    body["text"] = "staining";
    body["k"] = 10;
    const std::string payload = body.dump();

    std::vector<std::string> hit_lists(8);
    std::vector<std::thread> threads;
    for (size_t t = 0; t < hit_lists.size(); ++t) {
        threads.emplace_back([&, t] {
            httplib::Client client("127.0.0.1", server.port());
            const auto res = client.Post("/search", payload, "application/json");
            if (res && res->status == 200) {
                json keys = json::array();
                for (const auto& h : json::parse(res->body)["hits"]) keys.push_back(h["key"]);
                hit_lists[t] = keys.dump();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (const auto& hits : hit_lists) CHECK(hits == hit_lists[0]);
    CHECK_FALSE(hit_lists[0].empty());

    server.stop();
}
