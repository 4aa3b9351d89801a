#include "scilit/lexical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "scilit/binfile.hpp"
#include "scilit/text.hpp"

namespace scilit::lexical {

using nlohmann::json;

double idf(uint64_t n_docs, uint64_t df) {
    return std::log(1.0 + (static_cast<double>(n_docs) - static_cast<double>(df) + 0.5) /
                              (static_cast<double>(df) + 0.5));
}

double partial_score(double idf_value, uint64_t tf, uint64_t doc_len, double avg_doc_len,
                     const Bm25Params& params) {
    const double tf_d = static_cast<double>(tf);
    const double norm_len = avg_doc_len > 0 ? static_cast<double>(doc_len) / avg_doc_len : 0.0;
    return idf_value * tf_d * (params.k1 + 1.0) /
           (tf_d + params.k1 * (1.0 - params.b + params.b * norm_len));
}

std::optional<uint32_t> Vocabulary::id_of(std::string_view term) const {
    const auto it = std::lower_bound(terms.begin(), terms.end(), term);
    if (it == terms.end() || *it != term) return std::nullopt;
    return static_cast<uint32_t>(it - terms.begin());
}

LexicalIndex LexicalIndex::build(std::span<const std::pair<std::string, std::string>> docs,
                                 const Bm25Params& params) {
    LexicalIndex index;
    index.params_ = params;

    std::unordered_set<std::string> key_set;
    std::vector<uint64_t> doc_lens;
    doc_lens.reserve(docs.size());
    // postings per term, appended in doc order so doc ids come out ascending
    std::map<std::string, std::vector<std::pair<uint32_t, uint32_t>>> postings;

    uint64_t total_len = 0;
    for (size_t doc_id = 0; doc_id < docs.size(); ++doc_id) {
        const auto& [key, text] = docs[doc_id];
        if (!key_set.insert(key).second) throw DuplicateKey("duplicate document key: " + key);
        index.doc_keys_.push_back(key);

        const auto tokens = text::tokenize(text);
        doc_lens.push_back(tokens.size());
        total_len += tokens.size();

        std::unordered_map<std::string, uint32_t> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, count] : tf)
            postings[term].emplace_back(static_cast<uint32_t>(doc_id), count);
    }
    index.avg_doc_len_ = docs.empty() ? 0.0
                                      : static_cast<double>(total_len) /
                                            static_cast<double>(docs.size());

    // vocabulary: terms meeting min_df, id order = lexicographic (std::map)
    index.vocab_.min_df = params.min_df;
    auto& matrix = index.matrix_;
    matrix.n_docs = docs.size();
    matrix.offsets.push_back(0);
    for (auto& [term, plist] : postings) {
        if (plist.size() < params.min_df) continue;
        index.vocab_.terms.push_back(term);
        index.vocab_.doc_freq.push_back(static_cast<uint32_t>(plist.size()));
        const double term_idf = idf(docs.size(), plist.size());
        for (const auto& [doc_id, tf] : plist) {
            matrix.doc_ids.push_back(doc_id);
            matrix.scores.push_back(
                partial_score(term_idf, tf, doc_lens[doc_id], index.avg_doc_len_, params));
        }
        matrix.offsets.push_back(matrix.doc_ids.size());
    }
    return index;
}

std::vector<std::pair<std::string, double>> LexicalIndex::query(std::string_view text,
                                                                size_t top_k) const {
    if (top_k == 0) throw InvalidArgument("query: top_k must be >= 1");
    const auto tokens = text::tokenize(text);

    std::vector<double> acc(doc_keys_.size(), 0.0);
    std::vector<uint32_t> touched;
    for (const auto& token : tokens) {
        const auto id = vocab_.id_of(token);
        if (!id) continue;
        const uint64_t begin = matrix_.offsets[*id];
        const uint64_t end = matrix_.offsets[*id + 1];
        for (uint64_t p = begin; p < end; ++p) {
            const uint32_t doc = matrix_.doc_ids[p];
            if (acc[doc] == 0.0) touched.push_back(doc);
            acc[doc] += matrix_.scores[p];
        }
    }

    auto better = [&](uint32_t a, uint32_t b) {
        if (acc[a] != acc[b]) return acc[a] > acc[b];
        return doc_keys_[a] < doc_keys_[b];
    };
    const size_t take = std::min(top_k, touched.size());
    std::partial_sort(touched.begin(), touched.begin() + static_cast<long>(take), touched.end(),
                      better);
    std::vector<std::pair<std::string, double>> results;
    results.reserve(take);
    for (size_t i = 0; i < take; ++i)
        results.emplace_back(doc_keys_[touched[i]], acc[touched[i]]);
    return results;
}

namespace {
constexpr char kMatrixMagic[8] = {'S', 'L', 'B', 'M', '2', '5', 'S', 'M'};
constexpr int kIndexSchemaVersion = 1;
}  // namespace

void LexicalIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);

    json vocab;
    vocab["min_df"] = vocab_.min_df;
    json terms = json::array();
    for (size_t i = 0; i < vocab_.terms.size(); ++i)
        terms.push_back(json::array({vocab_.terms[i], vocab_.doc_freq[i]}));
    vocab["terms"] = std::move(terms);
    {
        std::ofstream out(dir / "vocab.json", std::ios::trunc);
        if (!out) throw IoError("cannot write vocab.json");
        out << vocab.dump() << "\n";
    }

    json meta;
    meta["schema_version"] = kIndexSchemaVersion;
    meta["k1"] = params_.k1;
    meta["b"] = params_.b;
    meta["min_df"] = params_.min_df;
    meta["n_docs"] = doc_keys_.size();
    meta["n_terms"] = vocab_.terms.size();
    meta["avg_doc_len"] = avg_doc_len_;
    meta["doc_keys"] = doc_keys_;
    {
        std::ofstream out(dir / "meta.json", std::ios::trunc);
        if (!out) throw IoError("cannot write meta.json");
        out << meta.dump() << "\n";
    }

    std::vector<std::byte> payload;
    payload.reserve(24 + matrix_.offsets.size() * 8 + matrix_.doc_ids.size() * 8);
    binfile::put_u64(payload, vocab_.terms.size());
    binfile::put_u64(payload, matrix_.n_docs);
    binfile::put_u64(payload, matrix_.doc_ids.size());
    for (uint64_t v : matrix_.offsets) binfile::put_u64(payload, v);
    for (uint32_t v : matrix_.doc_ids) binfile::put_u32(payload, v);
    for (double v : matrix_.scores) binfile::put_f32(payload, static_cast<float>(v));
    binfile::write_envelope(dir / "matrix.bin", kMatrixMagic, payload);
}

LexicalIndex LexicalIndex::load(const std::filesystem::path& dir, size_t chunk_size) {
    LexicalIndex index;

    json meta;
    {
        std::ifstream in(dir / "meta.json");
        if (!in) throw IoError("cannot read meta.json in " + dir.string());
        in >> meta;
    }
    const int version = meta.value("schema_version", -1);
    if (version != kIndexSchemaVersion)
        throw VersionMismatch("lexical index schema_version " + std::to_string(version) +
                              " unsupported");
    index.params_.k1 = meta.at("k1").get<double>();
    index.params_.b = meta.at("b").get<double>();
    index.params_.min_df = meta.at("min_df").get<uint32_t>();
    index.avg_doc_len_ = meta.at("avg_doc_len").get<double>();
    index.doc_keys_ = meta.at("doc_keys").get<std::vector<std::string>>();

    json vocab;
    {
        std::ifstream in(dir / "vocab.json");
        if (!in) throw IoError("cannot read vocab.json in " + dir.string());
        in >> vocab;
    }
    index.vocab_.min_df = vocab.value("min_df", index.params_.min_df);
    for (const auto& entry : vocab.at("terms")) {
        index.vocab_.terms.push_back(entry.at(0).get<std::string>());
        index.vocab_.doc_freq.push_back(entry.at(1).get<uint32_t>());
    }

    const auto payload = binfile::read_envelope(dir / "matrix.bin", kMatrixMagic, chunk_size);
    binfile::Cursor cur(payload);
    const uint64_t n_terms = cur.u64();
    const uint64_t n_docs = cur.u64();
    const uint64_t nnz = cur.u64();
    if (n_terms != index.vocab_.terms.size())
        throw VersionMismatch("matrix.bin term count disagrees with vocab.json");
    if (n_docs != index.doc_keys_.size())
        throw VersionMismatch("matrix.bin doc count disagrees with meta.json");
    auto& matrix = index.matrix_;
    matrix.n_docs = n_docs;
    matrix.offsets.resize(n_terms + 1);
    for (auto& v : matrix.offsets) v = cur.u64();
    matrix.doc_ids.resize(nnz);
    for (auto& v : matrix.doc_ids) v = cur.u32();
    matrix.scores.resize(nnz);
    for (auto& v : matrix.scores) v = cur.f32();
    if (cur.remaining() != 0) throw IoError("matrix.bin has trailing bytes");
    return index;
}

}  // namespace scilit::lexical
