#include "scilit/shard.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>

#include "scilit/rng.hpp"
#include "scilit/text.hpp"

namespace scilit::shard {

using corpus::PairRecord;
using nlohmann::json;

// --- manifest -------------------------------------------------------------------

ShardManifest ShardManifest::load(const std::filesystem::path& manifest_file) {
    std::ifstream in(manifest_file);
    if (!in) throw IoError("cannot open manifest: " + manifest_file.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("bad manifest JSON: " + std::string(e.what()));
    }
    ShardManifest m;
    m.schema_version = j.value("schema_version", kSchemaVersion);
    if (m.schema_version != kSchemaVersion)
        throw VersionMismatch("manifest schema_version " + std::to_string(m.schema_version) +
                              " unsupported");
    m.records_per_shard = j.value("records_per_shard", kDefaultRecordsPerShard);
    m.total_records = j.value("total_records", 0ULL);
    m.shard_paths = j.value("shard_paths", std::vector<std::string>{});
    return m;
}

void ShardManifest::save(const std::filesystem::path& manifest_file) const {
    json j;
    j["schema_version"] = schema_version;
    j["records_per_shard"] = records_per_shard;
    j["total_records"] = total_records;
    j["shard_paths"] = shard_paths;
    std::ofstream out(manifest_file, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + manifest_file.string());
    out << corpus::canonical_json(j) << "\n";
}

// --- filtering -------------------------------------------------------------------

namespace {

// Known dotted field paths of the pair-record schema. extras subkeys are
// open-ended, so they are matched by prefix.
const std::vector<std::string>& known_fields() {
    static const std::vector<std::string> fields = {
        "pair_id",
        "image_path",
        "caption",
        "license",
        "annotation.global_concepts",
        "annotation.local_concepts",
        "annotation.panel_type",
        "article_metadata.accession_id",
        "article_metadata.pmid",
        "article_metadata.publication_date",
        "article_metadata.citation",
        "article_metadata.journal",
        "article_metadata.license",
        "article_metadata.title",
        "article_metadata.abstract",
        "article_metadata.mesh_terms",
        "article_metadata.keywords",
        "article_metadata.citing_refs",
    };
    return fields;
}

bool field_is_known(const std::string& field) {
    const auto& fields = known_fields();
    if (std::find(fields.begin(), fields.end(), field) != fields.end()) return true;
    return field.rfind("article_metadata.extras.", 0) == 0 &&
           field.size() > std::string("article_metadata.extras.").size();
}

// A resolved field value: absent, a single string, or a list of strings.
struct FieldValue {
    bool present = false;
    bool is_list = false;
    std::string scalar;
    const std::vector<std::string>* list = nullptr;
};

FieldValue resolve_field(const PairRecord& p, const std::string& field) {
    FieldValue v;
    auto scalar = [&](std::string s) {
        v.present = true;
        v.scalar = std::move(s);
    };
    auto list = [&](const std::vector<std::string>& l) {
        v.present = true;
        v.is_list = true;
        v.list = &l;
    };
    const auto& m = p.article_metadata;
    if (field == "pair_id") scalar(p.pair_id);
    else if (field == "image_path") scalar(p.image_path);
    else if (field == "caption") scalar(p.caption);
    else if (field == "license") scalar(p.license.str());
    else if (field == "annotation.global_concepts") {
        if (p.annotation) list(p.annotation->global_concepts);
    } else if (field == "annotation.local_concepts") {
        if (p.annotation) list(p.annotation->local_concepts);
    } else if (field == "annotation.panel_type") {
        if (p.annotation)
            scalar(p.annotation->panel_type == corpus::PanelType::MULTI_PANEL ? "MULTI_PANEL"
                                                                              : "SINGLE_PANEL");
    } else if (field == "article_metadata.accession_id") scalar(m.accession_id);
    else if (field == "article_metadata.pmid") {
        if (m.pmid) scalar(*m.pmid);
    } else if (field == "article_metadata.publication_date") scalar(m.publication_date);
    else if (field == "article_metadata.citation") scalar(m.citation);
    else if (field == "article_metadata.journal") scalar(m.journal);
    else if (field == "article_metadata.license") scalar(m.license.str());
    else if (field == "article_metadata.title") scalar(m.title);
    else if (field == "article_metadata.abstract") scalar(m.abstract);
    else if (field == "article_metadata.mesh_terms") list(m.mesh_terms);
    else if (field == "article_metadata.keywords") list(m.keywords);
    else if (field == "article_metadata.citing_refs") list(m.citing_refs);
    else if (field.rfind("article_metadata.extras.", 0) == 0) {
        const auto key = field.substr(std::string("article_metadata.extras.").size());
        if (auto it = m.extras.find(key); it != m.extras.end()) scalar(it->second);
    }
    return v;
}

bool equals_any_element(const FieldValue& v, const std::string& target) {
    if (!v.is_list) return v.scalar == target;
    return std::find(v.list->begin(), v.list->end(), target) != v.list->end();
}

bool contains_value(const FieldValue& v, const std::string& needle) {
    if (!v.is_list) return v.scalar.find(needle) != std::string::npos;
    return std::any_of(v.list->begin(), v.list->end(), [&](const std::string& s) {
        return s.find(needle) != std::string::npos;
    });
}

std::optional<double> as_number(const std::string& s) {
    double value = 0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

bool in_range(const std::string& value, const std::string& lo, const std::string& hi) {
    const auto nv = as_number(value), nl = as_number(lo), nh = as_number(hi);
    if (nv && nl && nh) return *nl <= *nv && *nv <= *nh;
    return lo <= value && value <= hi;
}

bool clause_matches(const FilterClause& c, const PairRecord& p) {
    const FieldValue v = resolve_field(p, c.field);
    switch (c.op) {
        case FilterClause::Op::EQ:
            return v.present && equals_any_element(v, c.values.front());
        case FilterClause::Op::NEQ:
            return !(v.present && equals_any_element(v, c.values.front()));
        case FilterClause::Op::IN:
            if (!v.present) return false;
            return std::any_of(c.values.begin(), c.values.end(),
                               [&](const std::string& t) { return equals_any_element(v, t); });
        case FilterClause::Op::CONTAINS:
            return v.present && contains_value(v, c.values.front());
        case FilterClause::Op::RANGE: {
            if (!v.present) return false;
            if (!v.is_list) return in_range(v.scalar, c.values[0], c.values[1]);
            return std::any_of(v.list->begin(), v.list->end(), [&](const std::string& s) {
                return in_range(s, c.values[0], c.values[1]);
            });
        }
    }
    return false;
}

}  // namespace

FilterPredicate FilterPredicate::from_clauses(std::vector<FilterClause> clauses) {
    for (const auto& c : clauses) {
        if (!field_is_known(c.field))
            throw SchemaError("filter references unknown field: " + c.field);
        if (c.values.empty()) throw SchemaError("filter clause has no value: " + c.field);
        if (c.op == FilterClause::Op::RANGE && c.values.size() != 2)
            throw SchemaError("range clause needs lo..hi: " + c.field);
    }
    FilterPredicate p;
    p.clauses_ = std::move(clauses);
    return p;
}

FilterPredicate FilterPredicate::parse(std::string_view expr) {
    std::vector<FilterClause> clauses;
    size_t start = 0;
    while (start <= expr.size()) {
        size_t end = expr.find(';', start);
        if (end == std::string_view::npos) end = expr.size();
        const auto part = expr.substr(start, end - start);
        start = end + 1;
        if (part.empty()) {
            if (end == expr.size()) break;
            continue;
        }
        FilterClause clause;
        // longest operators first so '=' does not shadow them
        static const std::pair<std::string_view, FilterClause::Op> ops[] = {
            {"!=", FilterClause::Op::NEQ},   {"~=", FilterClause::Op::CONTAINS},
            {"^=", FilterClause::Op::IN},    {"%=", FilterClause::Op::RANGE},
            {"=", FilterClause::Op::EQ},
        };
        size_t op_pos = std::string_view::npos;
        size_t op_len = 0;
        for (const auto& [sym, op] : ops) {
            const auto pos = part.find(sym);
            if (pos != std::string_view::npos) {
                op_pos = pos;
                op_len = sym.size();
                clause.op = op;
                break;
            }
        }
        if (op_pos == std::string_view::npos || op_pos == 0)
            throw SchemaError("cannot parse filter clause: " + std::string(part));
        clause.field = std::string(part.substr(0, op_pos));
        const auto value = part.substr(op_pos + op_len);
        if (clause.op == FilterClause::Op::IN) {
            size_t vstart = 0;
            while (vstart <= value.size()) {
                size_t vend = value.find('|', vstart);
                if (vend == std::string_view::npos) vend = value.size();
                clause.values.emplace_back(value.substr(vstart, vend - vstart));
                vstart = vend + 1;
                if (vend == value.size()) break;
            }
        } else if (clause.op == FilterClause::Op::RANGE) {
            const auto sep = value.find("..");
            if (sep == std::string_view::npos)
                throw SchemaError("range clause needs lo..hi: " + std::string(part));
            clause.values.emplace_back(value.substr(0, sep));
            clause.values.emplace_back(value.substr(sep + 2));
        } else {
            clause.values.emplace_back(value);
        }
        clauses.push_back(std::move(clause));
        if (end == expr.size()) break;
    }
    return from_clauses(std::move(clauses));
}

bool FilterPredicate::matches(const PairRecord& record) const {
    return std::all_of(clauses_.begin(), clauses_.end(),
                       [&](const FilterClause& c) { return clause_matches(c, record); });
}

// --- reshaping -------------------------------------------------------------------

std::vector<PairRecord> reshape_to_pairs(std::span<const corpus::ArticleRecord> articles) {
    std::vector<PairRecord> pairs;
    for (const auto& article : articles) {
        auto expanded = corpus::expand_to_pairs(article);
        pairs.insert(pairs.end(), std::make_move_iterator(expanded.begin()),
                     std::make_move_iterator(expanded.end()));
    }
    return pairs;
}

// --- writing ---------------------------------------------------------------------

std::string placeholder_image_bytes(const PairRecord& record) {
    // 256 deterministic bytes derived from the pair id
    std::string bytes = "IMG0";
    SplitMix64 rng(fnv1a64(record.pair_id));
    for (int i = 0; i < 63; ++i) {
        const uint64_t word = rng.next_u64();
        for (int b = 0; b < 4; ++b)
            bytes.push_back(static_cast<char>((word >> (8 * b)) & 0xFF));
    }
    return bytes;
}

ShardWriter::ShardWriter(std::filesystem::path out_dir, uint64_t records_per_shard)
    : out_dir_(std::move(out_dir)), records_per_shard_(records_per_shard) {
    if (records_per_shard_ == 0) throw InvalidArgument("records_per_shard must be positive");
    std::filesystem::create_directories(out_dir_);
    manifest_.records_per_shard = records_per_shard_;
}

void ShardWriter::open_next_shard() {
    char name[32];
    std::snprintf(name, sizeof(name), "shard-%05zu.tar", manifest_.shard_paths.size());
    manifest_.shard_paths.emplace_back(name);
    current_ = std::make_unique<tar::Writer>(out_dir_ / name);
    in_current_ = 0;
}

void ShardWriter::add(const PairRecord& record) { add(record, placeholder_image_bytes(record)); }

void ShardWriter::add(const PairRecord& record, std::string_view image_bytes) {
    if (finished_) throw IoError("shard writer already finished");
    if (record.pair_id.empty()) throw InvalidArgument("pair record has empty pair_id");
    if (!seen_ids_.insert(record.pair_id).second)
        throw DuplicateKey("duplicate pair_id: " + record.pair_id);
    if (!current_ || in_current_ == records_per_shard_) {
        if (current_) current_->finish();
        open_next_shard();
    }
    // .img precedes .json so a sequential reader has the image in hand when
    // it yields the record
    current_->add(record.pair_id + ".img", image_bytes);
    current_->add(record.pair_id + ".json", corpus::canonical_json(corpus::to_json(record)));
    ++in_current_;
    ++manifest_.total_records;
}

ShardManifest ShardWriter::finish() {
    if (finished_) return manifest_;
    if (current_) current_->finish();
    manifest_.save(out_dir_ / "manifest.json");
    finished_ = true;
    return manifest_;
}

ShardManifest write_shards(std::span<const PairRecord> pairs,
                           const std::filesystem::path& out_dir, uint64_t records_per_shard,
                           const ImageProvider& images) {
    ShardWriter writer(out_dir, records_per_shard);
    for (const auto& p : pairs) writer.add(p, images(p));
    return writer.finish();
}

// --- streaming -------------------------------------------------------------------

ShardStream::ShardStream(const ShardManifest& manifest, std::filesystem::path base_dir,
                         std::optional<FilterPredicate> filter)
    : manifest_(manifest), base_dir_(std::move(base_dir)), filter_(std::move(filter)) {}

std::optional<PairRecord> ShardStream::next_raw() {
    for (;;) {
        if (!reader_) {
            if (shard_index_ >= manifest_.shard_paths.size()) return std::nullopt;
            reader_ = std::make_unique<tar::Reader>(base_dir_ /
                                                    manifest_.shard_paths[shard_index_]);
        }
        std::optional<tar::Member> member;
        try {
            member = reader_->next();
        } catch (const IoError& e) {
            throw CorruptShard(e.what());
        }
        if (!member) {
            reader_.reset();
            ++shard_index_;
            continue;
        }
        if (member->name.size() > 4 &&
            member->name.compare(member->name.size() - 4, 4, ".img") == 0) {
            last_image_ = std::move(member->data);
            continue;
        }
        if (member->name.size() <= 5 ||
            member->name.compare(member->name.size() - 5, 5, ".json") != 0)
            throw CorruptShard("unexpected member name: " + member->name);
        PairRecord record;
        try {
            record = corpus::pair_from_json(json::parse(member->data));
        } catch (const std::exception& e) {
            throw CorruptShard("record " + member->name +
                               " failed schema validation: " + e.what());
        }
        const auto expected = member->name.substr(0, member->name.size() - 5);
        if (record.pair_id != expected)
            throw CorruptShard("member name " + member->name + " does not match pair_id " +
                               record.pair_id);
        return record;
    }
}

std::optional<PairRecord> ShardStream::next() {
    for (;;) {
        auto record = next_raw();
        if (!record) return std::nullopt;
        if (!filter_ || filter_->matches(*record)) return record;
    }
}

std::vector<PairRecord> read_all(const std::filesystem::path& manifest_file,
                                 std::optional<FilterPredicate> filter) {
    const auto manifest = ShardManifest::load(manifest_file);
    ShardStream stream(manifest, manifest_file.parent_path(), std::move(filter));
    std::vector<PairRecord> records;
    while (auto r = stream.next()) records.push_back(std::move(*r));
    return records;
}

// --- instructions -----------------------------------------------------------------

InstructionRecord make_instruction(const PairRecord& record,
                                   std::span<const std::string> brief_pool,
                                   std::span<const std::string> detailed_pool, uint64_t seed) {
    if (brief_pool.empty() || detailed_pool.empty())
        throw EmptyPool("instruction pools must be non-empty");
    const size_t words = text::whitespace_token_count(record.caption);
    const auto& pool = words < 30 ? brief_pool : detailed_pool;
    // per-record generator keyed on (seed, pair_id): stable under reordering
    SplitMix64 rng(mix_seed(seed, fnv1a64(record.pair_id)));
    const auto& instruction = pool[rng.next_below(pool.size())];
    return {record.pair_id, record.image_path, instruction, record.caption};
}

std::vector<InstructionRecord> make_instructions(std::span<const PairRecord> records,
                                                 std::span<const std::string> brief_pool,
                                                 std::span<const std::string> detailed_pool,
                                                 uint64_t seed) {
    std::vector<InstructionRecord> out;
    out.reserve(records.size());
    for (const auto& r : records)
        out.push_back(make_instruction(r, brief_pool, detailed_pool, seed));
    return out;
}

}  // namespace scilit::shard
