#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "scilit/corpus.hpp"
#include "scilit/error.hpp"
#include "scilit/tar.hpp"

namespace scilit::shard {

class CorruptShard : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class EmptyPool : public Error {
public:
    using Error::Error;
};

inline constexpr uint64_t kDefaultRecordsPerShard = 10000;
inline constexpr int kSchemaVersion = 1;

struct ShardManifest {
    std::vector<std::string> shard_paths;  // relative to the manifest's directory
    uint64_t records_per_shard = kDefaultRecordsPerShard;
    uint64_t total_records = 0;
    int schema_version = kSchemaVersion;

    static ShardManifest load(const std::filesystem::path& manifest_file);
    void save(const std::filesystem::path& manifest_file) const;
};

// --- filtering ----------------------------------------------------------------

struct FilterClause {
    enum class Op { EQ, NEQ, IN, CONTAINS, RANGE };
    std::string field;               // dotted path into the pair-record schema
    Op op = Op::EQ;
    std::vector<std::string> values;  // 1 value, N for IN, [lo, hi] for RANGE
};

// Conjunction of clauses over pair-record fields. Field names are validated
// against the schema at construction; evaluation semantics:
//   EQ      string equality (on list fields: any element equal)
//   NEQ     negation of EQ
//   IN      equality against any of the '|'-separated values
//   CONTAINS substring (on list fields: any element containing the value)
//   RANGE   lo..hi inclusive; numeric when all three parse as numbers,
//           lexicographic otherwise
// A clause on a missing optional field matches only for NEQ.
class FilterPredicate {
public:
    FilterPredicate() = default;

    // Text grammar: clauses joined by ';', each `field OP value` with OP one
    // of  =  !=  ~=  ^=  %=  (EQ, NEQ, CONTAINS, IN, RANGE).
    // Example: "license=CC-BY;publication_date%=2019-01-01..2020-12-31"
    static FilterPredicate parse(std::string_view expr);
    static FilterPredicate from_clauses(std::vector<FilterClause> clauses);

    bool matches(const corpus::PairRecord& record) const;
    bool empty() const { return clauses_.empty(); }
    const std::vector<FilterClause>& clauses() const { return clauses_; }

private:
    std::vector<FilterClause> clauses_;
};

// --- reshaping ----------------------------------------------------------------

// Article-level corpus to pair-level records; the output count equals the
// total figure count and every pair carries its article's license.
std::vector<corpus::PairRecord> reshape_to_pairs(std::span<const corpus::ArticleRecord> articles);

// --- writing ------------------------------------------------------------------

// Bytes stored as the .img member for a pair. The default provider emits a
// small deterministic placeholder derived from the pair id, used whenever no
// real image file is available.
using ImageProvider = std::function<std::string(const corpus::PairRecord&)>;
std::string placeholder_image_bytes(const corpus::PairRecord& record);

// Streaming shard writer: members <pair_id>.json (canonical JSON) and
// <pair_id>.img, in insertion order, 10,000 records per tar by default; the
// last shard may be short.
class ShardWriter {
public:
    ShardWriter(std::filesystem::path out_dir,
                uint64_t records_per_shard = kDefaultRecordsPerShard);

    void add(const corpus::PairRecord& record);
    void add(const corpus::PairRecord& record, std::string_view image_bytes);
    ShardManifest finish();  // closes the open shard and writes manifest.json

private:
    void open_next_shard();

    std::filesystem::path out_dir_;
    uint64_t records_per_shard_;
    std::unique_ptr<tar::Writer> current_;
    uint64_t in_current_ = 0;
    ShardManifest manifest_;
    std::unordered_set<std::string> seen_ids_;
    bool finished_ = false;
};

ShardManifest write_shards(std::span<const corpus::PairRecord> pairs,
                           const std::filesystem::path& out_dir,
                           uint64_t records_per_shard = kDefaultRecordsPerShard,
                           const ImageProvider& images = placeholder_image_bytes);

// --- streaming ----------------------------------------------------------------

// Sequential reader over a manifest's shards. Holds one open tar and one
// record at a time, so peak memory is independent of corpus size. Records
// failing schema validation raise CorruptShard.
class ShardStream {
public:
    ShardStream(const ShardManifest& manifest, std::filesystem::path base_dir,
                std::optional<FilterPredicate> filter = std::nullopt);

    // Next matching record, or nullopt at end of corpus.
    std::optional<corpus::PairRecord> next();

    // Image bytes of the record most recently returned by next().
    const std::string& last_image() const { return last_image_; }

private:
    std::optional<corpus::PairRecord> next_raw();

    ShardManifest manifest_;
    std::filesystem::path base_dir_;
    std::optional<FilterPredicate> filter_;
    size_t shard_index_ = 0;
    std::unique_ptr<tar::Reader> reader_;
    std::string last_image_;
};

// Convenience: stream the whole corpus into memory (tests, small corpora).
std::vector<corpus::PairRecord> read_all(const std::filesystem::path& manifest_file,
                                         std::optional<FilterPredicate> filter = std::nullopt);

// --- instruction generation -----------------------------------------------------

struct InstructionRecord {
    std::string pair_id;
    std::string image_path;
    std::string instruction;
    std::string response;  // the caption
};

// Captions under 30 whitespace-delimited words draw an instruction from the
// brief pool, 30 or more from the detailed pool. Pool choice per record is
// seeded-deterministic and independent of stream order.
InstructionRecord make_instruction(const corpus::PairRecord& record,
                                   std::span<const std::string> brief_pool,
                                   std::span<const std::string> detailed_pool, uint64_t seed);

std::vector<InstructionRecord> make_instructions(std::span<const corpus::PairRecord> records,
                                                 std::span<const std::string> brief_pool,
                                                 std::span<const std::string> detailed_pool,
                                                 uint64_t seed);

}  // namespace scilit::shard
