#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "scilit/error.hpp"

namespace scilit::corpus {

// Per-field origin of a metadata value after the three-source merge.
enum class Source { ENTREZ_LIKE, FILE_LIST, NXML };

std::string to_string(Source s);
Source source_from_string(const std::string& s);

// Article license. PMC mixes license families, so anything outside the
// common three is kept verbatim as OTHER; an empty OTHER means unset.
struct License {
    enum class Kind { CC_BY, CC_BY_NC, CC0, OTHER };

    Kind kind = Kind::OTHER;
    std::string other;  // raw text when kind == OTHER

    static License parse(const std::string& raw);
    std::string str() const;
    bool missing() const { return kind == Kind::OTHER && other.empty(); }
    bool operator==(const License&) const = default;
};

struct ArticleMetadata {
    std::string accession_id;
    std::optional<std::string> pmid;
    std::string publication_date;  // ISO-8601 date (YYYY-MM-DD)
    std::string citation;
    std::string journal;
    License license;
    std::string title;
    std::string abstract;
    std::vector<std::string> mesh_terms;
    std::vector<std::string> keywords;
    std::vector<std::string> citing_refs;
    // Fields beyond the enumerated set land here instead of being guessed.
    std::map<std::string, std::string> extras;
    // field name -> source tag; only populated fields carry a tag
    std::map<std::string, Source> provenance;

    bool operator==(const ArticleMetadata&) const = default;
};

struct InlineRef {
    size_t paragraph_index = 0;  // global paragraph index across all sections
    std::string sentence;

    bool operator==(const InlineRef&) const = default;
};

struct FigureEntry {
    std::string figure_id;
    std::string image_path;  // relative path
    std::string caption;
    std::vector<InlineRef> inline_refs;

    bool operator==(const FigureEntry&) const = default;
};

struct Section {
    std::string section_title;
    std::vector<std::string> paragraphs;

    bool operator==(const Section&) const = default;
};

struct ArticleRecord {
    ArticleMetadata metadata;
    std::vector<Section> full_text;  // document order
    std::vector<FigureEntry> figures;

    size_t paragraph_count() const;
    bool operator==(const ArticleRecord&) const = default;
};

enum class PanelType { SINGLE_PANEL, MULTI_PANEL };

struct AnnotationLabels {
    std::vector<std::string> global_concepts;  // taxonomy node ids
    std::vector<std::string> local_concepts;
    PanelType panel_type = PanelType::SINGLE_PANEL;

    bool operator==(const AnnotationLabels&) const = default;
};

struct PairRecord {
    std::string pair_id;  // accession_id + "_" + figure_id
    std::string image_path;
    std::string caption;
    ArticleMetadata article_metadata;
    std::optional<AnnotationLabels> annotation;
    License license;  // copied from the parent article

    bool operator==(const PairRecord&) const = default;
};

std::string make_pair_id(const std::string& accession_id, const std::string& figure_id);

// One PairRecord per figure, license copied from the article.
std::vector<PairRecord> expand_to_pairs(const ArticleRecord& article);

// --- validation -------------------------------------------------------------

struct Violation {
    enum class Kind { DUPLICATE_ID, DANGLING_REF, MISSING_LICENSE };
    Kind kind;
    std::string accession_id;
    std::string detail;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool empty() const { return violations.empty(); }
    size_t count(Violation::Kind kind) const;
};

// Report-only: duplicate accession ids, inline refs whose paragraph_index is
// out of range, and articles without a license.
ValidationReport validate_corpus(std::span<const ArticleRecord> records);

// --- taxonomy ---------------------------------------------------------------

class TaxonomyError : public Error {
public:
    using Error::Error;
};

enum class TaxonomyLevel { GLOBAL, LOCAL };

struct TaxonomyNode {
    std::string id;
    std::string name;
    std::optional<std::string> parent_id;
    TaxonomyLevel level = TaxonomyLevel::GLOBAL;
};

// Concept forest. Inserts and reparenting reject anything that would break
// the invariants: unique ids, acyclic parent links, and every LOCAL node
// reachable from a GLOBAL ancestor.
class Taxonomy {
public:
    Taxonomy() = default;
    explicit Taxonomy(int version) : version_(version) {}

    void add_node(const TaxonomyNode& node);
    void set_parent(const std::string& id, const std::optional<std::string>& parent_id);
    bool contains(const std::string& id) const;
    const TaxonomyNode& node(const std::string& id) const;
    const std::vector<TaxonomyNode>& nodes() const { return nodes_; }
    int version() const { return version_; }
    void set_version(int v) { version_ = v; }

    static Taxonomy from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    bool has_global_ancestor(const std::string& id) const;
    bool would_cycle(const std::string& id, const std::string& new_parent) const;

    std::vector<TaxonomyNode> nodes_;
    std::map<std::string, size_t> index_;
    int version_ = 1;
};

// --- JSON schema ------------------------------------------------------------
// Field names are the wire schema; see docs/formats.md. All emitters use
// canonical form: sorted keys, UTF-8, no insignificant whitespace.

nlohmann::json to_json(const ArticleMetadata& m);
nlohmann::json to_json(const FigureEntry& f);
nlohmann::json to_json(const ArticleRecord& a);
nlohmann::json to_json(const AnnotationLabels& l);
nlohmann::json to_json(const PairRecord& p);

ArticleMetadata metadata_from_json(const nlohmann::json& j);
FigureEntry figure_from_json(const nlohmann::json& j);
ArticleRecord article_from_json(const nlohmann::json& j);
AnnotationLabels labels_from_json(const nlohmann::json& j);
PairRecord pair_from_json(const nlohmann::json& j);

std::string canonical_json(const nlohmann::json& j);

}  // namespace scilit::corpus
