#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "scilit/corpus.hpp"
#include "scilit/error.hpp"

namespace scilit::jats {

class EmptyInput : public Error {
public:
    using Error::Error;
};

class MissingBody : public Error {
public:
    using Error::Error;
};

class AccessionMismatch : public Error {
public:
    using Error::Error;
};

// --- file list ---------------------------------------------------------------

struct FileListRow {
    std::string archive_path;
    std::string accession_id;
    std::string license;
    std::string last_updated;  // date string as found in the CSV
};

struct RejectedLine {
    size_t line_number = 0;  // 1-based, counting the header as line 1
    std::string reason;
    std::string raw;
};

struct FileListParse {
    std::vector<FileListRow> rows;
    std::vector<RejectedLine> rejects;
};

// Parses the file-list CSV (columns File, AccessionID, License, LastUpdated,
// located by header name). Malformed lines go to rejects rather than failing
// the parse; throws EmptyInput when the CSV has no data lines at all.
FileListParse parse_file_list(std::string_view csv_bytes);

// --- package layout ----------------------------------------------------------

struct PackageLayout {
    std::filesystem::path root_dir;
    std::filesystem::path nxml_path;
    std::vector<std::filesystem::path> image_paths;

    // Locates the single .nxml file and the image files in an unpacked
    // article directory. Throws IoError when no nxml is present.
    static PackageLayout discover(const std::filesystem::path& root);
    void validate() const;  // all paths must exist
};

// --- nXML parsing ------------------------------------------------------------

// Location of a figure cross-reference inside the flattened body text.
struct XrefMark {
    size_t paragraph_index = 0;  // global paragraph index
    size_t char_offset = 0;      // byte offset of the xref text inside the paragraph
    std::string target_id;       // rid value
};

struct ParsedArticle {
    corpus::ArticleMetadata metadata;      // nXML-sourced fields only
    std::vector<corpus::Section> full_text;
    std::vector<corpus::FigureEntry> figures;  // inline_refs not yet attached
    std::vector<XrefMark> xref_marks;
    std::map<int, std::string> figure_numbers;  // label number -> figure_id
    std::vector<std::string> warnings;
};

// Event-driven extraction of metadata, body sections, and figures from a
// JATS-style article. Throws xml::MalformedXml (with position) on bad input
// and MissingBody when the document has no <body>.
ParsedArticle parse_nxml(std::string_view xml_bytes);

// Attaches inline references to figures: every sentence mentioning a figure,
// found either through an explicit <xref> mark or through the textual
// patterns "Fig"/"Fig."/"Figure(s)" followed by a number. Returns the number
// of mentions that resolved to no known figure.
size_t extract_inline_refs(const std::vector<corpus::Section>& full_text,
                           std::vector<corpus::FigureEntry>& figures,
                           const std::vector<XrefMark>& xref_marks = {},
                           const std::map<int, std::string>& figure_numbers = {});

// --- three-source metadata merge ----------------------------------------------

// Entrez-like metadata loaded from a local JSON fixture; any subset of the
// fields may be present.
struct EntrezLikeRecord {
    std::string accession_id;
    std::optional<std::string> pmid;
    std::optional<std::string> publication_date;
    std::optional<std::string> citation;
    std::optional<std::string> journal;
    std::optional<std::string> license;
    std::optional<std::string> title;
    std::optional<std::string> abstract;
    std::optional<std::vector<std::string>> mesh_terms;
    std::optional<std::vector<std::string>> keywords;
    std::optional<std::vector<std::string>> citing_refs;
    std::map<std::string, std::string> extras;

    static EntrezLikeRecord from_json(const nlohmann::json& j);
};

// Per-field merge with precedence ENTREZ_LIKE > NXML > FILE_LIST; every
// populated output field gets the provenance tag of the source that won.
// Throws AccessionMismatch when the provided sources disagree on the id.
corpus::ArticleMetadata merge_metadata(const corpus::ArticleMetadata& nxml_meta,
                                       const std::optional<FileListRow>& file_list_row,
                                       const std::optional<EntrezLikeRecord>& entrez);

}  // namespace scilit::jats
