#include "scilit/jats.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "scilit/csv.hpp"
#include "scilit/text.hpp"
#include "scilit/xml.hpp"

namespace scilit::jats {

using corpus::ArticleMetadata;
using corpus::FigureEntry;
using corpus::License;
using corpus::Section;
using corpus::Source;

// --- file list ---------------------------------------------------------------

FileListParse parse_file_list(std::string_view csv_bytes) {
    // strip a UTF-8 BOM if present
    if (csv_bytes.size() >= 3 && csv_bytes.substr(0, 3) == "\xEF\xBB\xBF")
        csv_bytes.remove_prefix(3);

    const auto rows = csv::parse(csv_bytes);
    if (rows.empty()) throw EmptyInput("file list: no header row");

    const auto& header = rows.front();
    auto col = [&](std::string_view name) -> size_t {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw InvalidArgument("file list: missing column " + std::string(name));
    };
    const size_t c_file = col("File");
    const size_t c_acc = col("AccessionID");
    const size_t c_lic = col("License");
    const size_t c_upd = col("LastUpdated");
    const size_t needed = std::max({c_file, c_acc, c_lic, c_upd}) + 1;

    if (rows.size() == 1) throw EmptyInput("file list: header but no data rows");

    FileListParse out;
    for (size_t i = 1; i < rows.size(); ++i) {
        const auto& cells = rows[i];
        auto raw = [&] {
            std::string s;
            for (size_t k = 0; k < cells.size(); ++k) {
                if (k) s.push_back(',');
                s += cells[k];
            }
            return s;
        };
        if (cells.size() < needed) {
            out.rejects.push_back({i + 1, "missing fields", raw()});
            continue;
        }
        if (cells[c_acc].empty()) {
            out.rejects.push_back({i + 1, "empty accession id", raw()});
            continue;
        }
        out.rows.push_back({cells[c_file], cells[c_acc], cells[c_lic], cells[c_upd]});
    }
    return out;
}

// --- package layout ----------------------------------------------------------

PackageLayout PackageLayout::discover(const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    PackageLayout layout;
    layout.root_dir = root;
    static const std::set<std::string> image_exts = {".jpg", ".jpeg", ".png", ".gif",
                                                     ".tif", ".tiff", ".webp"};
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (ext == ".nxml") {
            layout.nxml_path = entry.path();
        } else if (image_exts.count(ext)) {
            images.push_back(entry.path());
        }
    }
    if (layout.nxml_path.empty())
        throw IoError("package has no .nxml file: " + root.string());
    std::sort(images.begin(), images.end());
    layout.image_paths = std::move(images);
    return layout;
}

void PackageLayout::validate() const {
    namespace fs = std::filesystem;
    if (!fs::exists(nxml_path)) throw IoError("missing nxml: " + nxml_path.string());
    for (const auto& p : image_paths)
        if (!fs::exists(p)) throw IoError("missing image: " + p.string());
}

// --- nXML parsing ------------------------------------------------------------

namespace {

License license_from_href_or_text(const std::string& href, const std::string& type,
                                  const std::string& text) {
    auto contains = [](const std::string& s, std::string_view needle) {
        return s.find(needle) != std::string::npos;
    };
    if (contains(href, "publicdomain/zero") || type == "cc0") return License{License::Kind::CC0, ""};
    if (contains(href, "licenses/by-nc/")) return License{License::Kind::CC_BY_NC, ""};
    if (contains(href, "licenses/by/")) return License{License::Kind::CC_BY, ""};
    if (!text.empty()) return License::parse(text);
    if (!href.empty()) return License::parse(href);
    if (!type.empty()) return License::parse(type);
    return License{License::Kind::OTHER, ""};
}

// Append raw text into a buffer while collapsing whitespace runs to a single
// space. Keeps recorded char offsets valid in the final string.
void append_collapsed(std::string& buf, std::string_view raw) {
    for (char c : raw) {
        const bool ws = c == ' ' || c == '\t' || c == '\n' || c == '\r';
        if (ws) {
            if (!buf.empty() && buf.back() != ' ') buf.push_back(' ');
        } else {
            buf.push_back(c);
        }
    }
}

void rtrim(std::string& s) {
    while (!s.empty() && s.back() == ' ') s.pop_back();
}

std::optional<int> trailing_number(std::string_view s) {
    size_t end = s.size();
    while (end > 0 && std::isdigit(static_cast<unsigned char>(s[end - 1]))) --end;
    if (end == s.size()) return std::nullopt;
    int value = 0;
    for (size_t i = end; i < s.size(); ++i) value = value * 10 + (s[i] - '0');
    return value;
}

struct FigBuild {
    std::string id;
    std::string label;
    std::string caption;
    std::string graphic_href;
};

}  // namespace

ParsedArticle parse_nxml(std::string_view xml_bytes) {
    xml::Reader reader(xml_bytes);
    ParsedArticle out;
    ArticleMetadata& meta = out.metadata;

    std::vector<std::string> path;  // open element names
    auto in_path = [&](std::string_view name) {
        return std::find(path.begin(), path.end(), name) != path.end();
    };

    bool saw_body = false;
    bool in_body = false;
    bool in_ref_list = false;
    size_t paragraphs_closed = 0;

    std::string text_buf;          // shared accumulation buffer
    std::string* collect = nullptr;

    std::string para_buf;
    bool in_body_para = false;
    std::vector<XrefMark> para_marks;  // marks for the open paragraph

    std::optional<FigBuild> fig;
    size_t fig_ordinal = 0;
    std::string pub_year, pub_month, pub_day;
    bool pub_date_done = false;
    std::string license_href, license_type, license_text;
    bool in_license = false;
    std::string abstract_buf;
    std::string current_ref_pub_id, current_ref_id;
    bool ref_had_pub_id = false;
    std::string article_id_type;

    auto start_section = [&](std::string&& title) {
        Section s;
        s.section_title = std::move(title);
        out.full_text.push_back(std::move(s));
    };
    auto append_paragraph = [&](std::string&& text) {
        if (out.full_text.empty()) start_section("");
        out.full_text.back().paragraphs.push_back(std::move(text));
        ++paragraphs_closed;
    };

    std::string sec_title_buf;
    bool collect_sec_title = false;

    while (true) {
        auto ev = reader.next();
        if (ev.type == xml::EventType::Finished) break;

        if (ev.type == xml::EventType::StartElement) {
            const auto& name = ev.name;
            path.push_back(name);

            if (name == "body") {
                saw_body = true;
                in_body = true;
            } else if (name == "ref-list") {
                in_ref_list = true;
            } else if (name == "fig") {
                fig = FigBuild{};
                ++fig_ordinal;
                if (const auto* id = xml::find_attr(ev.attrs, "id")) fig->id = *id;
                if (fig->id.empty()) {
                    fig->id = "fig-" + std::to_string(fig_ordinal);
                    out.warnings.push_back("figure without id assigned " + fig->id);
                }
            } else if (name == "graphic" || name == "inline-graphic") {
                if (fig && fig->graphic_href.empty()) {
                    if (const auto* href = xml::find_attr(ev.attrs, "href"))
                        fig->graphic_href = *href;
                }
            } else if (name == "p") {
                if (fig || in_path("abstract")) {
                    // caption/abstract paragraphs handled via their own buffers
                } else if (in_body && !in_body_para) {
                    in_body_para = true;
                    para_buf.clear();
                    para_marks.clear();
                }
            } else if (name == "sec") {
                if (in_body && !fig) {
                    sec_title_buf.clear();
                    start_section("");
                }
            } else if (name == "title") {
                if (in_body && !fig && !in_body_para && !out.full_text.empty() &&
                    path.size() >= 2 && path[path.size() - 2] == "sec") {
                    collect_sec_title = true;
                    sec_title_buf.clear();
                }
            } else if (name == "xref") {
                if (in_body_para) {
                    const auto* rt = xml::find_attr(ev.attrs, "ref-type");
                    if (rt && *rt == "fig") {
                        if (const auto* rid = xml::find_attr(ev.attrs, "rid")) {
                            // rid may carry several space-separated targets
                            size_t start = 0;
                            while (start < rid->size()) {
                                size_t end = rid->find(' ', start);
                                if (end == std::string::npos) end = rid->size();
                                if (end > start)
                                    para_marks.push_back({paragraphs_closed, para_buf.size(),
                                                          rid->substr(start, end - start)});
                                start = end + 1;
                            }
                        }
                    }
                }
            } else if (name == "article-id") {
                article_id_type.clear();
                if (const auto* t = xml::find_attr(ev.attrs, "pub-id-type")) article_id_type = *t;
                text_buf.clear();
                collect = &text_buf;
            } else if (name == "article-title" && in_path("title-group")) {
                text_buf.clear();
                collect = &text_buf;
            } else if (name == "journal-title") {
                text_buf.clear();
                collect = &text_buf;
            } else if (name == "kwd") {
                text_buf.clear();
                collect = &text_buf;
            } else if ((name == "year" || name == "month" || name == "day") &&
                       in_path("pub-date") && !pub_date_done) {
                text_buf.clear();
                collect = &text_buf;
            } else if (name == "license") {
                in_license = true;
                license_text.clear();
                if (const auto* href = xml::find_attr(ev.attrs, "href")) license_href = *href;
                if (const auto* t = xml::find_attr(ev.attrs, "license-type")) license_type = *t;
            } else if (name == "pub-id" && in_ref_list) {
                text_buf.clear();
                collect = &text_buf;
            } else if (name == "ref" && in_ref_list) {
                current_ref_pub_id.clear();
                ref_had_pub_id = false;
                current_ref_id.clear();
                if (const auto* id = xml::find_attr(ev.attrs, "id")) current_ref_id = *id;
            }
            continue;
        }

        if (ev.type == xml::EventType::Text) {
            if (collect) {
                append_collapsed(*collect, ev.text);
            } else if (fig && in_path("caption")) {
                append_collapsed(fig->caption, ev.text);
            } else if (fig && in_path("label")) {
                append_collapsed(fig->label, ev.text);
            } else if (in_body_para) {
                append_collapsed(para_buf, ev.text);
            } else if (collect_sec_title) {
                append_collapsed(sec_title_buf, ev.text);
            } else if (in_path("abstract") && in_path("p")) {
                append_collapsed(abstract_buf, ev.text);
            } else if (in_license) {
                append_collapsed(license_text, ev.text);
            }
            continue;
        }

        // EndElement
        const auto& name = ev.name;
        if (!path.empty()) path.pop_back();

        if (name == "body") {
            in_body = false;
        } else if (name == "ref-list") {
            in_ref_list = false;
        } else if (name == "fig") {
            if (fig) {
                FigureEntry entry;
                entry.figure_id = fig->id;
                entry.image_path = fig->graphic_href;
                rtrim(fig->caption);
                entry.caption = fig->caption;
                if (entry.caption.empty())
                    out.warnings.push_back("figure " + entry.figure_id + " has no caption");
                if (entry.image_path.empty())
                    out.warnings.push_back("figure " + entry.figure_id + " has no graphic");
                rtrim(fig->label);
                if (auto n = trailing_number(fig->label))
                    out.figure_numbers.emplace(*n, entry.figure_id);
                else if (auto n2 = trailing_number(entry.figure_id))
                    out.figure_numbers.emplace(*n2, entry.figure_id);
                out.figures.push_back(std::move(entry));
                fig.reset();
            }
        } else if (name == "p") {
            if (in_body_para && !fig && !in_path("abstract")) {
                rtrim(para_buf);
                if (!para_buf.empty()) {
                    for (auto& m : para_marks) {
                        m.char_offset = std::min(m.char_offset, para_buf.size());
                        out.xref_marks.push_back(m);
                    }
                    append_paragraph(std::move(para_buf));
                }
                para_buf.clear();
                para_marks.clear();
                in_body_para = false;
            } else if (in_path("abstract")) {
                if (!abstract_buf.empty() && abstract_buf.back() != '\n') abstract_buf += "\n";
            }
        } else if (name == "title") {
            if (collect_sec_title) {
                rtrim(sec_title_buf);
                if (!out.full_text.empty()) out.full_text.back().section_title = sec_title_buf;
                collect_sec_title = false;
            }
        } else if (name == "article-id") {
            rtrim(text_buf);
            if (article_id_type == "pmc" || article_id_type == "pmcid") {
                const bool numeric = !text_buf.empty() &&
                                     std::all_of(text_buf.begin(), text_buf.end(), [](char c) {
                                         return std::isdigit(static_cast<unsigned char>(c));
                                     });
                meta.accession_id = numeric ? "PMC" + text_buf : text_buf;
            } else if (article_id_type == "pmid") {
                meta.pmid = text_buf;
            }
            collect = nullptr;
        } else if (name == "article-title") {
            if (collect) {
                rtrim(text_buf);
                meta.title = text_buf;
                collect = nullptr;
            }
        } else if (name == "journal-title") {
            if (collect) {
                rtrim(text_buf);
                meta.journal = text_buf;
                collect = nullptr;
            }
        } else if (name == "kwd") {
            if (collect) {
                rtrim(text_buf);
                if (!text_buf.empty()) meta.keywords.push_back(text_buf);
                collect = nullptr;
            }
        } else if (name == "year" || name == "month" || name == "day") {
            if (collect) {
                rtrim(text_buf);
                if (name == "year") pub_year = text_buf;
                else if (name == "month") pub_month = text_buf;
                else pub_day = text_buf;
                collect = nullptr;
            }
        } else if (name == "pub-date") {
            if (!pub_year.empty()) pub_date_done = true;
        } else if (name == "license") {
            in_license = false;
        } else if (name == "pub-id") {
            if (collect && in_ref_list) {
                rtrim(text_buf);
                if (!ref_had_pub_id && !text_buf.empty()) {
                    current_ref_pub_id = text_buf;
                    ref_had_pub_id = true;
                }
                collect = nullptr;
            }
        } else if (name == "ref") {
            if (in_ref_list) {
                if (ref_had_pub_id) meta.citing_refs.push_back(current_ref_pub_id);
                else if (!current_ref_id.empty()) meta.citing_refs.push_back(current_ref_id);
            }
        } else if (name == "abstract") {
            while (!abstract_buf.empty() &&
                   (abstract_buf.back() == '\n' || abstract_buf.back() == ' '))
                abstract_buf.pop_back();
            meta.abstract = abstract_buf;
        }
    }

    if (!saw_body) throw MissingBody("article has no <body> element");

    if (!pub_year.empty()) {
        auto pad2 = [](const std::string& s) {
            if (s.empty()) return std::string("01");
            return s.size() == 1 ? "0" + s : s;
        };
        meta.publication_date = pub_year + "-" + pad2(pub_month) + "-" + pad2(pub_day);
    }
    meta.license = license_from_href_or_text(license_href, license_type, license_text);
    if (meta.citation.empty() && !meta.journal.empty() && !pub_year.empty())
        meta.citation = meta.journal + " (" + pub_year + ")";

    // provenance for every populated field
    auto tag = [&](const char* field, bool populated) {
        if (populated) meta.provenance[field] = Source::NXML;
    };
    tag("accession_id", !meta.accession_id.empty());
    tag("pmid", meta.pmid.has_value());
    tag("publication_date", !meta.publication_date.empty());
    tag("citation", !meta.citation.empty());
    tag("journal", !meta.journal.empty());
    tag("license", !meta.license.missing());
    tag("title", !meta.title.empty());
    tag("abstract", !meta.abstract.empty());
    tag("keywords", !meta.keywords.empty());
    tag("citing_refs", !meta.citing_refs.empty());

    return out;
}

// --- inline references --------------------------------------------------------

namespace {

struct Mention {
    size_t sentence_start;
    std::string figure_id;
    bool resolved;
    int number;  // textual number when unresolved
};

// Scans one sentence for "fig"/"figs"/"figure"/"figures" + optional '.' +
// optional whitespace + digits. Case-insensitive; word-boundary on the left.
void scan_textual_mentions(std::string_view sentence, size_t sentence_start,
                           const std::map<int, std::string>& numbers,
                           std::vector<Mention>& out) {
    auto lower = [](char c) {
        return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    };
    size_t i = 0;
    while (i < sentence.size()) {
        if (lower(sentence[i]) != 'f') {
            ++i;
            continue;
        }
        // left word boundary
        if (i > 0 && std::isalnum(static_cast<unsigned char>(sentence[i - 1]))) {
            ++i;
            continue;
        }
        size_t j = i;
        auto matches = [&](std::string_view word) {
            if (j + word.size() > sentence.size()) return false;
            for (size_t k = 0; k < word.size(); ++k)
                if (lower(sentence[j + k]) != word[k]) return false;
            return true;
        };
        size_t word_len = 0;
        if (matches("figures")) word_len = 7;
        else if (matches("figure")) word_len = 6;
        else if (matches("figs")) word_len = 4;
        else if (matches("fig")) word_len = 3;
        if (word_len == 0) {
            ++i;
            continue;
        }
        size_t k = j + word_len;
        // reject longer words like "figment": next char must be '.', space or digit
        if (k < sentence.size() && std::isalpha(static_cast<unsigned char>(sentence[k]))) {
            ++i;
            continue;
        }
        if (k < sentence.size() && sentence[k] == '.') ++k;
        while (k < sentence.size() && (sentence[k] == ' ' || sentence[k] == '\t')) ++k;
        if (k >= sentence.size() || !std::isdigit(static_cast<unsigned char>(sentence[k]))) {
            i = j + word_len;
            continue;
        }
        int number = 0;
        while (k < sentence.size() && std::isdigit(static_cast<unsigned char>(sentence[k]))) {
            number = number * 10 + (sentence[k] - '0');
            ++k;
        }
        auto it = numbers.find(number);
        if (it != numbers.end()) {
            out.push_back({sentence_start, it->second, true, number});
        } else {
            out.push_back({sentence_start, "", false, number});
        }
        i = k;
    }
}

}  // namespace

size_t extract_inline_refs(const std::vector<Section>& full_text,
                           std::vector<FigureEntry>& figures,
                           const std::vector<XrefMark>& xref_marks,
                           const std::map<int, std::string>& figure_numbers) {
    // figure lookup tables
    std::map<std::string, size_t> fig_by_id;
    for (size_t i = 0; i < figures.size(); ++i) fig_by_id[figures[i].figure_id] = i;
    std::map<int, std::string> numbers = figure_numbers;
    for (const auto& f : figures) {
        if (auto n = trailing_number(f.figure_id)) numbers.emplace(*n, f.figure_id);
    }

    // marks grouped by paragraph
    std::map<size_t, std::vector<const XrefMark*>> marks_by_para;
    for (const auto& m : xref_marks) marks_by_para[m.paragraph_index].push_back(&m);

    size_t unresolved = 0;
    std::set<std::tuple<std::string, size_t, size_t>> attached;  // fig, para, sent_start
    std::set<std::tuple<int, size_t, size_t>> missed;            // number, para, sent_start

    size_t para_index = 0;
    for (const auto& sec : full_text) {
        for (const auto& para : sec.paragraphs) {
            const auto spans = text::sentence_spans(para);
            std::vector<Mention> mentions;
            for (const auto& [start, end] : spans)
                scan_textual_mentions(std::string_view(para).substr(start, end - start), start,
                                      numbers, mentions);
            // xref marks: locate the containing sentence
            if (auto it = marks_by_para.find(para_index); it != marks_by_para.end()) {
                for (const auto* m : it->second) {
                    size_t sent_start = spans.empty() ? 0 : spans.back().first;
                    for (const auto& [start, end] : spans) {
                        if (m->char_offset >= start && m->char_offset < end + 1) {
                            sent_start = start;
                            break;
                        }
                    }
                    if (fig_by_id.count(m->target_id)) {
                        mentions.push_back({sent_start, m->target_id, true, 0});
                    } else {
                        mentions.push_back({sent_start, m->target_id, false, -1});
                    }
                }
            }
            std::stable_sort(mentions.begin(), mentions.end(),
                             [](const Mention& a, const Mention& b) {
                                 return a.sentence_start < b.sentence_start;
                             });
            for (const auto& m : mentions) {
                // sentence span for this mention
                std::pair<size_t, size_t> span{0, para.size()};
                for (const auto& s : spans) {
                    if (m.sentence_start == s.first) {
                        span = s;
                        break;
                    }
                }
                if (!m.resolved) {
                    if (missed.insert({m.number, para_index, span.first}).second) ++unresolved;
                    continue;
                }
                if (!attached.insert({m.figure_id, para_index, span.first}).second) continue;
                auto& fig = figures[fig_by_id[m.figure_id]];
                fig.inline_refs.push_back(
                    {para_index, std::string(para.substr(span.first, span.second - span.first))});
            }
            ++para_index;
        }
    }
    return unresolved;
}

// --- metadata merge ------------------------------------------------------------

EntrezLikeRecord EntrezLikeRecord::from_json(const nlohmann::json& j) {
    EntrezLikeRecord r;
    r.accession_id = j.at("accession_id").get<std::string>();
    auto opt_str = [&](const char* key) -> std::optional<std::string> {
        if (j.contains(key) && !j[key].is_null()) return j[key].get<std::string>();
        return std::nullopt;
    };
    auto opt_vec = [&](const char* key) -> std::optional<std::vector<std::string>> {
        if (j.contains(key) && !j[key].is_null())
            return j[key].get<std::vector<std::string>>();
        return std::nullopt;
    };
    r.pmid = opt_str("pmid");
    r.publication_date = opt_str("publication_date");
    r.citation = opt_str("citation");
    r.journal = opt_str("journal");
    r.license = opt_str("license");
    r.title = opt_str("title");
    r.abstract = opt_str("abstract");
    r.mesh_terms = opt_vec("mesh_terms");
    r.keywords = opt_vec("keywords");
    r.citing_refs = opt_vec("citing_refs");
    if (j.contains("extras"))
        for (const auto& [k, v] : j["extras"].items()) r.extras[k] = v.get<std::string>();
    return r;
}

ArticleMetadata merge_metadata(const ArticleMetadata& nxml_meta,
                               const std::optional<FileListRow>& file_list_row,
                               const std::optional<EntrezLikeRecord>& entrez) {
    // accession ids must agree across whichever sources carry one
    std::vector<std::string> ids;
    if (!nxml_meta.accession_id.empty()) ids.push_back(nxml_meta.accession_id);
    if (file_list_row && !file_list_row->accession_id.empty())
        ids.push_back(file_list_row->accession_id);
    if (entrez && !entrez->accession_id.empty()) ids.push_back(entrez->accession_id);
    if (ids.empty()) throw AccessionMismatch("no source provides an accession id");
    for (const auto& id : ids)
        if (id != ids.front())
            throw AccessionMismatch("accession ids disagree: " + ids.front() + " vs " + id);

    ArticleMetadata out;
    out.accession_id = ids.front();
    out.provenance["accession_id"] =
        (entrez && !entrez->accession_id.empty()) ? Source::ENTREZ_LIKE
        : !nxml_meta.accession_id.empty()         ? Source::NXML
                                                  : Source::FILE_LIST;

    // precedence ENTREZ_LIKE > NXML > FILE_LIST, per field
    auto pick_str = [&](const char* field, const std::optional<std::string>& ent,
                        const std::string& nxml, const std::string& flist,
                        std::string& dst) {
        if (ent && !ent->empty()) {
            dst = *ent;
            out.provenance[field] = Source::ENTREZ_LIKE;
        } else if (!nxml.empty()) {
            dst = nxml;
            out.provenance[field] = Source::NXML;
        } else if (!flist.empty()) {
            dst = flist;
            out.provenance[field] = Source::FILE_LIST;
        }
    };
    auto pick_vec = [&](const char* field, const std::optional<std::vector<std::string>>& ent,
                        const std::vector<std::string>& nxml, std::vector<std::string>& dst) {
        if (ent && !ent->empty()) {
            dst = *ent;
            out.provenance[field] = Source::ENTREZ_LIKE;
        } else if (!nxml.empty()) {
            dst = nxml;
            out.provenance[field] = Source::NXML;
        }
    };

    if (entrez && entrez->pmid && !entrez->pmid->empty()) {
        out.pmid = entrez->pmid;
        out.provenance["pmid"] = Source::ENTREZ_LIKE;
    } else if (nxml_meta.pmid && !nxml_meta.pmid->empty()) {
        out.pmid = nxml_meta.pmid;
        out.provenance["pmid"] = Source::NXML;
    }

    pick_str("publication_date", entrez ? entrez->publication_date : std::nullopt,
             nxml_meta.publication_date, "", out.publication_date);
    pick_str("citation", entrez ? entrez->citation : std::nullopt, nxml_meta.citation, "",
             out.citation);
    pick_str("journal", entrez ? entrez->journal : std::nullopt, nxml_meta.journal, "",
             out.journal);
    pick_str("title", entrez ? entrez->title : std::nullopt, nxml_meta.title, "", out.title);
    pick_str("abstract", entrez ? entrez->abstract : std::nullopt, nxml_meta.abstract, "",
             out.abstract);

    std::string license_str;
    pick_str("license", entrez ? entrez->license : std::nullopt,
             nxml_meta.license.missing() ? "" : nxml_meta.license.str(),
             file_list_row ? file_list_row->license : "", license_str);
    out.license = License::parse(license_str);

    pick_vec("mesh_terms", entrez ? entrez->mesh_terms : std::nullopt, nxml_meta.mesh_terms,
             out.mesh_terms);
    pick_vec("keywords", entrez ? entrez->keywords : std::nullopt, nxml_meta.keywords,
             out.keywords);
    pick_vec("citing_refs", entrez ? entrez->citing_refs : std::nullopt, nxml_meta.citing_refs,
             out.citing_refs);

    // extras: lower-precedence first so higher precedence overwrites
    if (file_list_row && !file_list_row->last_updated.empty()) {
        out.extras["last_updated"] = file_list_row->last_updated;
        out.provenance["extras.last_updated"] = Source::FILE_LIST;
    }
    for (const auto& [k, v] : nxml_meta.extras) {
        out.extras[k] = v;
        out.provenance["extras." + k] = Source::NXML;
    }
    if (entrez) {
        for (const auto& [k, v] : entrez->extras) {
            out.extras[k] = v;
            out.provenance["extras." + k] = Source::ENTREZ_LIKE;
        }
    }
    return out;
}

}  // namespace scilit::jats
