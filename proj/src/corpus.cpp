#include "scilit/corpus.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

namespace scilit::corpus {

using nlohmann::json;

std::string to_string(Source s) {
    switch (s) {
        case Source::ENTREZ_LIKE: return "ENTREZ_LIKE";
        case Source::FILE_LIST: return "FILE_LIST";
        case Source::NXML: return "NXML";
    }
    return "NXML";
}

Source source_from_string(const std::string& s) {
    if (s == "ENTREZ_LIKE") return Source::ENTREZ_LIKE;
    if (s == "FILE_LIST") return Source::FILE_LIST;
    if (s == "NXML") return Source::NXML;
    throw InvalidArgument("unknown provenance source: " + s);
}

License License::parse(const std::string& raw) {
    License lic;
    if (raw == "CC-BY" || raw == "CC BY") {
        lic.kind = Kind::CC_BY;
    } else if (raw == "CC-BY-NC" || raw == "CC BY-NC") {
        lic.kind = Kind::CC_BY_NC;
    } else if (raw == "CC0") {
        lic.kind = Kind::CC0;
    } else {
        lic.kind = Kind::OTHER;
        lic.other = raw;
    }
    return lic;
}

std::string License::str() const {
    switch (kind) {
        case Kind::CC_BY: return "CC-BY";
        case Kind::CC_BY_NC: return "CC-BY-NC";
        case Kind::CC0: return "CC0";
        case Kind::OTHER: return other;
    }
    return other;
}

size_t ArticleRecord::paragraph_count() const {
    size_t n = 0;
    for (const auto& sec : full_text) n += sec.paragraphs.size();
    return n;
}

std::string make_pair_id(const std::string& accession_id, const std::string& figure_id) {
    return accession_id + "_" + figure_id;
}

std::vector<PairRecord> expand_to_pairs(const ArticleRecord& article) {
    std::vector<PairRecord> pairs;
    pairs.reserve(article.figures.size());
    for (const auto& fig : article.figures) {
        PairRecord p;
        p.pair_id = make_pair_id(article.metadata.accession_id, fig.figure_id);
        p.image_path = fig.image_path;
        p.caption = fig.caption;
        p.article_metadata = article.metadata;
        p.license = article.metadata.license;
        pairs.push_back(std::move(p));
    }
    return pairs;
}

size_t ValidationReport::count(Violation::Kind kind) const {
    return static_cast<size_t>(
        std::count_if(violations.begin(), violations.end(),
                      [kind](const Violation& v) { return v.kind == kind; }));
}

ValidationReport validate_corpus(std::span<const ArticleRecord> records) {
    ValidationReport report;
    std::unordered_set<std::string> seen;
    for (const auto& rec : records) {
        const auto& id = rec.metadata.accession_id;
        if (id.empty() || !seen.insert(id).second) {
            report.violations.push_back(
                {Violation::Kind::DUPLICATE_ID, id,
                 id.empty() ? "empty accession_id" : "duplicate accession_id"});
        }
        if (rec.metadata.license.missing()) {
            report.violations.push_back({Violation::Kind::MISSING_LICENSE, id, "no license"});
        }
        const size_t n_paragraphs = rec.paragraph_count();
        for (const auto& fig : rec.figures) {
            for (const auto& ref : fig.inline_refs) {
                if (ref.paragraph_index >= n_paragraphs) {
                    report.violations.push_back(
                        {Violation::Kind::DANGLING_REF, id,
                         "figure " + fig.figure_id + " references paragraph " +
                             std::to_string(ref.paragraph_index) + " of " +
                             std::to_string(n_paragraphs)});
                }
            }
        }
    }
    return report;
}

// --- taxonomy ---------------------------------------------------------------

bool Taxonomy::contains(const std::string& id) const { return index_.count(id) > 0; }

const TaxonomyNode& Taxonomy::node(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw TaxonomyError("unknown taxonomy node: " + id);
    return nodes_[it->second];
}

bool Taxonomy::has_global_ancestor(const std::string& id) const {
    std::string cur = id;
    // Walk at most |nodes| links so a malformed chain cannot loop forever.
    for (size_t steps = 0; steps <= nodes_.size(); ++steps) {
        const auto& n = node(cur);
        if (n.level == TaxonomyLevel::GLOBAL) return true;
        if (!n.parent_id) return false;
        cur = *n.parent_id;
        if (!contains(cur)) return false;
    }
    return false;
}

bool Taxonomy::would_cycle(const std::string& id, const std::string& new_parent) const {
    std::string cur = new_parent;
    for (size_t steps = 0; steps <= nodes_.size(); ++steps) {
        if (cur == id) return true;
        const auto it = index_.find(cur);
        if (it == index_.end()) return false;
        const auto& parent = nodes_[it->second].parent_id;
        if (!parent) return false;
        cur = *parent;
    }
    return true;
}

void Taxonomy::add_node(const TaxonomyNode& n) {
    if (n.id.empty()) throw TaxonomyError("taxonomy node id must be non-empty");
    if (contains(n.id)) throw TaxonomyError("duplicate taxonomy node id: " + n.id);
    if (n.parent_id) {
        if (!contains(*n.parent_id))
            throw TaxonomyError("parent not found: " + *n.parent_id);
        if (*n.parent_id == n.id) throw TaxonomyError("node cannot parent itself: " + n.id);
    }
    nodes_.push_back(n);
    index_[n.id] = nodes_.size() - 1;
    if (n.level == TaxonomyLevel::LOCAL && !has_global_ancestor(n.id)) {
        index_.erase(n.id);
        nodes_.pop_back();
        throw TaxonomyError("LOCAL node lacks a GLOBAL ancestor: " + n.id);
    }
}

void Taxonomy::set_parent(const std::string& id, const std::optional<std::string>& parent_id) {
    auto it = index_.find(id);
    if (it == index_.end()) throw TaxonomyError("unknown taxonomy node: " + id);
    if (parent_id) {
        if (!contains(*parent_id)) throw TaxonomyError("parent not found: " + *parent_id);
        if (would_cycle(id, *parent_id))
            throw TaxonomyError("reparenting " + id + " under " + *parent_id +
                                " would create a cycle");
    }
    const auto old = nodes_[it->second].parent_id;
    nodes_[it->second].parent_id = parent_id;
    if (nodes_[it->second].level == TaxonomyLevel::LOCAL && !has_global_ancestor(id)) {
        nodes_[it->second].parent_id = old;
        throw TaxonomyError("LOCAL node would lose its GLOBAL ancestor: " + id);
    }
}

Taxonomy Taxonomy::from_json(const json& j) {
    Taxonomy t(j.value("version", 1));
    // Two passes so children may precede parents in the file.
    std::vector<TaxonomyNode> pending;
    for (const auto& jn : j.at("nodes")) {
        TaxonomyNode n;
        n.id = jn.at("id").get<std::string>();
        n.name = jn.value("name", "");
        if (jn.contains("parent_id") && !jn["parent_id"].is_null())
            n.parent_id = jn["parent_id"].get<std::string>();
        n.level = jn.at("level").get<std::string>() == "LOCAL" ? TaxonomyLevel::LOCAL
                                                               : TaxonomyLevel::GLOBAL;
        pending.push_back(std::move(n));
    }
    size_t added = 1;
    while (added > 0 && !pending.empty()) {
        added = 0;
        std::vector<TaxonomyNode> still;
        for (auto& n : pending) {
            if (!n.parent_id || t.contains(*n.parent_id)) {
                t.add_node(n);
                ++added;
            } else {
                still.push_back(std::move(n));
            }
        }
        pending = std::move(still);
    }
    if (!pending.empty())
        throw TaxonomyError("taxonomy has unresolvable parents (missing node or cycle)");
    return t;
}

json Taxonomy::to_json() const {
    json nodes = json::array();
    for (const auto& n : nodes_) {
        json jn;
        jn["id"] = n.id;
        jn["name"] = n.name;
        if (n.parent_id) jn["parent_id"] = *n.parent_id;
        jn["level"] = n.level == TaxonomyLevel::LOCAL ? "LOCAL" : "GLOBAL";
        nodes.push_back(std::move(jn));
    }
    return json{{"nodes", std::move(nodes)}, {"version", version_}};
}

// --- JSON -------------------------------------------------------------------

json to_json(const ArticleMetadata& m) {
    json j;
    j["accession_id"] = m.accession_id;
    if (m.pmid) j["pmid"] = *m.pmid;
    j["publication_date"] = m.publication_date;
    j["citation"] = m.citation;
    j["journal"] = m.journal;
    j["license"] = m.license.str();
    j["title"] = m.title;
    j["abstract"] = m.abstract;
    j["mesh_terms"] = m.mesh_terms;
    j["keywords"] = m.keywords;
    j["citing_refs"] = m.citing_refs;
    json extras = json::object();
    for (const auto& [k, v] : m.extras) extras[k] = v;
    j["extras"] = std::move(extras);
    json prov = json::object();
    for (const auto& [field, src] : m.provenance) prov[field] = to_string(src);
    j["provenance"] = std::move(prov);
    return j;
}

ArticleMetadata metadata_from_json(const json& j) {
    ArticleMetadata m;
    m.accession_id = j.at("accession_id").get<std::string>();
    if (j.contains("pmid") && !j["pmid"].is_null()) m.pmid = j["pmid"].get<std::string>();
    m.publication_date = j.value("publication_date", "");
    m.citation = j.value("citation", "");
    m.journal = j.value("journal", "");
    m.license = License::parse(j.value("license", ""));
    m.title = j.value("title", "");
    m.abstract = j.value("abstract", "");
    if (j.contains("mesh_terms")) m.mesh_terms = j["mesh_terms"].get<std::vector<std::string>>();
    if (j.contains("keywords")) m.keywords = j["keywords"].get<std::vector<std::string>>();
    if (j.contains("citing_refs"))
        m.citing_refs = j["citing_refs"].get<std::vector<std::string>>();
    if (j.contains("extras"))
        for (const auto& [k, v] : j["extras"].items()) m.extras[k] = v.get<std::string>();
    if (j.contains("provenance"))
        for (const auto& [k, v] : j["provenance"].items())
            m.provenance[k] = source_from_string(v.get<std::string>());
    return m;
}

json to_json(const FigureEntry& f) {
    json refs = json::array();
    for (const auto& r : f.inline_refs)
        refs.push_back(json{{"paragraph_index", r.paragraph_index}, {"sentence", r.sentence}});
    return json{{"figure_id", f.figure_id},
                {"image_path", f.image_path},
                {"caption", f.caption},
                {"inline_refs", std::move(refs)}};
}

FigureEntry figure_from_json(const json& j) {
    FigureEntry f;
    f.figure_id = j.at("figure_id").get<std::string>();
    f.image_path = j.value("image_path", "");
    f.caption = j.value("caption", "");
    if (j.contains("inline_refs")) {
        for (const auto& jr : j["inline_refs"]) {
            f.inline_refs.push_back(
                {jr.at("paragraph_index").get<size_t>(), jr.at("sentence").get<std::string>()});
        }
    }
    return f;
}

json to_json(const ArticleRecord& a) {
    json sections = json::array();
    for (const auto& s : a.full_text)
        sections.push_back(
            json{{"section_title", s.section_title}, {"paragraphs", s.paragraphs}});
    json figures = json::array();
    for (const auto& f : a.figures) figures.push_back(to_json(f));
    return json{{"metadata", to_json(a.metadata)},
                {"full_text", std::move(sections)},
                {"figures", std::move(figures)}};
}

ArticleRecord article_from_json(const json& j) {
    ArticleRecord a;
    a.metadata = metadata_from_json(j.at("metadata"));
    for (const auto& js : j.value("full_text", json::array())) {
        Section s;
        s.section_title = js.value("section_title", "");
        s.paragraphs = js.value("paragraphs", std::vector<std::string>{});
        a.full_text.push_back(std::move(s));
    }
    for (const auto& jf : j.value("figures", json::array()))
        a.figures.push_back(figure_from_json(jf));
    return a;
}

json to_json(const AnnotationLabels& l) {
    return json{{"global_concepts", l.global_concepts},
                {"local_concepts", l.local_concepts},
                {"panel_type",
                 l.panel_type == PanelType::MULTI_PANEL ? "MULTI_PANEL" : "SINGLE_PANEL"}};
}

AnnotationLabels labels_from_json(const json& j) {
    AnnotationLabels l;
    l.global_concepts = j.value("global_concepts", std::vector<std::string>{});
    l.local_concepts = j.value("local_concepts", std::vector<std::string>{});
    l.panel_type = j.value("panel_type", "SINGLE_PANEL") == "MULTI_PANEL"
                       ? PanelType::MULTI_PANEL
                       : PanelType::SINGLE_PANEL;
    return l;
}

json to_json(const PairRecord& p) {
    json j;
    j["pair_id"] = p.pair_id;
    j["image_path"] = p.image_path;
    j["caption"] = p.caption;
    j["article_metadata"] = to_json(p.article_metadata);
    if (p.annotation) j["annotation"] = to_json(*p.annotation);
    j["license"] = p.license.str();
    return j;
}

PairRecord pair_from_json(const json& j) {
    PairRecord p;
    p.pair_id = j.at("pair_id").get<std::string>();
    p.image_path = j.value("image_path", "");
    p.caption = j.value("caption", "");
    p.article_metadata = metadata_from_json(j.at("article_metadata"));
    if (j.contains("annotation") && !j["annotation"].is_null())
        p.annotation = labels_from_json(j["annotation"]);
    p.license = License::parse(j.value("license", ""));
    return p;
}

std::string canonical_json(const json& j) {
    // nlohmann::json objects are backed by std::map, so keys are already
    // sorted; compact dump gives the canonical byte form.
    return j.dump();
}

}  // namespace scilit::corpus
