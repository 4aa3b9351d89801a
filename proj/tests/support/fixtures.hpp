#pragma once

// Hand-built fixtures shared across test suites. The 5-article corpus is the
// reference fixture: 11 figures total, 7 of them in CC-BY articles.

#include <string>
#include <vector>

#include "scilit/corpus.hpp"
#include "scilit/rng.hpp"

namespace fixtures {

inline scilit::corpus::ArticleMetadata make_metadata(const std::string& accession,
                                                     const std::string& license,
                                                     const std::string& journal = "J Test") {
    scilit::corpus::ArticleMetadata m;
    m.accession_id = accession;
    m.publication_date = "2020-06-01";
    m.citation = journal + " (2020)";
    m.journal = journal;
    m.license = scilit::corpus::License::parse(license);
    m.title = "Title of " + accession;
    m.abstract = "Abstract for " + accession + ".";
    m.keywords = {"biology", "imaging"};
    m.provenance["accession_id"] = scilit::corpus::Source::NXML;
    m.provenance["license"] = scilit::corpus::Source::FILE_LIST;
    return m;
}

inline scilit::corpus::FigureEntry make_figure(const std::string& id, const std::string& caption) {
    scilit::corpus::FigureEntry f;
    f.figure_id = id;
    f.image_path = id + ".jpg";
    f.caption = caption;
    return f;
}

// 5 articles, figure counts 3+2+2+2+2 = 11; licenses: CC-BY x3 articles
// (7 figures), CC-BY-NC (2 figures), CC0 (2 figures).
inline std::vector<scilit::corpus::ArticleRecord> corpus5() {
    using scilit::corpus::ArticleRecord;
    using scilit::corpus::Section;
    std::vector<ArticleRecord> articles;

    {
        ArticleRecord a;
        a.metadata = make_metadata("PMC0001", "CC-BY", "J Microsc");
        a.full_text = {
            {"Introduction",
             {"Mitochondria staining reveals oxidative stress. Figure 1 shows the baseline.",
              "The assay in Figure 2 uses a different dye. Results were stable."}},
            {"Results",
             {"As shown in Fig. 3, intensity increased twofold. We repeated the measurement."}}};
        a.figures = {make_figure("f1", "Baseline mitochondria staining in control cells."),
                     make_figure("f2", "Dye comparison across three replicate plates."),
                     make_figure("f3", "Quantified staining intensity after treatment.")};
        a.figures[0].inline_refs = {{0, "Figure 1 shows the baseline."}};
        a.figures[1].inline_refs = {{1, "The assay in Figure 2 uses a different dye."}};
        a.figures[2].inline_refs = {{2, "As shown in Fig. 3, intensity increased twofold."}};
        articles.push_back(std::move(a));
    }
    {
        ArticleRecord a;
        a.metadata = make_metadata("PMC0002", "CC-BY", "J Radiol");
        a.full_text = {{"Methods",
                        {"Chest radiographs were scored by two readers.",
                         "Figure 1 presents the scoring rubric in detail."}}};
        a.figures = {make_figure("f1", "Scoring rubric for radiograph interpretation."),
                     make_figure("f2", "Inter-reader agreement across the cohort.")};
        a.figures[0].inline_refs = {{1, "Figure 1 presents the scoring rubric in detail."}};
        articles.push_back(std::move(a));
    }
    {
        ArticleRecord a;
        a.metadata = make_metadata("PMC0003", "CC-BY-NC", "Pathol Rep");
        a.full_text = {{"Case",
                        {"Histology demonstrated spindle cells with mitotic figures.",
                         "Immunostaining was diffusely positive for S100."}}};
        a.figures = {make_figure("f1", "Hematoxylin and eosin stained section at 40x."),
                     make_figure("f2", "S100 immunostaining of the resected lesion.")};
        articles.push_back(std::move(a));
    }
    {
        ArticleRecord a;
        a.metadata = make_metadata("PMC0004", "CC-BY", "Genome Biol");
        a.full_text = {{"Analysis",
                        {"Sequencing coverage averaged 60x across samples.",
                         "Variant calls were validated by orthogonal assays."}}};
        a.figures = {make_figure("f1", "Coverage distribution across the genome."),
                     make_figure("f2", "Validation rate by variant class.")};
        articles.push_back(std::move(a));
    }
    {
        ArticleRecord a;
        a.metadata = make_metadata("PMC0005", "CC0", "Open Data J");
        a.full_text = {{"Data",
                        {"The dataset covers five imaging modalities.",
                         "Acquisition parameters are tabulated below."}}};
        a.figures = {make_figure("f1", "Modality breakdown of the released dataset."),
                     make_figure("f2", "Acquisition parameter summary table.")};
        articles.push_back(std::move(a));
    }
    return articles;
}

// Same corpus with one dangling inline reference injected (paragraph index
// past the end of article 2's body).
inline std::vector<scilit::corpus::ArticleRecord> corpus5_with_dangling_ref() {
    auto articles = corpus5();
    articles[1].figures[1].inline_refs.push_back({99, "Dangling sentence."});
    return articles;
}

// Deterministic text generator over a small vocabulary; used for synthetic
// retrieval corpora.
inline std::string synthetic_doc(scilit::SplitMix64& rng,
                                 const std::vector<std::string>& vocabulary, size_t n_tokens) {
    std::string text;
    for (size_t i = 0; i < n_tokens; ++i) {
        if (i) text.push_back(' ');
        text += vocabulary[rng.next_below(vocabulary.size())];
    }
    return text;
}

inline std::vector<std::string> synthetic_vocabulary(size_t n_terms) {
    std::vector<std::string> terms;
    terms.reserve(n_terms);
    for (size_t i = 0; i < n_terms; ++i) terms.push_back("term" + std::to_string(i));
    return terms;
}

}  // namespace fixtures
