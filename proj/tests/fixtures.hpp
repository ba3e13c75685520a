#pragma once

#include "h2cgl/corpus.hpp"

#include <sstream>
#include <string>
#include <vector>

namespace h2cgl::testing {

inline PaperRecord paper(std::string id, int year, std::vector<std::string> refs = {},
                         std::string venue = "V0", std::vector<std::string> authors = {},
                         std::string text = "") {
    PaperRecord r;
    r.title = text.empty() ? "title of " + id : text;
    r.abstract = "abstract words for " + id;
    r.id = std::move(id);
    r.year = year;
    r.venue_id = std::move(venue);
    r.author_ids = std::move(authors);
    r.references = std::move(refs);
    return r;
}

inline std::string corpus_text(const std::vector<PaperRecord>& records) {
    std::string out;
    for (const auto& r : records) out += corpus_line(r) + "\n";
    return out;
}

inline CitationNetwork network(const std::vector<PaperRecord>& records, ParseReport* report = nullptr) {
    std::istringstream in(corpus_text(records));
    ParseReport local;
    ParseOptions opts;
    return parse_corpus(in, opts, report ? *report : local);
}

}  // namespace h2cgl::testing
