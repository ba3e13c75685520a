#include "h2cgl/corpus.hpp"

#include "h2cgl/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <unordered_set>

namespace h2cgl {

using json = nlohmann::json;

std::size_t ParseReport::total_dropped_records() const {
    std::size_t n = 0;
    for (const auto& [_, c] : dropped_records) n += c;
    return n;
}

void ParseReport::write(std::ostream& out) const {
    out << "lines = " << lines << "\n";
    out << "records = " << records << "\n";
    out << "kept = " << kept << "\n";
    for (const auto& [rule, count] : dropped_records) out << "dropped_records." << rule << " = " << count << "\n";
    for (const auto& [rule, count] : dropped_edges) out << "dropped_edges." << rule << " = " << count << "\n";
}

// --- CitationNetwork --------------------------------------------------------

std::optional<PaperIdx> CitationNetwork::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

PaperIdx CitationNetwork::index_of(std::string_view id) const {
    auto p = find(id);
    if (!p) throw DataError("unknown paper id: " + std::string(id));
    return *p;
}

std::optional<AuthorIdx> CitationNetwork::find_author(std::string_view name) const {
    auto it = author_index_.find(std::string(name));
    if (it == author_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<VenueIdx> CitationNetwork::find_venue(std::string_view name) const {
    auto it = venue_index_.find(std::string(name));
    if (it == venue_index_.end()) return std::nullopt;
    return it->second;
}

bool CitationNetwork::has_citation(PaperIdx citing, PaperIdx cited) const {
    const auto& refs = cites_.at(citing);
    return std::binary_search(refs.begin(), refs.end(), cited);
}

int CitationNetwork::citations_up_to(PaperIdx p, int year) const {
    const auto& citers = cited_by_.at(p);
    auto it = std::upper_bound(citers.begin(), citers.end(), year,
                               [](int y, const Citer& c) { return y < c.year; });
    return static_cast<int>(it - citers.begin());
}

int CitationNetwork::citations_between(PaperIdx p, int after, int upto) const {
    if (upto <= after) return 0;
    return citations_up_to(p, upto) - citations_up_to(p, after);
}

std::span<const PaperIdx> CitationNetwork::papers_in_year(int year) const {
    auto it = by_year_.find(year);
    if (it == by_year_.end()) return {};
    return it->second;
}

std::size_t CitationNetwork::edge_count() const {
    std::size_t n = 0;
    for (const auto& refs : cites_) n += refs.size();
    return n;
}

CitationNetwork CitationNetwork::from_records(std::vector<PaperRecord> records, ParseReport& report) {
    CitationNetwork net;
    net.papers_ = std::move(records);
    const std::size_t n = net.papers_.size();
    for (PaperIdx i = 0; i < n; ++i) {
        if (!net.index_.emplace(net.papers_[i].id, i).second) {
            throw DataError("duplicate paper id: " + net.papers_[i].id);
        }
    }
    net.cites_.resize(n);
    net.cited_by_.resize(n);
    net.yearly_.resize(n);
    net.paper_authors_.resize(n);
    net.paper_venue_.resize(n);

    for (PaperIdx i = 0; i < n; ++i) {
        PaperRecord& rec = net.papers_[i];
        std::vector<std::string> kept_refs;
        std::unordered_set<PaperIdx> seen;
        for (const auto& ref : rec.references) {
            if (ref == rec.id) {
                ++report.dropped_edges["self_reference"];
                continue;
            }
            auto it = net.index_.find(ref);
            if (it == net.index_.end()) {
                ++report.dropped_edges["dangling_reference"];
                continue;
            }
            const PaperIdx cited = it->second;
            if (net.papers_[cited].year > rec.year) {
                ++report.dropped_edges["forward_in_time"];
                continue;
            }
            if (!seen.insert(cited).second) {
                ++report.dropped_edges["duplicate_reference"];
                continue;
            }
            net.cites_[i].push_back(cited);
            net.cited_by_[cited].push_back({i, rec.year});
            ++net.yearly_[cited][rec.year];
            kept_refs.push_back(ref);
        }
        rec.references = std::move(kept_refs);
        std::sort(net.cites_[i].begin(), net.cites_[i].end());

        for (const auto& a : rec.author_ids) {
            auto [it, inserted] = net.author_index_.emplace(a, static_cast<AuthorIdx>(net.author_names_.size()));
            if (inserted) {
                net.author_names_.push_back(a);
                net.author_papers_.emplace_back();
            }
            auto& mine = net.paper_authors_[i];
            if (std::find(mine.begin(), mine.end(), it->second) == mine.end()) {
                mine.push_back(it->second);
                net.author_papers_[it->second].push_back(i);
            }
        }
        if (rec.venue_id.empty()) {
            net.paper_venue_[i] = kNoVenue;
        } else {
            auto [vit, vinserted] = net.venue_index_.emplace(rec.venue_id, static_cast<VenueIdx>(net.venue_names_.size()));
            if (vinserted) {
                net.venue_names_.push_back(rec.venue_id);
                net.venue_papers_.emplace_back();
            }
            net.paper_venue_[i] = vit->second;
            net.venue_papers_[vit->second].push_back(i);
        }
        net.by_year_[rec.year].push_back(i);
    }

    auto by_year_then_index = [&net](PaperIdx a, PaperIdx b) {
        const int ya = net.papers_[a].year;
        const int yb = net.papers_[b].year;
        return ya != yb ? ya < yb : a < b;
    };
    for (auto& list : net.author_papers_) std::sort(list.begin(), list.end(), by_year_then_index);
    for (auto& list : net.venue_papers_) std::sort(list.begin(), list.end(), by_year_then_index);
    for (auto& citers : net.cited_by_) {
        std::sort(citers.begin(), citers.end(), [](const Citer& a, const Citer& b) {
            return a.year != b.year ? a.year < b.year : a.paper < b.paper;
        });
    }
    if (!net.by_year_.empty()) {
        net.min_year_ = net.by_year_.begin()->first;
        net.max_year_ = net.by_year_.rbegin()->first;
    }
    report.kept = n;
    return net;
}

// --- parsing ----------------------------------------------------------------

namespace {

std::size_t word_count(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        const bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

std::string string_field(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

std::vector<std::string> string_list(const json& obj, const char* key, std::size_t line) {
    std::vector<std::string> out;
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return out;
    if (!it->is_array()) throw ParseError(line, std::string("field '") + key + "' must be a list");
    for (const auto& v : *it) {
        if (!v.is_string()) throw ParseError(line, std::string("field '") + key + "' must hold strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

CitationNetwork parse_corpus(std::istream& in, const ParseOptions& options, ParseReport& report) {
    std::vector<PaperRecord> kept;
    std::unordered_set<std::string> all_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        ++report.lines;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, std::string("malformed record: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(line_no, "record is not a key-value object");
        ++report.records;

        PaperRecord rec;
        rec.id = string_field(obj, "id", line_no);
        if (rec.id.empty()) throw ParseError(line_no, "missing or empty 'id'");
        auto year_it = obj.find("year");
        if (year_it == obj.end() || !year_it->is_number_integer()) {
            throw ParseError(line_no, "missing or non-integer 'year'");
        }
        rec.year = year_it->get<int>();
        rec.title = string_field(obj, "title", line_no);
        rec.abstract = string_field(obj, "abstract", line_no);
        rec.venue_id = string_field(obj, "venue", line_no);
        rec.author_ids = string_list(obj, "authors", line_no);
        rec.references = string_list(obj, "references", line_no);

        if (!all_ids.insert(rec.id).second) throw DataError("line " + std::to_string(line_no) + ": duplicate paper id: " + rec.id);

        if ((options.min_year && rec.year < *options.min_year) ||
            (options.max_year && rec.year > *options.max_year)) {
            ++report.dropped_records["year_out_of_range"];
            continue;
        }
        if (options.require_venue && rec.venue_id.empty()) {
            ++report.dropped_records["missing_venue"];
            continue;
        }
        if (options.require_authors && rec.author_ids.empty()) {
            ++report.dropped_records["missing_authors"];
            continue;
        }
        if (options.strict && word_count(rec.abstract) < options.min_abstract_words) {
            ++report.dropped_records["short_abstract"];
            continue;
        }
        kept.push_back(std::move(rec));
    }
    return CitationNetwork::from_records(std::move(kept), report);
}

CitationNetwork parse_corpus_file(const std::string& path, const ParseOptions& options, ParseReport& report) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open corpus file: " + path);
    return parse_corpus(in, options, report);
}

std::string corpus_line(const PaperRecord& record) {
    json obj = {
        {"id", record.id},
        {"title", record.title},
        {"abstract", record.abstract},
        {"year", record.year},
        {"venue", record.venue_id},
        {"authors", record.author_ids},
        {"references", record.references},
    };
    return obj.dump();
}

// --- text features ----------------------------------------------------------

void HashEmbedConfig::validate() const {
    if (dim < 8) throw std::invalid_argument("embedding dim must be >= 8, got " + std::to_string(dim));
}

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            cur.push_back(static_cast<char>(std::tolower(u)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

namespace {

void normalize(std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    if (s <= 0.0) return;
    const double inv = 1.0 / std::sqrt(s);
    for (double& x : v) x *= inv;
}

}  // namespace

std::vector<double> text_embed(std::string_view title, std::string_view abstract, const HashEmbedConfig& config) {
    config.validate();
    std::vector<double> v(config.dim, 0.0);
    auto add_tokens = [&](std::string_view text) {
        for (const auto& tok : tokenize(text)) {
            const std::uint64_t h = mix64(fnv1a64(tok) ^ config.seed);
            const std::size_t bucket = static_cast<std::size_t>(h % config.dim);
            v[bucket] += (h >> 63) != 0 ? -1.0 : 1.0;
        }
    };
    add_tokens(title);
    add_tokens(abstract);
    normalize(v);
    return v;
}

std::vector<double> random_embed(std::uint64_t key, const HashEmbedConfig& config) {
    config.validate();
    std::mt19937_64 rng(mix64(key ^ mix64(config.seed)));
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(config.dim);
    for (double& x : v) x = dist(rng);
    normalize(v);
    return v;
}

TextFeatures::TextFeatures(const CitationNetwork& net, HashEmbedConfig config)
    : net_(net), config_(config), table_(net.size() * config.dim) {
    config_.validate();
    for (PaperIdx p = 0; p < net.size(); ++p) {
        const auto& rec = net.paper(p);
        auto v = text_embed(rec.title, rec.abstract, config_);
        std::copy(v.begin(), v.end(), table_.begin() + static_cast<std::ptrdiff_t>(p * config_.dim));
    }
}

std::span<const double> TextFeatures::paper(PaperIdx p) const {
    if (p >= net_.size()) throw DataError("paper index out of range");
    return {table_.data() + p * config_.dim, config_.dim};
}

std::vector<double> TextFeatures::mean_before(std::span<const PaperIdx> papers, int year) const {
    std::vector<double> out(config_.dim, 0.0);
    std::size_t n = 0;
    for (PaperIdx p : papers) {
        if (net_.paper(p).year >= year) break;  // sorted by year
        auto v = paper(p);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
        ++n;
    }
    if (n > 0)
        for (double& x : out) x /= static_cast<double>(n);
    return out;
}

std::vector<double> TextFeatures::author(AuthorIdx a, int year) const {
    return mean_before(net_.papers_of_author(a), year);
}

std::vector<double> TextFeatures::venue(VenueIdx v, int year) const {
    return mean_before(net_.papers_of_venue(v), year);
}

std::vector<double> TextFeatures::time(int year) const {
    std::vector<double> out(config_.dim, 0.0);
    auto papers = net_.papers_in_year(year);
    for (PaperIdx p : papers) {
        auto v = paper(p);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
    }
    if (!papers.empty())
        for (double& x : out) x /= static_cast<double>(papers.size());
    return out;
}

std::vector<double> metadata_embedding(const CitationNetwork& net, const MetaNode& node, int year,
                                       const TextFeatures& features) {
    switch (node.kind) {
        case MetaKind::Author: {
            auto a = net.find_author(node.id);
            if (!a) throw DataError("unknown author id: " + node.id);
            return features.author(*a, year);
        }
        case MetaKind::Venue: {
            auto v = net.find_venue(node.id);
            if (!v) throw DataError("unknown venue id: " + node.id);
            return features.venue(*v, year);
        }
        case MetaKind::Time:
            return features.time(year);
    }
    throw DataError("unknown metadata kind");
}

}  // namespace h2cgl
