#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace h2cgl {

using PaperIdx = std::uint32_t;
using AuthorIdx = std::uint32_t;
using VenueIdx = std::uint32_t;

inline constexpr VenueIdx kNoVenue = 0xffffffffu;

struct PaperRecord {
    std::string id;
    std::string title;
    std::string abstract;
    int year = 0;
    std::string venue_id;
    std::vector<std::string> author_ids;
    std::vector<std::string> references;
};

struct ParseOptions {
    // Drop records with an abstract shorter than min_abstract_words.
    bool strict = false;
    std::size_t min_abstract_words = 20;
    bool require_venue = true;
    bool require_authors = false;
    std::optional<int> min_year;
    std::optional<int> max_year;
};

// Counts of everything parse_corpus dropped or pruned, keyed by rule name.
struct ParseReport {
    std::size_t lines = 0;
    std::size_t records = 0;
    std::size_t kept = 0;
    std::map<std::string, std::size_t> dropped_records;
    std::map<std::string, std::size_t> dropped_edges;

    std::size_t total_dropped_records() const;
    // "key = value" lines
    void write(std::ostream& out) const;
};

struct Citer {
    PaperIdx paper;
    int year;
};

// Immutable global citation network. Papers keep corpus file order.
class CitationNetwork {
public:
    std::size_t size() const { return papers_.size(); }
    const PaperRecord& paper(PaperIdx p) const { return papers_.at(p); }
    std::optional<PaperIdx> find(std::string_view id) const;
    PaperIdx index_of(std::string_view id) const;  // throws DataError

    // Papers referenced by p, ascending index.
    std::span<const PaperIdx> cites(PaperIdx p) const { return cites_.at(p); }
    // Papers citing p, ordered by (year, index).
    std::span<const Citer> cited_by(PaperIdx p) const { return cited_by_.at(p); }
    bool has_citation(PaperIdx citing, PaperIdx cited) const;

    const std::map<int, int>& yearly_citations(PaperIdx p) const { return yearly_.at(p); }
    int citations_up_to(PaperIdx p, int year) const;
    // Citations received in the half-open year range (after, upto].
    int citations_between(PaperIdx p, int after, int upto) const;

    std::size_t author_count() const { return author_names_.size(); }
    std::size_t venue_count() const { return venue_names_.size(); }
    const std::string& author_name(AuthorIdx a) const { return author_names_.at(a); }
    const std::string& venue_name(VenueIdx v) const { return venue_names_.at(v); }
    std::optional<AuthorIdx> find_author(std::string_view name) const;
    std::optional<VenueIdx> find_venue(std::string_view name) const;
    std::span<const AuthorIdx> authors_of(PaperIdx p) const { return paper_authors_.at(p); }
    // kNoVenue when the record carried no venue
    VenueIdx venue_of(PaperIdx p) const { return paper_venue_.at(p); }
    // Ordered by (year, index).
    std::span<const PaperIdx> papers_of_author(AuthorIdx a) const { return author_papers_.at(a); }
    std::span<const PaperIdx> papers_of_venue(VenueIdx v) const { return venue_papers_.at(v); }
    std::span<const PaperIdx> papers_in_year(int year) const;

    int min_year() const { return min_year_; }
    int max_year() const { return max_year_; }
    std::size_t edge_count() const;

    // Builds a network from already-validated records (references resolved by id).
    static CitationNetwork from_records(std::vector<PaperRecord> records, ParseReport& report);

private:
    std::vector<PaperRecord> papers_;
    std::unordered_map<std::string, PaperIdx> index_;
    std::vector<std::vector<PaperIdx>> cites_;
    std::vector<std::vector<Citer>> cited_by_;
    std::vector<std::map<int, int>> yearly_;
    std::vector<std::string> author_names_;
    std::vector<std::string> venue_names_;
    std::unordered_map<std::string, AuthorIdx> author_index_;
    std::unordered_map<std::string, VenueIdx> venue_index_;
    std::vector<std::vector<AuthorIdx>> paper_authors_;
    std::vector<VenueIdx> paper_venue_;
    std::vector<std::vector<PaperIdx>> author_papers_;
    std::vector<std::vector<PaperIdx>> venue_papers_;
    std::map<int, std::vector<PaperIdx>> by_year_;
    int min_year_ = 0;
    int max_year_ = 0;
};

// Reads the line-delimited corpus format. Lines starting with '#' are headers/comments.
CitationNetwork parse_corpus(std::istream& in, const ParseOptions& options, ParseReport& report);
CitationNetwork parse_corpus_file(const std::string& path, const ParseOptions& options,
                                  ParseReport& report);
std::string corpus_line(const PaperRecord& record);

// --- text features --------------------------------------------------------

struct HashEmbedConfig {
    std::size_t dim = 32;
    std::uint64_t seed = 0x5eedULL;

    void validate() const;
};

std::vector<std::string> tokenize(std::string_view text);
// Signed feature hashing of title + abstract tokens, L2-normalised; empty text -> zeros.
std::vector<double> text_embed(std::string_view title, std::string_view abstract,
                               const HashEmbedConfig& config);
// Seeded pseudo-random unit vector for a key (used when text features are ablated).
std::vector<double> random_embed(std::uint64_t key, const HashEmbedConfig& config);

std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t mix64(std::uint64_t x);

enum class MetaKind : std::uint8_t { Author, Venue, Time };

struct MetaNode {
    MetaKind kind;
    // author/venue id; ignored for Time (the year argument is the time point)
    std::string id;
};

// Caches per-paper text embeddings so metadata averages stay cheap.
class TextFeatures {
public:
    TextFeatures(const CitationNetwork& net, HashEmbedConfig config);

    const HashEmbedConfig& config() const { return config_; }
    std::span<const double> paper(PaperIdx p) const;
    // Mean over the author's papers published strictly before `year`.
    std::vector<double> author(AuthorIdx a, int year) const;
    // Mean over the venue's papers published strictly before `year`.
    std::vector<double> venue(VenueIdx v, int year) const;
    // Mean over all papers published in exactly `year`.
    std::vector<double> time(int year) const;

private:
    std::vector<double> mean_before(std::span<const PaperIdx> papers, int year) const;

    const CitationNetwork& net_;
    HashEmbedConfig config_;
    std::vector<double> table_;
};

std::vector<double> metadata_embedding(const CitationNetwork& net, const MetaNode& node, int year,
                                       const TextFeatures& features);

}  // namespace h2cgl
