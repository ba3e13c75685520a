#include "h2cgl/synth.hpp"

#include "h2cgl/version.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <stdexcept>

namespace h2cgl {

void SynthConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("synth config: " + msg); };
    if (n_years < 2) fail("n_years must be >= 2");
    if (papers_per_year < 1) fail("papers_per_year must be positive");
    if (refs_min < 1) fail("refs_min must be >= 1");
    if (refs_max < refs_min) fail("refs_max must be >= refs_min");
    if (recency_decay < 0.0) fail("recency_decay must be nonnegative");
    if (vocab_size < 1) fail("vocab_size must be positive");
    if (n_venues < 1 || n_authors < 1) fail("n_venues and n_authors must be positive");
    if (authors_min < 0 || authors_max < authors_min) fail("bad authors range");
    if (title_words < 0 || abstract_words < 0) fail("word counts must be nonnegative");
    if (sleeping_fraction < 0.0 || sleeping_fraction > 1.0) fail("sleeping_fraction must be in [0,1]");
    if (sleeping_years < 0 || sleeping_boost < 0.0) fail("bad sleeping-beauty parameters");
}

std::vector<std::pair<std::string, std::string>> SynthConfig::entries() const {
    return {
        {"start_year", to_text(start_year)},
        {"n_years", to_text(n_years)},
        {"papers_per_year", to_text(papers_per_year)},
        {"refs_min", to_text(refs_min)},
        {"refs_max", to_text(refs_max)},
        {"recency_decay", to_text(recency_decay)},
        {"vocab_size", to_text(vocab_size)},
        {"n_venues", to_text(n_venues)},
        {"n_authors", to_text(n_authors)},
        {"authors_min", to_text(authors_min)},
        {"authors_max", to_text(authors_max)},
        {"title_words", to_text(title_words)},
        {"abstract_words", to_text(abstract_words)},
        {"sleeping_fraction", to_text(sleeping_fraction)},
        {"sleeping_years", to_text(sleeping_years)},
        {"sleeping_boost", to_text(sleeping_boost)},
        {"attachment", attachment == Attachment::Preferential ? "preferential" : "uniform"},
        {"seed", to_text(seed)},
    };
}

void SynthConfig::set(const std::string& key, const std::string& v) {
    if (key == "start_year") start_year = parse_setting<int>(key, v);
    else if (key == "n_years") n_years = parse_setting<int>(key, v);
    else if (key == "papers_per_year") papers_per_year = parse_setting<int>(key, v);
    else if (key == "refs_min") refs_min = parse_setting<int>(key, v);
    else if (key == "refs_max") refs_max = parse_setting<int>(key, v);
    else if (key == "recency_decay") recency_decay = parse_setting<double>(key, v);
    else if (key == "vocab_size") vocab_size = parse_setting<int>(key, v);
    else if (key == "n_venues") n_venues = parse_setting<int>(key, v);
    else if (key == "n_authors") n_authors = parse_setting<int>(key, v);
    else if (key == "authors_min") authors_min = parse_setting<int>(key, v);
    else if (key == "authors_max") authors_max = parse_setting<int>(key, v);
    else if (key == "title_words") title_words = parse_setting<int>(key, v);
    else if (key == "abstract_words") abstract_words = parse_setting<int>(key, v);
    else if (key == "sleeping_fraction") sleeping_fraction = parse_setting<double>(key, v);
    else if (key == "sleeping_years") sleeping_years = parse_setting<int>(key, v);
    else if (key == "sleeping_boost") sleeping_boost = parse_setting<double>(key, v);
    else if (key == "attachment") {
        if (v == "preferential") attachment = Attachment::Preferential;
        else if (v == "uniform") attachment = Attachment::Uniform;
        else throw std::invalid_argument("bad value '" + v + "' for attachment (preferential|uniform)");
    } else if (key == "seed") seed = parse_setting<std::uint64_t>(key, v);
    else throw std::invalid_argument("unknown synth key '" + key + "'");
}

std::string SynthConfig::hash() const { return hash_entries(entries()); }

namespace {

std::string words(std::mt19937_64& rng, int count, int vocab) {
    std::uniform_int_distribution<int> pick(0, vocab - 1);
    std::string out;
    for (int i = 0; i < count; ++i) {
        if (i > 0) out.push_back(' ');
        out += "w" + std::to_string(pick(rng));
    }
    return out;
}

}  // namespace

std::vector<PaperRecord> generate(const SynthConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const std::size_t total = static_cast<std::size_t>(config.n_years) * static_cast<std::size_t>(config.papers_per_year);
    std::vector<PaperRecord> papers;
    papers.reserve(total);
    std::vector<int> citations;
    std::vector<bool> sleeping;
    citations.reserve(total);
    sleeping.reserve(total);

    std::vector<std::pair<double, std::size_t>> keys;
    for (int yi = 0; yi < config.n_years; ++yi) {
        const int year = config.start_year + yi;
        // Only papers from strictly earlier years are citable.
        const std::size_t citable = papers.size();
        for (int k = 0; k < config.papers_per_year; ++k) {
            PaperRecord rec;
            rec.id = "P" + std::to_string(year) + "-" + std::to_string(k);
            rec.year = year;
            rec.title = words(rng, config.title_words, config.vocab_size);
            rec.abstract = words(rng, config.abstract_words, config.vocab_size);
            rec.venue_id = "V" + std::to_string(std::uniform_int_distribution<int>(0, config.n_venues - 1)(rng));
            const int n_auth = std::uniform_int_distribution<int>(config.authors_min, config.authors_max)(rng);
            for (int a = 0; a < n_auth; ++a) {
                std::string name = "A" + std::to_string(std::uniform_int_distribution<int>(0, config.n_authors - 1)(rng));
                if (std::find(rec.author_ids.begin(), rec.author_ids.end(), name) == rec.author_ids.end()) {
                    rec.author_ids.push_back(std::move(name));
                }
            }

            const int wanted = std::uniform_int_distribution<int>(config.refs_min, config.refs_max)(rng);
            // Weighted sampling without replacement (exponential-key method).
            keys.clear();
            for (std::size_t j = 0; j < citable; ++j) {
                const int age = year - papers[j].year;
                double w = std::exp(-config.recency_decay * age);
                if (config.attachment == Attachment::Preferential) w *= citations[j] + 1.0;
                if (sleeping[j]) w = age < config.sleeping_years ? 0.0 : w * config.sleeping_boost;
                const double u = unit(rng);
                if (w <= 0.0) continue;
                keys.emplace_back(std::log(std::max(u, 1e-300)) / w, j);
            }
            const std::size_t n_refs = std::min<std::size_t>(static_cast<std::size_t>(wanted), keys.size());
            std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(n_refs), keys.end(),
                              [](const auto& a, const auto& b) {
                                  return a.first != b.first ? a.first > b.first : a.second < b.second;
                              });
            std::vector<std::size_t> chosen;
            for (std::size_t i = 0; i < n_refs; ++i) chosen.push_back(keys[i].second);
            std::sort(chosen.begin(), chosen.end());
            for (std::size_t j : chosen) {
                rec.references.push_back(papers[j].id);
                ++citations[j];
            }
            papers.push_back(std::move(rec));
            citations.push_back(0);
            sleeping.push_back(unit(rng) < config.sleeping_fraction);
        }
    }
    return papers;
}

void write_corpus(std::ostream& out, const std::vector<PaperRecord>& records, const std::string& config_hash) {
    out << "# h2cgl corpus version=" << kToolVersion << " config_hash=" << config_hash << "\n";
    for (const auto& r : records) out << corpus_line(r) << "\n";
}

}  // namespace h2cgl
