#pragma once

#include "h2cgl/corpus.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace h2cgl {

enum class Attachment : std::uint8_t {
    // weight ∝ (citations so far + 1) · exp(-λ · age)
    Preferential,
    // weight ∝ exp(-λ · age); control for degree-distribution comparisons
    Uniform,
};

struct SynthConfig {
    int start_year = 2000;
    int n_years = 20;
    int papers_per_year = 120;
    int refs_min = 6;
    int refs_max = 14;
    double recency_decay = 0.6;
    int vocab_size = 2000;
    int n_venues = 20;
    int n_authors = 800;
    int authors_min = 1;
    int authors_max = 3;
    int title_words = 8;
    int abstract_words = 40;
    double sleeping_fraction = 0.02;
    int sleeping_years = 5;
    double sleeping_boost = 4.0;
    Attachment attachment = Attachment::Preferential;
    std::uint64_t seed = 42;

    void validate() const;
    // Ordered key/value view used for hashing and for the corpus header.
    std::vector<std::pair<std::string, std::string>> entries() const;
    // Throws std::invalid_argument on an unknown key or unparsable value.
    void set(const std::string& key, const std::string& value);
    std::string hash() const;
};

std::vector<PaperRecord> generate(const SynthConfig& config);
// Header comment line followed by one record per line.
void write_corpus(std::ostream& out, const std::vector<PaperRecord>& records,
                  const std::string& config_hash);

}  // namespace h2cgl
