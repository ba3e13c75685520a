#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace h2cgl::cli {

using Entries = std::vector<std::pair<std::string, std::string>>;

// "key = value" per line; blank lines and '#' comments are skipped. Duplicate keys throw
// std::invalid_argument, as does any line without '='.
Entries parse_config(std::istream& in, const std::string& source = "config");
Entries read_config_file(const std::string& path);
void write_config(std::ostream& out, const Entries& entries);

// "key=value" from a --set flag.
std::pair<std::string, std::string> split_assignment(const std::string& text);

// Settings resolved from defaults, then the config file, then --set, then named flags.
template <typename Settings>
void apply_entries(Settings& settings, const Entries& entries) {
    for (const auto& [k, v] : entries) settings.set(k, v);
}

// Sample-cache construction settings.
struct BuildSettings {
    int train_obs = 0;  // 0: derived from the corpus year range
    int val_obs = 0;
    int test_obs = 0;
    int delta = 5;
    int window = 5;
    std::size_t k = 20;
    std::size_t dim = 32;
    std::uint64_t feature_seed = 0x5eed;
    int min_references = 5;
    int min_citations = 10;
    bool strict = false;
    std::size_t min_abstract_words = 20;

    Entries entries() const;
    void set(const std::string& key, const std::string& value);
};

}  // namespace h2cgl::cli
