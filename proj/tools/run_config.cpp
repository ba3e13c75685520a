#include "run_config.hpp"

#include "h2cgl/errors.hpp"
#include "h2cgl/version.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace h2cgl::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Entries parse_config(std::istream& in, const std::string& source) {
    Entries out;
    std::set<std::string> seen;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(source + ":" + std::to_string(n) + ": expected key = value");
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw std::invalid_argument(source + ":" + std::to_string(n) + ": empty key");
        if (!seen.insert(key).second) {
            throw std::invalid_argument(source + ":" + std::to_string(n) + ": duplicate key '" + key + "'");
        }
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

Entries read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file " + path);
    return parse_config(in, path);
}

void write_config(std::ostream& out, const Entries& entries) {
    for (const auto& [k, v] : entries) out << k << " = " << v << '\n';
}

std::pair<std::string, std::string> split_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("expected key=value, got '" + text + "'");
    return {trim(text.substr(0, eq)), trim(text.substr(eq + 1))};
}

Entries BuildSettings::entries() const {
    return {
        {"train_obs", to_text(train_obs)},
        {"val_obs", to_text(val_obs)},
        {"test_obs", to_text(test_obs)},
        {"delta", to_text(delta)},
        {"window", to_text(window)},
        {"k", to_text(k)},
        {"dim", to_text(dim)},
        {"feature_seed", to_text(feature_seed)},
        {"min_references", to_text(min_references)},
        {"min_citations", to_text(min_citations)},
        {"strict", strict ? "true" : "false"},
        {"min_abstract_words", to_text(min_abstract_words)},
    };
}

void BuildSettings::set(const std::string& key, const std::string& v) {
    if (key == "train_obs") train_obs = parse_setting<int>(key, v);
    else if (key == "val_obs") val_obs = parse_setting<int>(key, v);
    else if (key == "test_obs") test_obs = parse_setting<int>(key, v);
    else if (key == "delta") delta = parse_setting<int>(key, v);
    else if (key == "window") window = parse_setting<int>(key, v);
    else if (key == "k") k = parse_setting<std::size_t>(key, v);
    else if (key == "dim") dim = parse_setting<std::size_t>(key, v);
    else if (key == "feature_seed") feature_seed = parse_setting<std::uint64_t>(key, v);
    else if (key == "min_references") min_references = parse_setting<int>(key, v);
    else if (key == "min_citations") min_citations = parse_setting<int>(key, v);
    else if (key == "strict") strict = parse_setting<bool>(key, v);
    else if (key == "min_abstract_words") min_abstract_words = parse_setting<std::size_t>(key, v);
    else throw std::invalid_argument("unknown build key '" + key + "'");
}

}  // namespace h2cgl::cli
