#pragma once

#include "h2cgl/errors.hpp"

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

namespace h2cgl::io {

// Little helpers for the length-prefixed binary containers (checkpoints, sample caches).
class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    void pod(const T& v) {
        out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
    }

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    void pod_vector(std::span<const T> v) {
        pod<std::uint64_t>(v.size());
        if (!v.empty()) {
            out_.write(reinterpret_cast<const char*>(v.data()),
                       static_cast<std::streamsize>(v.size() * sizeof(T)));
        }
    }

    void string(const std::string& s) {
        pod<std::uint64_t>(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }

    bool good() const { return out_.good(); }

private:
    std::ostream& out_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& in) : in_(in) {}

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    T pod() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        check();
        return v;
    }

    template <typename T>
        requires std::is_trivially_copyable_v<T>
    std::vector<T> pod_vector(std::uint64_t max_len = (1ULL << 34)) {
        const auto n = pod<std::uint64_t>();
        if (n > max_len) throw DataError("binary container: implausible vector length");
        std::vector<T> v(n);
        if (n > 0) {
            in_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
            check();
        }
        return v;
    }

    std::string string() {
        const auto n = pod<std::uint64_t>();
        if (n > (1ULL << 30)) throw DataError("binary container: implausible string length");
        std::string s(n, '\0');
        if (n > 0) {
            in_.read(s.data(), static_cast<std::streamsize>(n));
            check();
        }
        return s;
    }

private:
    void check() {
        if (!in_) throw DataError("binary container: unexpected end of file");
    }

    std::istream& in_;
};

}  // namespace h2cgl::io
