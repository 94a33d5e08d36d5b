#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rrl::io {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <class U>
inline U to_little(U v) noexcept {
    if constexpr (std::endian::native == std::endian::big) {
        U out = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) out = (out << 8) | ((v >> (8 * i)) & 0xFF);
        return out;
    } else {
        return v;
    }
}

inline void write_u32(std::ostream& os, std::uint32_t v) {
    v = to_little(v);
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

inline void write_f64(std::ostream& os, double d) {
    auto v = to_little(std::bit_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

/// Reader that reports truncation with a format-specific message.
class LittleEndianReader {
public:
    LittleEndianReader(std::istream& is, std::string what) : is_(is), what_(std::move(what)) {}

    void bytes(char* out, std::size_t n) {
        is_.read(out, static_cast<std::streamsize>(n));
        if (static_cast<std::size_t>(is_.gcount()) != n) throw FormatError("unexpected end of " + what_);
    }

    std::uint32_t u32() {
        std::uint32_t v;
        bytes(reinterpret_cast<char*>(&v), sizeof v);
        return to_little(v);
    }

    double f64() {
        std::uint64_t v;
        bytes(reinterpret_cast<char*>(&v), sizeof v);
        return std::bit_cast<double>(to_little(v));
    }

    void expect_magic(const std::array<char, 4>& magic) {
        std::array<char, 4> got{};
        bytes(got.data(), got.size());
        if (got != magic)
            throw FormatError("bad magic in " + what_ + ": expected \"" + std::string(magic.data(), 4) + "\"");
    }

    void expect_end() {
        if (is_.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after " + what_);
    }

private:
    std::istream& is_;
    std::string what_;
};

}  // namespace rrl::io
