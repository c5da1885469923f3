#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace llc::io {

/// Thrown for malformed or truncated files.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

template <class T>
void write_le(std::ostream& os, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    os.write(bytes.data(), sizeof(T));
}

template <class T>
T read_le(std::istream& is) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<char, sizeof(T)> bytes;
    if (!is.read(bytes.data(), sizeof(T))) throw FormatError("unexpected end of file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

inline constexpr std::uint32_t kEndianTag = 0x01020304u;

inline void write_magic(std::ostream& os, const char (&magic)[9]) { os.write(magic, 8); }

inline void expect_magic(std::istream& is, const char (&magic)[9], const std::string& what) {
    char buf[8];
    if (!is.read(buf, 8) || std::memcmp(buf, magic, 8) != 0) throw FormatError("not a " + what + " file (bad magic)");
}

/// Reads a float array stored with `width` bytes per element.
inline double read_float(std::istream& is, std::uint8_t width) {
    if (width == 8) return read_le<double>(is);
    if (width == 4) return static_cast<double>(read_le<float>(is));
    throw FormatError("unsupported float width " + std::to_string(width));
}

inline void write_float(std::ostream& os, double v, std::uint8_t width) {
    if (width == 8)
        write_le<double>(os, v);
    else if (width == 4)
        write_le<float>(os, static_cast<float>(v));
    else
        throw std::invalid_argument("unsupported float width " + std::to_string(width));
}

}  // namespace llc::io
