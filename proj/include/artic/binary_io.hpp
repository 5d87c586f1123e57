#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "artic/error.hpp"

// Little-endian primitives shared by the binary file formats.
namespace artic::binio {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
    requires std::is_trivially_copyable_v<T>
void put(std::ostream& os, T value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
    requires std::is_trivially_copyable_v<T>
void put_span(std::ostream& os, std::span<const T> values) {
    os.write(reinterpret_cast<const char*>(values.data()),
             static_cast<std::streamsize>(values.size_bytes()));
}

inline void put_magic(std::ostream& os, std::string_view magic) {
    os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

template <typename T>
    requires std::is_trivially_copyable_v<T>
T get(std::istream& is, std::string_view what) {
    T value{};
    if (!is.read(reinterpret_cast<char*>(&value), sizeof(T)))
        throw CorruptFileError("truncated file while reading " + std::string(what));
    return value;
}

template <typename T>
    requires std::is_trivially_copyable_v<T>
void get_span(std::istream& is, std::span<T> out, std::string_view what) {
    if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes())))
        throw CorruptFileError("truncated file while reading " + std::string(what));
}

/// Reads 4 bytes and returns whether they equal the expected tag.
inline bool check_magic(std::istream& is, std::string_view magic) {
    std::array<char, 4> buf{};
    if (!is.read(buf.data(), 4)) return false;
    return std::string_view(buf.data(), 4) == magic;
}

}  // namespace artic::binio
