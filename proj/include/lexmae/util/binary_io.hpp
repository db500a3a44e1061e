#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "lexmae/util/errors.hpp"

namespace lexmae::util {

/// CRC-32 (zlib polynomial) of a byte range.
std::uint32_t crc32(std::string_view bytes);

/// 64-bit FNV-1a; stable across platforms, used for provenance hashes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

/// Little-endian append-only byte buffer.
class BinaryWriter {
  public:
    template <typename T>
        requires std::is_arithmetic_v<T>
    void put(T value)
    {
        static_assert(std::endian::native == std::endian::little, "little-endian host required");
        char raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        m_bytes.append(raw, sizeof(T));
    }

    void put_bytes(std::string_view bytes) { m_bytes.append(bytes); }

    void put_string(std::string_view s)
    {
        put(static_cast<std::uint32_t>(s.size()));
        m_bytes.append(s);
    }

    /// Appends the CRC-32 of everything written so far.
    void seal() { put(crc32(m_bytes)); }

    [[nodiscard]] const std::string& bytes() const noexcept { return m_bytes; }
    [[nodiscard]] std::size_t size() const noexcept { return m_bytes.size(); }

  private:
    std::string m_bytes;
};

/// Bounds-checked reader; any overrun raises format_error instead of reading past the end.
class BinaryReader {
  public:
    explicit BinaryReader(std::string_view bytes) : m_bytes(bytes) {}

    template <typename T>
        requires std::is_arithmetic_v<T>
    T get()
    {
        need(sizeof(T));
        T value;
        std::memcpy(&value, m_bytes.data() + m_pos, sizeof(T));
        m_pos += sizeof(T);
        return value;
    }

    std::string_view get_bytes(std::size_t count)
    {
        need(count);
        auto out = m_bytes.substr(m_pos, count);
        m_pos += count;
        return out;
    }

    std::string get_string()
    {
        auto len = get<std::uint32_t>();
        return std::string(get_bytes(len));
    }

    [[nodiscard]] std::size_t position() const noexcept { return m_pos; }
    [[nodiscard]] std::size_t remaining() const noexcept { return m_bytes.size() - m_pos; }

  private:
    void need(std::size_t count) const
    {
        if (count > m_bytes.size() - m_pos) {
            throw format_error("unexpected end of data (truncated file?)");
        }
    }

    std::string_view m_bytes;
    std::size_t m_pos = 0;
};

/// Verifies and strips a trailing CRC-32 written by BinaryWriter::seal.
std::string_view verify_sealed(std::string_view bytes);

}  // namespace lexmae::util
