#include "lexmae/util/binary_io.hpp"

#include <zlib.h>

#include <cstdio>

namespace lexmae::util {

std::uint32_t crc32(std::string_view bytes)
{
    uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32_z(crc, reinterpret_cast<const Bytef*>(bytes.data()), bytes.size());
    return static_cast<std::uint32_t>(crc);
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed)
{
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value)
{
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string_view verify_sealed(std::string_view bytes)
{
    if (bytes.size() < sizeof(std::uint32_t)) {
        throw format_error("file too short to hold a checksum");
    }
    auto body = bytes.substr(0, bytes.size() - sizeof(std::uint32_t));
    BinaryReader tail(bytes.substr(body.size()));
    if (tail.get<std::uint32_t>() != crc32(body)) {
        throw format_error("checksum mismatch (corrupt or truncated file)");
    }
    return body;
}

}  // namespace lexmae::util
