#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "dronepower/errors.hpp"

namespace dronepower {

namespace detail {

inline std::uint32_t byteswap32(std::uint32_t v) {
    return ((v & 0xFF000000u) >> 24) | ((v & 0x00FF0000u) >> 8) |
           ((v & 0x0000FF00u) << 8) | ((v & 0x000000FFu) << 24);
}

inline std::uint64_t byteswap64(std::uint64_t v) {
    return (static_cast<std::uint64_t>(byteswap32(static_cast<std::uint32_t>(v))) << 32) |
           byteswap32(static_cast<std::uint32_t>(v >> 32));
}

inline std::uint32_t to_le32(std::uint32_t v) {
    return std::endian::native == std::endian::little ? v : byteswap32(v);
}

inline std::uint64_t to_le64(std::uint64_t v) {
    return std::endian::native == std::endian::little ? v : byteswap64(v);
}

}  // namespace detail

/// Append-only little-endian byte sink.
class ByteWriter {
public:
    void u32(std::uint32_t v) {
        v = detail::to_le32(v);
        append(&v, 4);
    }
    void u64(std::uint64_t v) {
        v = detail::to_le64(v);
        append(&v, 8);
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        u64(bits);
    }
    void bytes(const void* data, std::size_t n) { append(data, n); }
    void str(std::string_view s) {
        u32(static_cast<std::uint32_t>(s.size()));
        append(s.data(), s.size());
    }

    const std::vector<std::uint8_t>& buffer() const { return buf_; }

private:
    void append(const void* data, std::size_t n) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }
    std::vector<std::uint8_t> buf_;
};

/// Cursor over a little-endian byte buffer. Throws ParseError on underrun.
class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& buf) : buf_(buf) {}

    std::uint32_t u32() {
        std::uint32_t v;
        take(&v, 4);
        return detail::to_le32(v);
    }
    std::uint64_t u64() {
        std::uint64_t v;
        take(&v, 8);
        return detail::to_le64(v);
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string str() {
        const std::uint32_t n = u32();
        std::string s(n, '\0');
        take(s.data(), n);
        return s;
    }
    void raw(void* out, std::size_t n) { take(out, n); }
    std::size_t remaining() const { return buf_.size() - pos_; }
    std::size_t position() const { return pos_; }

private:
    void take(void* out, std::size_t n) {
        if (pos_ + n > buf_.size()) {
            throw ParseError("unexpected end of buffer at offset " + std::to_string(pos_));
        }
        std::memcpy(out, buf_.data() + pos_, n);
        pos_ += n;
    }
    const std::vector<std::uint8_t>& buf_;
    std::size_t pos_ = 0;
};

/// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320).
inline std::uint32_t crc32(const std::uint8_t* data, std::size_t n,
                           std::uint32_t seed = 0) {
    static const std::array<std::uint32_t, 256> table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) {
                c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            }
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = ~seed;
    for (std::size_t i = 0; i < n; ++i) {
        crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    }
    return ~crc;
}

inline std::uint32_t crc32(const std::vector<std::uint8_t>& data) {
    return crc32(data.data(), data.size());
}

/// FNV-1a 64-bit hash, used for input fingerprints in manifests and caches.
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file: " + path.string());
    }
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
    return buf;
}

inline std::string read_file_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open file: " + path.string());
    }
    return std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open file for writing: " + path.string());
    }
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw IoError("short write: " + path.string());
    }
}

inline void write_file_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open file for writing: " + path.string());
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw IoError("short write: " + path.string());
    }
}

}  // namespace dronepower
