#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <fstream>
#include <filesystem>
#include <string>
#include <string_view>

#include "ink/error.hpp"

namespace ink {

inline std::string to_hex(const unsigned char* data, std::size_t n) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0x0f]);
    }
    return out;
}

inline std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 digest failed");
    }
    return to_hex(md.data(), len);
}

inline std::string read_file_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open " + p.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline std::string sha256_file(const std::filesystem::path& p) {
    return sha256_hex(read_file_bytes(p));
}

// Short stable identifier over a sequence of fields. Fields are joined by the
// unit separator so ("ab","c") and ("a","bc") differ.
template <typename... Parts>
std::string stable_id(const Parts&... parts) {
    std::string buf;
    ((buf += std::string_view(parts), buf.push_back('\x1f')), ...);
    return sha256_hex(buf).substr(0, 16);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace ink
