#include "core/sha256.hpp"

#include "core/errors.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <sstream>

namespace compindex {

std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) !=
        1) {
        throw Error("SHA-256 digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0x0F];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open file for hashing: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

} // namespace compindex
