#pragma once

#include <openssl/evp.h>

#include <string>
#include <string_view>

#include "sitsrnn/data.hpp"
#include "sitsrnn/error.hpp"

// Requires linking against OpenSSL's libcrypto.

namespace sitsrnn {

// Lowercase hex SHA-256 of `bytes`.
inline std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("io: SHA-256 computation failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

inline std::string sha256_file(const std::string& path) {
  return sha256_hex(detail::read_text_file(path, "io"));
}

}  // namespace sitsrnn
