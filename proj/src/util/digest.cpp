#include "rdiaudit/util/digest.hpp"

#include <openssl/evp.h>

#include <array>

namespace rdiaudit {

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0x0f]);
  }
  return out;
}

std::string short_digest(std::initializer_list<std::string_view> fields, std::size_t hex_chars) {
  std::string joined;
  bool first = true;
  for (auto f : fields) {
    if (!first) joined.push_back('\x1f');
    joined.append(f);
    first = false;
  }
  return sha256_hex(joined).substr(0, hex_chars);
}

}  // namespace rdiaudit
