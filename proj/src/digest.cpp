#include "gmf/digest.hpp"

#include "gmf/common.hpp"

#include <fstream>
#include <vector>

#include <openssl/evp.h>

namespace gmf {

Sha256Builder::Sha256Builder()
  : ctx_(EVP_MD_CTX_new())
{
  if (!ctx_ || EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest initialization failed");
}

Sha256Builder::~Sha256Builder()
{
  EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_));
}

void Sha256Builder::update(std::span<const std::uint8_t> bytes)
{
  if (!bytes.empty())
    EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), bytes.data(), bytes.size());
}

void Sha256Builder::update(std::string_view text)
{
  update(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Sha256 Sha256Builder::finish()
{
  Sha256 out{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &len);
  return out;
}

Sha256 sha256(std::span<const std::uint8_t> bytes)
{
  Sha256Builder b;
  b.update(bytes);
  return b.finish();
}

Sha256 sha256(std::string_view text)
{
  Sha256Builder b;
  b.update(text);
  return b.finish();
}

std::string to_hex(const Sha256& digest)
{
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (auto byte : digest) {
    s.push_back(digits[byte >> 4]);
    s.push_back(digits[byte & 0xF]);
  }
  return s;
}

std::string file_sha256_hex(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open '" + path + "' for hashing");
  Sha256Builder b;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = static_cast<std::size_t>(in.gcount());
    b.update(std::span(reinterpret_cast<const std::uint8_t*>(buf.data()), got));
  }
  return to_hex(b.finish());
}

} // namespace gmf
