#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace gmf {

using Sha256 = std::array<std::uint8_t, 32>;

//! Incremental SHA-256 (OpenSSL EVP backend).
class Sha256Builder
{
public:
  Sha256Builder();
  ~Sha256Builder();
  Sha256Builder(const Sha256Builder&) = delete;
  Sha256Builder& operator=(const Sha256Builder&) = delete;

  void update(std::span<const std::uint8_t> bytes);
  void update(std::string_view text);
  Sha256 finish();

private:
  void* ctx_;
};

Sha256 sha256(std::span<const std::uint8_t> bytes);
Sha256 sha256(std::string_view text);
std::string to_hex(const Sha256& digest);
//! Digest of a file's bytes; throws IoError when unreadable.
std::string file_sha256_hex(const std::string& path);

} // namespace gmf
