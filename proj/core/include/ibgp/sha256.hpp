#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace ibgp {

// Minimal SHA-256 (FIPS 180-4), used to fingerprint scenario files and
// output artifacts in run manifests. Self-contained so the core library
// carries no crypto dependency; checked against the NIST test vectors.
class Sha256 {
 public:
  Sha256();
  void update(const void* data, std::size_t len);
  void update(std::string_view s) { update(s.data(), s.size()); }
  // Finalizes and returns the lowercase hex digest. The object must not be
  // updated afterwards.
  std::string hex_digest();

 private:
  void process_block(const std::uint8_t* block);

  std::uint32_t h_[8];
  std::uint8_t buffer_[64];
  std::size_t buffer_len_;
  std::uint64_t total_len_;
};

std::string sha256_hex(std::string_view data);

}  // namespace ibgp
