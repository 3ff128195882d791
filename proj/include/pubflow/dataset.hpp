#pragma once

// On-disk dataset encoding: a 16-byte header ("PFLW", four reserved zero
// bytes, little-endian uint64 element count) followed by little-endian
// IEEE-754 doubles. Checksums are 64-bit FNV-1a over the encoded bytes.

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pubflow/errors.hpp"

namespace pubflow {

using Checksum = std::uint64_t;

inline constexpr Checksum kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr Checksum kFnvPrime = 0x100000001b3ULL;

inline Checksum fnv1a64(std::string_view bytes) {
  Checksum h = kFnvOffset;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

inline std::string checksum_hex(Checksum c) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, c >>= 4) s[static_cast<std::size_t>(i)] = digits[c & 0xf];
  return s;
}

inline Checksum parse_checksum_hex(std::string_view s) {
  if (s.size() != 16) throw FormatError("checksum must be 16 hex digits");
  Checksum c = 0;
  for (char ch : s) {
    c <<= 4;
    if (ch >= '0' && ch <= '9') c |= static_cast<Checksum>(ch - '0');
    else if (ch >= 'a' && ch <= 'f') c |= static_cast<Checksum>(ch - 'a' + 10);
    else throw FormatError("checksum must be lowercase hex");
  }
  return c;
}

namespace dataset_detail {

inline void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64_le(const char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
  return v;
}

}  // namespace dataset_detail

inline constexpr std::size_t kDatasetHeaderSize = 16;

inline std::string encode_doubles(std::span<const double> values) {
  std::string out = "PFLW";
  out.append(4, '\0');
  dataset_detail::put_u64_le(out, values.size());
  out.reserve(kDatasetHeaderSize + 8 * values.size());
  for (double d : values) dataset_detail::put_u64_le(out, std::bit_cast<std::uint64_t>(d));
  return out;
}

inline std::vector<double> decode_doubles(std::string_view bytes) {
  if (bytes.size() < kDatasetHeaderSize || bytes.substr(0, 4) != "PFLW")
    throw FormatError("dataset lacks the PFLW header");
  const std::uint64_t n = dataset_detail::get_u64_le(bytes.data() + 8);
  if (bytes.size() != kDatasetHeaderSize + 8 * n) throw FormatError("dataset length does not match header");
  std::vector<double> out(n);
  for (std::uint64_t i = 0; i < n; ++i)
    out[i] = std::bit_cast<double>(dataset_detail::get_u64_le(bytes.data() + kDatasetHeaderSize + 8 * i));
  return out;
}

}  // namespace pubflow
