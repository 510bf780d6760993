#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace qbm {

// FNV-1a 64-bit hash; used for checkpoint checksums and stable
// string-derived seeds.
inline uint64_t fnv1a64(std::string_view bytes, uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Little-endian append helpers for the binary checkpoint format.
inline void append_u32_le(std::string& out, uint32_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
  out.push_back(char((v >> 16) & 0xff));
  out.push_back(char((v >> 24) & 0xff));
}

inline void append_u64_le(std::string& out, uint64_t v) {
  append_u32_le(out, uint32_t(v & 0xffffffffull));
  append_u32_le(out, uint32_t(v >> 32));
}

inline void append_f32_le(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  append_u32_le(out, bits);
}

inline uint32_t read_u32_le(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 |
         uint32_t(p[3]) << 24;
}

inline uint64_t read_u64_le(const unsigned char* p) {
  return uint64_t(read_u32_le(p)) | uint64_t(read_u32_le(p + 4)) << 32;
}

inline float read_f32_le(const unsigned char* p) {
  uint32_t bits = read_u32_le(p);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace qbm
