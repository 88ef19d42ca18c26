#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace acpf {

// FNV-1a, used for scenario hashes and run-log payload digests.
inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string fnv1a_hex(const std::string& data) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(data)));
  return buf;
}

} // namespace acpf
