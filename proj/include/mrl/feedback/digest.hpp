#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mrl::feedback {

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);
// Sixteen lowercase hex digits.
std::string hex64(std::uint64_t v);
inline std::string digest_hex(std::string_view data) { return hex64(fnv1a64(data)); }

}  // namespace mrl::feedback
