#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace localhealth {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view bytes);
std::string to_hex(const Digest& digest);
Digest digest_from_hex(std::string_view hex);

}  // namespace localhealth
