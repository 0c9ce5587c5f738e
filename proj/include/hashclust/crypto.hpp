#pragma once

#include <hashclust/bytes.hpp>

#include <array>
#include <cstdint>
#include <string>

namespace hashclust {

std::array<std::uint8_t, 16> md5(byte_view data);
std::array<std::uint8_t, 32> sha256(byte_view data);

std::string to_hex(byte_view data);
std::string sha256_hex(byte_view data);

} // namespace hashclust
