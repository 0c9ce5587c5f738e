#include <hashclust/crypto.hpp>
#include <hashclust/error.hpp>

#include <openssl/evp.h>

#include <memory>

namespace hashclust {

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> evp_digest(const EVP_MD* md, byte_view data) {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    std::array<std::uint8_t, N> out{};
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != N) {
        throw error(errc::invalid_argument, "message digest failed");
    }
    return out;
}

} // namespace

std::array<std::uint8_t, 16> md5(byte_view data) {
    return evp_digest<16>(EVP_md5(), data);
}

std::array<std::uint8_t, 32> sha256(byte_view data) {
    return evp_digest<32>(EVP_sha256(), data);
}

std::string to_hex(byte_view data) {
    constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(data.size() * 2);
    for (std::uint8_t b : data) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0x0f]);
    }
    return out;
}

std::string sha256_hex(byte_view data) {
    return to_hex(sha256(data));
}

} // namespace hashclust
