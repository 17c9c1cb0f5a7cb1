#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "primestat/error.hpp"

namespace primestat {

using Sha256 = std::array<std::uint8_t, 32>;

/// Incremental SHA-256 over byte chunks.
class Sha256Builder {
public:
    Sha256Builder() : ctx_(EVP_MD_CTX_new(), &EVP_MD_CTX_free)
    {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw std::runtime_error("SHA-256 unavailable");
        }
    }

    Sha256Builder& update(std::span<const std::uint8_t> bytes)
    {
        EVP_DigestUpdate(ctx_.get(), bytes.data(), bytes.size());
        return *this;
    }
    Sha256Builder& update(std::string_view s)
    {
        EVP_DigestUpdate(ctx_.get(), s.data(), s.size());
        return *this;
    }

    Sha256 finish()
    {
        Sha256 out{};
        unsigned len = 0;
        EVP_DigestFinal_ex(ctx_.get(), out.data(), &len);
        return out;
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

inline std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (const std::uint8_t b : bytes) {
        out += digits[b >> 4];
        out += digits[b & 15];
    }
    return out;
}

inline std::string sha256_hex(std::string_view s) { return to_hex(Sha256Builder().update(s).finish()); }

}  // namespace primestat
