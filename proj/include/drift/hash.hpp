#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace drift {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

/// Incremental FNV-1a (64-bit).
class Fnv1a {
public:
    constexpr Fnv1a& byte(std::uint8_t b) noexcept {
        state_ ^= b;
        state_ *= kFnvPrime;
        return *this;
    }
    constexpr Fnv1a& bytes(std::string_view s) noexcept {
        for (char c : s) byte(static_cast<std::uint8_t>(c));
        return *this;
    }
    /// Little-endian byte feed of a 64-bit word.
    constexpr Fnv1a& word(std::uint64_t w) noexcept {
        for (int i = 0; i < 8; ++i) byte(static_cast<std::uint8_t>(w >> (8 * i)));
        return *this;
    }
    constexpr std::uint64_t value() const noexcept { return state_; }

private:
    std::uint64_t state_ = kFnvOffset;
};

constexpr std::uint64_t fnv1a(std::string_view s) noexcept { return Fnv1a{}.bytes(s).value(); }

/// SplitMix64 finalizer; used to derive independent seeds from (base, index) pairs.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept {
    return mix64(mix64(base) ^ (stream * 0xd1b54a32d192ed03ULL));
}

inline std::string to_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Parses exactly 1..16 hex digits; returns false on anything else.
inline bool parse_hex(std::string_view s, std::uint64_t& out) {
    if (s.empty() || s.size() > 16) return false;
    std::uint64_t v = 0;
    for (char c : s) {
        int d;
        if (c >= '0' && c <= '9') d = c - '0';
        else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
        else return false;
        v = (v << 4) | static_cast<std::uint64_t>(d);
    }
    out = v;
    return true;
}

}  // namespace drift
