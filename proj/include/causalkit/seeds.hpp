#pragma once

#include <cstdint>
#include <string_view>

namespace causalkit {

// FNV-1a, 64 bit. Used for manifest content hashes and subsystem seed
// derivation; stable across platforms and builds, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t state = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        state ^= c;
        state *= 0x100000001b3ULL;
    }
    return state;
}

// Deterministic child seed for a named subsystem. One master --seed flows
// into every RNG through this.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((master >> (8 * i)) & 0xff);
    return fnv1a64(tag, fnv1a64(std::string_view(buf, 8)));
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t index) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((index >> (8 * i)) & 0xff);
    return fnv1a64(std::string_view(buf, 8), derive_seed(master, tag));
}

}  // namespace causalkit
