#pragma once

#include <cstdint>
#include <string_view>

namespace mgraph {

// Stable FNV-1a based sub-seed derivation: all randomness in a run flows
// from one master seed plus a purpose string.
inline uint64_t derive_seed(uint64_t master, std::string_view purpose) {
    uint64_t h = 14695981039346656037ull;
    auto mix = [&h](uint8_t byte) {
        h ^= byte;
        h *= 1099511628211ull;
    };
    for (int i = 0; i < 8; ++i) mix(static_cast<uint8_t>(master >> (8 * i)));
    for (char c : purpose) mix(static_cast<uint8_t>(c));
    return h;
}

inline uint64_t derive_seed(uint64_t master, std::string_view purpose, uint64_t index) {
    uint64_t h = derive_seed(master, purpose);
    h ^= index + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

}  // namespace mgraph
