// Copyright 2026 The CODA Lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "coda/common.hpp"

namespace coda {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t index)
{
    // FNV-1a over the tag, then a splitmix64 finalizer over the combination.
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ h) ^ index);
}

} // namespace coda
