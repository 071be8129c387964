// SPDX-License-Identifier: Apache-2.0

#ifndef TCDA_SEED_HPP
#define TCDA_SEED_HPP

#include <cstdint>
#include <initializer_list>

namespace tcda
{
    // splitmix64 finalizer
    constexpr std::uint64_t mix64(std::uint64_t x) noexcept
    {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Order-sensitive combination of a master seed with stream coordinates.
    constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) noexcept
    {
        std::uint64_t h = mix64(master);
        for (auto c : coords)
            h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
        return h;
    }
} // namespace tcda

#endif // TCDA_SEED_HPP
