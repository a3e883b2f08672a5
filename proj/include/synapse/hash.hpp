/*
 * Copyright 2026 The Synapse Simulator Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SYNAPSE_HASH_HPP_
#define SYNAPSE_HASH_HPP_

#include <cstddef>
#include <cstdint>
#include <span>

namespace synapse {

namespace detail {

constexpr std::uint32_t rot32(std::uint32_t x, int k) { return (x << k) | (x >> (32 - k)); }

constexpr void lookup3_mix(std::uint32_t& a, std::uint32_t& b, std::uint32_t& c) {
    a -= c; a ^= rot32(c, 4);  c += b;
    b -= a; b ^= rot32(a, 6);  a += c;
    c -= b; c ^= rot32(b, 8);  b += a;
    a -= c; a ^= rot32(c, 16); c += b;
    b -= a; b ^= rot32(a, 19); a += c;
    c -= b; c ^= rot32(b, 4);  b += a;
}

constexpr void lookup3_final(std::uint32_t& a, std::uint32_t& b, std::uint32_t& c) {
    c ^= b; c -= rot32(b, 14);
    a ^= c; a -= rot32(c, 11);
    b ^= a; b -= rot32(a, 25);
    c ^= b; c -= rot32(b, 16);
    a ^= c; a -= rot32(c, 4);
    b ^= a; b -= rot32(a, 14);
    c ^= b; c -= rot32(b, 24);
}

} // namespace detail

/// Bob Jenkins' lookup3 `hashlittle`, byte-at-a-time path. Reads bytes
/// individually so the result does not depend on host endianness or
/// alignment; on little-endian hosts it equals the reference hashlittle().
constexpr std::uint32_t lookup3(std::span<const std::uint8_t> data, std::uint32_t initval = 0) {
    std::size_t length = data.size();
    std::uint32_t a = 0xdeadbeefU + static_cast<std::uint32_t>(length) + initval;
    std::uint32_t b = a;
    std::uint32_t c = a;
    const std::uint8_t* k = data.data();

    auto at = [&](std::size_t i, int shift) { return static_cast<std::uint32_t>(k[i]) << shift; };

    while (length > 12) {
        a += at(0, 0) + at(1, 8) + at(2, 16) + at(3, 24);
        b += at(4, 0) + at(5, 8) + at(6, 16) + at(7, 24);
        c += at(8, 0) + at(9, 8) + at(10, 16) + at(11, 24);
        detail::lookup3_mix(a, b, c);
        length -= 12;
        k += 12;
    }

    switch (length) {
    case 12: c += at(11, 24); [[fallthrough]];
    case 11: c += at(10, 16); [[fallthrough]];
    case 10: c += at(9, 8); [[fallthrough]];
    case 9: c += at(8, 0); [[fallthrough]];
    case 8: b += at(7, 24); [[fallthrough]];
    case 7: b += at(6, 16); [[fallthrough]];
    case 6: b += at(5, 8); [[fallthrough]];
    case 5: b += at(4, 0); [[fallthrough]];
    case 4: a += at(3, 24); [[fallthrough]];
    case 3: a += at(2, 16); [[fallthrough]];
    case 2: a += at(1, 8); [[fallthrough]];
    case 1: a += at(0, 0); break;
    case 0: return c;
    }
    detail::lookup3_final(a, b, c);
    return c;
}

/// Hash of a pair of 32-bit words, serialized little-endian. Used for
/// ring positions and per-flow routing decisions.
constexpr std::uint32_t lookup3_words(std::uint32_t w0, std::uint32_t w1, std::uint32_t seed) {
    const std::uint8_t bytes[8] = {
        static_cast<std::uint8_t>(w0),       static_cast<std::uint8_t>(w0 >> 8),
        static_cast<std::uint8_t>(w0 >> 16), static_cast<std::uint8_t>(w0 >> 24),
        static_cast<std::uint8_t>(w1),       static_cast<std::uint8_t>(w1 >> 8),
        static_cast<std::uint8_t>(w1 >> 16), static_cast<std::uint8_t>(w1 >> 24),
    };
    return lookup3(std::span<const std::uint8_t>(bytes, 8), seed);
}

} // namespace synapse

#endif // SYNAPSE_HASH_HPP_
