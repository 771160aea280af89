/*
   Copyright 2026 The kmix Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/


#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace kmix {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key) noexcept;

std::uint64_t hash_name(std::string_view name) noexcept;
PhiloxKey make_key(std::uint64_t seed, std::string_view module) noexcept;

// Maps 64 random bits to the open interval (0, 1).
inline double to_open01(std::uint64_t u) noexcept {
    return (static_cast<double>(u >> 12) + 0.5) * 0x1.0p-52;
}

// Random access: the j-th 64-bit word of trial `trial` under `key`.
// Two words per Philox block.
std::uint64_t random_word(PhiloxKey key, std::uint64_t trial, std::uint64_t j) noexcept;

inline double random_uniform(PhiloxKey key, std::uint64_t trial, std::uint64_t j) noexcept {
    return to_open01(random_word(key, trial, j));
}

// Sequential stream over the words of one (seed, module, trial) triple.
// Streams for different trials never overlap, whatever the thread layout.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view module, std::uint64_t trial) noexcept
        : key_(make_key(seed, module)), trial_(trial) {}
    RandomStream(PhiloxKey key, std::uint64_t trial) noexcept : key_(key), trial_(trial) {}

    std::uint64_t next_u64() noexcept;
    double uniform() noexcept { return to_open01(next_u64()); }
    double exponential() noexcept;

    // Words consumed so far.
    std::uint64_t position() const noexcept { return block_ * 2 + pos_ - 2; }

private:
    PhiloxKey key_;
    std::uint64_t trial_;
    std::uint64_t block_ = 0;
    unsigned pos_ = 2;
    std::array<std::uint64_t, 2> buf_{};
};

}  // namespace kmix
