// Copyright 2026 The Latte Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except in compliance
// with the License. You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under the License.

#pragma once

// Deterministic random source. std::mt19937_64's raw output sequence is fixed by the C++ standard,
// but the std:: distributions are not, so every conversion below is spelled out:
//   uniform01:  (x >> 11) * 2^-53                      (53-bit mantissa, in [0, 1))
//   below(n):   x % n                                  (modulo; bias is negligible for small n)
//   normal:     Box-Muller, sqrt(-2 ln(1 - u1)) * cos(2 pi u2), one draw per pair of uniforms
// Seeding: std::mt19937_64(seed), i.e. the generator's standard single-integer seeding.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

namespace latte {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    /// Integer in [lo, hi].
    std::uint64_t between(std::uint64_t lo, std::uint64_t hi) { return lo + below(hi - lo + 1); }

    double normal() {
        const double u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Fisher-Yates from the back: for i = n-1 .. 1 swap(i, below(i + 1)).
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace latte
