// SPDX-License-Identifier: Apache-2.0
//
// massim - link-gain and SINR simulation for distributed massive MIMO downlink precoding
// Copyright (C) 2026 massim contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef massim_rng_H
#define massim_rng_H

#include <armadillo>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>

namespace massim
{

// SplitMix64 step (Vigna's seed expander); advances *state* and returns the next word.
inline std::uint64_t splitmix64_next(std::uint64_t &state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Derives an independent, reproducible engine for one unit of work (drop, realization,
// Monte Carlo run) from a master seed and the work index. Workers processing disjoint
// indices may run in parallel and still produce results identical to a serial run.
inline std::mt19937_64 make_substream(std::uint64_t seed, std::uint64_t stream_index)
{
    std::uint64_t state = seed ^ (0xD2B74407B1CE6E93ULL * (stream_index + 1));
    std::array<std::uint32_t, 16> words{};
    for (std::size_t i = 0; i < words.size(); i += 2)
    {
        std::uint64_t w = splitmix64_next(state);
        words[i] = static_cast<std::uint32_t>(w);
        words[i + 1] = static_cast<std::uint32_t>(w >> 32);
    }
    std::seed_seq seq(words.begin(), words.end());
    return std::mt19937_64(seq);
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64 &eng)
{
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// One standard normal deviate via the Box-Muller transform (the cosine branch only,
// so the function is stateless and substream splits stay reproducible).
inline double draw_normal(std::mt19937_64 &eng)
{
    double u1 = uniform01(eng);
    double u2 = uniform01(eng);
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * arma::datum::pi * u2);
}

// Fills *out* with i.i.d. standard complex Gaussian entries, CN(0,1): real and
// imaginary parts each N(0, 1/2). One Box-Muller pair feeds one complex entry.
inline void fill_cn01(std::mt19937_64 &eng, arma::cx_mat &out)
{
    const double scale = std::sqrt(0.5);
    std::complex<double> *ptr = out.memptr();
    const arma::uword n = out.n_elem;
    for (arma::uword i = 0; i < n; i++)
    {
        double u1 = uniform01(eng);
        double u2 = uniform01(eng);
        double r = scale * std::sqrt(-2.0 * std::log1p(-u1));
        double phi = 2.0 * arma::datum::pi * u2;
        ptr[i] = std::complex<double>(r * std::cos(phi), r * std::sin(phi));
    }
}

// Complex Gaussian vector with independent CN(0, variance) entries.
inline arma::cx_vec draw_cn_vec(std::mt19937_64 &eng, arma::uword n, double variance)
{
    arma::cx_mat tmp(n, 1);
    fill_cn01(eng, tmp);
    return std::sqrt(variance) * tmp.col(0);
}

} // namespace massim

#endif
