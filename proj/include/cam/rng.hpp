#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace cam {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed for the substream addressed by `path` under `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {});

double standard_normal(Rng& rng);
double uniform01(Rng& rng);

/// Draws k distinct indices from [0, n) by a partial Fisher-Yates pass over
/// `perm`, which must hold a permutation of [0, n). The result is sorted.
void draw_subset(Rng& rng, std::vector<std::size_t>& perm, std::size_t k,
                 std::vector<std::size_t>& out);

/// C(n, k) saturated at `cap` (returns cap + 1 when the true value exceeds cap).
std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) noexcept;

/// Advances `idx` (strictly increasing, values in [0, n)) to the next
/// combination in lexicographic order. Returns false after the last one.
bool next_combination(std::vector<std::size_t>& idx, std::size_t n) noexcept;

}  // namespace cam
