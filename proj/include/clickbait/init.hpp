#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "clickbait/tensor.hpp"

namespace clickbait {

/// Half-width of the Glorot/Xavier uniform range, sqrt(6 / (fanin + fanout)).
double glorot_bound(std::size_t fanin, std::size_t fanout);

/// `count` i.i.d. draws from the open interval (-bound, bound), deterministic
/// per seed.
std::vector<double> glorot_uniform(std::size_t fanin, std::size_t fanout, std::size_t count, std::uint64_t seed);

/// A [fanout x fanin] weight matrix with requires_grad set.
Tensor glorot_matrix(std::size_t fanin, std::size_t fanout, std::uint64_t seed);

/// Mixes a base seed with a stream index (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace clickbait
