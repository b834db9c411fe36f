#include "clickbait/init.hpp"

#include <cmath>
#include <random>

#include "clickbait/errors.hpp"

namespace clickbait {

double glorot_bound(std::size_t fanin, std::size_t fanout) {
  if (fanin == 0 || fanout == 0) throw InvalidArgument("glorot: fanin and fanout must be positive");
  return std::sqrt(6.0 / static_cast<double>(fanin + fanout));
}

std::vector<double> glorot_uniform(std::size_t fanin, std::size_t fanout, std::size_t count, std::uint64_t seed) {
  const double bound = glorot_bound(fanin, fanout);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> out(count);
  for (double& v : out) {
    // The distribution is half-open; reject the closed endpoint.
    do {
      v = dist(rng);
    } while (v <= -bound || v >= bound);
  }
  return out;
}

Tensor glorot_matrix(std::size_t fanin, std::size_t fanout, std::uint64_t seed) {
  return Tensor::from_data({fanout, fanin}, glorot_uniform(fanin, fanout, fanin * fanout, seed), true);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace clickbait
