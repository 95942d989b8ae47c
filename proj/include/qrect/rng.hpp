#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace qrect {

using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Per-object stream seed: hash of (master seed, object key parts). Parallel and
/// serial sweeps that derive their streams this way see identical draws.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, const std::vector<std::int64_t>& parts,
                                 std::uint64_t tag) {
  std::uint64_t h = splitmix64(master ^ splitmix64(tag));
  for (std::int64_t p : parts) h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(p)));
  return h;
}

/// Stable operation tags for derive_seed.
enum class StreamTag : std::uint64_t {
  HyperplaneSampler = 0x11,
  LineSampler = 0x12,
  IgBetaLines = 0x21,
  IgBetaPlanes = 0x22,
  Lipschitz = 0x31,
  PlaneSearch = 0x41,
  LineDirection = 0x42,
  PlanarLines = 0x43,
  Probe = 0x51,
};

constexpr std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

/// Uniform direction on S^{n-1} from a normalized Gaussian vector.
inline std::vector<double> uniform_sphere(Rng& rng, std::size_t n) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(n);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& x : v) {
      x = gauss(rng);
      norm2 += x * x;
    }
  } while (norm2 < 1e-300);
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

}  // namespace qrect
