#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "thermoflock/matrix.hpp"
#include "thermoflock/state.hpp"

namespace thermoflock {

/// Ranges for randomly drawn initial data.
struct RandomStateOptions {
  double position_scale = 1.0;
  double velocity_scale = 1.0;
  double temperature_min = 0.5;
  double temperature_max = 3.0;
};

/// Admissible state in the rest frame: centroid and momentum are zero and
/// every temperature is positive. Same seed, same state.
inline MixtureState random_admissible_state(std::size_t n, std::size_t d, std::uint64_t seed,
                                            const RandomStateOptions& opt = {}) {
  if (n < 2 || d < 1) throw InputError("random state needs n >= 2 and d >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> temp(opt.temperature_min, opt.temperature_max);
  MixtureState s(n, d);
  for (auto& v : s.x) v = opt.position_scale * unit(rng);
  for (auto& v : s.u) v = opt.velocity_scale * unit(rng);
  for (auto& v : s.T) v = temp(rng);
  s = normalize_frame(std::move(s));
  require_admissible(s);
  return s;
}

/// Symmetric matrix with off-diagonal entries uniform in [lo, hi] and a zero diagonal.
inline Matrix random_symmetric_matrix(std::size_t n, double lo, double hi, std::uint64_t seed) {
  if (!(lo <= hi)) throw InputError("random matrix range is empty");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = dist(rng);
  return a;
}

}  // namespace thermoflock
