#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rfsep {

using cdouble = std::complex<double>;

/// Complex baseband samples. SOIs and ingested interference follow a unit-power convention.
using ComplexSignal = std::vector<cdouble>;

/// Ordered bits, each 0 or 1.
using BitStream = std::vector<std::uint8_t>;

/// Thrown when a caller-supplied parameter violates an operation's precondition.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown for numerical failures (singular systems, divergence, NaN).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent sub-seeds from a parent seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(seed ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

template <class... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, Rest... rest) {
  return derive_seed(derive_seed(seed, stream), static_cast<std::uint64_t>(rest)...);
}

/// Mean of |x[n]|^2; zero for an empty signal.
double power(std::span<const cdouble> x);

/// Circularly-symmetric complex Gaussian samples with E|x|^2 = variance.
ComplexSignal complex_gaussian(std::size_t count, double variance, std::uint64_t seed);

/// out[n] = x[(n + shift) mod N], i.e. rotates left by `shift`.
ComplexSignal circular_shift(std::span<const cdouble> x, std::size_t shift);

double db_to_linear_power(double db);

}  // namespace rfsep
