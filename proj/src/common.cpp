#include "rfsep/common.hpp"

#include <cmath>

namespace rfsep {

double power(std::span<const cdouble> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& v : x) acc += std::norm(v);
  return acc / static_cast<double>(x.size());
}

ComplexSignal complex_gaussian(std::size_t count, double variance, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  ComplexSignal out(count);
  for (auto& v : out) {
    const double re = normal(rng);
    const double im = normal(rng);
    v = {re, im};
  }
  return out;
}

ComplexSignal circular_shift(std::span<const cdouble> x, std::size_t shift) {
  ComplexSignal out(x.size());
  if (x.empty()) return out;
  shift %= x.size();
  for (std::size_t n = 0; n < x.size(); ++n) out[n] = x[(n + shift) % x.size()];
  return out;
}

double db_to_linear_power(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace rfsep
