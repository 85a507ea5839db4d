#pragma once

// Counter-seeded random streams. Every stream is identified by a tuple of
// 64-bit keys, so row-parallel sampling can hand each row its own stream and
// produce the same draws no matter how rows are partitioned across workers.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace crmslice {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (int i = 0; i < 4; ++i) st_[i] = detail::splitmix64(s);
  }

  // Derived stream for (seed, a, b): used as stream(seed, iteration, row).
  static Rng stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = detail::splitmix64(s);
    s = h ^ (a + 0x632be59bd9b4e019ULL);
    h = detail::splitmix64(s);
    s = h ^ (b + 0x9e3779b97f4a7c15ULL);
    return Rng(detail::splitmix64(s));
  }

  // xoshiro256** core.
  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(st_[1] * 5, 7) * 9;
    const std::uint64_t t = st_[1] << 17;
    st_[2] ^= st_[0];
    st_[3] ^= st_[1];
    st_[1] ^= st_[2];
    st_[0] ^= st_[3];
    st_[2] ^= t;
    st_[3] = rotl(st_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double exponential(double rate = 1.0) { return -std::log(uniform_pos()) / rate; }

  double normal() {
    // Marsaglia polar method; second deviate intentionally discarded to keep
    // the draw count per call fixed at "until accept".
    while (true) {
      double u = 2.0 * uniform() - 1.0;
      double v = 2.0 * uniform() - 1.0;
      double s = u * u + v * v;
      if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Marsaglia-Tsang; shape/rate parameterization.
  double gamma(double shape, double rate = 1.0) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("gamma: bad parameters");
    if (shape < 1.0) {
      double u = uniform_pos();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = uniform_pos();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v / rate;
    }
  }

  double beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
  }

  // Exact for any mean: additive split keeps the count-by-count simulation
  // bounded per chunk.
  long poisson(double mean) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson: bad mean");
    long total = 0;
    while (mean > 30.0) {
      total += poisson_small(30.0);
      mean -= 30.0;
    }
    return total + poisson_small(mean);
  }

  // Index in [0, w.size()) with probability proportional to w[i].
  std::size_t categorical(const std::vector<double>& w) {
    double tot = 0.0;
    for (double x : w) tot += x;
    if (!(tot > 0.0)) throw std::runtime_error("categorical: no positive weight");
    double u = uniform() * tot;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return i;
    }
    return w.size() - 1;
  }

  void dirichlet(const std::vector<double>& alpha, std::vector<double>& out) {
    out.resize(alpha.size());
    double tot = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) tot += (out[i] = gamma(alpha[i]));
    for (double& x : out) x /= tot;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  long poisson_small(double mean) {
    double limit = std::exp(-mean);
    double prod = uniform();
    long n = 0;
    while (prod > limit) {
      prod *= uniform();
      ++n;
    }
    return n;
  }

  std::uint64_t st_[4];
};

}  // namespace crmslice
