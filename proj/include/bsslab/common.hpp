#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace bsslab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

// Floor applied to model parameters and variances so multiplicative-update
// ratios never divide by zero.
inline constexpr double kEps = 1e-12;

// dB values are capped here so degenerate metrics stay reportable.
inline constexpr double kDbCap = 100.0;

struct InvalidInput : std::runtime_error {
  explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};
struct InvalidConfig : std::runtime_error {
  explicit InvalidConfig(const std::string& msg) : std::runtime_error(msg) {}
};
struct SingularUpdate : std::runtime_error {
  explicit SingularUpdate(const std::string& msg) : std::runtime_error(msg) {}
};
struct UnsupportedGeometry : std::runtime_error {
  explicit UnsupportedGeometry(const std::string& msg) : std::runtime_error(msg) {}
};
struct InvalidScenario : std::runtime_error {
  explicit InvalidScenario(const std::string& msg) : std::runtime_error(msg) {}
};
struct InvalidReference : std::runtime_error {
  explicit InvalidReference(const std::string& msg) : std::runtime_error(msg) {}
};

namespace rng {

// splitmix64, used to derive independent stream seeds from a user seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0xd1b54a32d192ed03ULL * (stream + 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

// xoshiro-free minimal generator: mt19937_64 with explicit mappings so the
// draw sequence does not depend on the standard library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform in [0, 1)
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // standard normal via Box-Muller (deterministic across platforms)
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  cplx normal_complex() {
    return cplx(normal() * M_SQRT1_2, normal() * M_SQRT1_2);
  }

  std::uint64_t next_u64() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rng

// Number of worker threads: BSS_LAB_THREADS caps hardware concurrency.
inline unsigned thread_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("BSS_LAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) hw = std::min(hw, static_cast<unsigned>(v));
  }
  return hw;
}

// Static-partition parallel loop. Each index is processed exactly once and
// writes must be disjoint across indices, which keeps results deterministic.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn) {
  const std::size_t n = end > begin ? end - begin : 0;
  if (n == 0) return;
  unsigned workers = thread_count();
  if (workers > n) workers = static_cast<unsigned>(n);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    const std::size_t hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline double cap_db(double v) {
  if (!std::isfinite(v)) return v > 0 ? kDbCap : -kDbCap;
  return std::min(kDbCap, std::max(-kDbCap, v));
}

}  // namespace bsslab
