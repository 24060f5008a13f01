#pragma once
// Shared basics: scalar aliases, deterministic RNG, compensated sums,
// multi-index helpers, fixed-format float printing.

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace mwmw {

using Complex = std::complex<double>;
using Matrix  = Eigen::MatrixXcd;
using Vector  = Eigen::VectorXcd;
using Point   = Eigen::VectorXd;

// All floating-point text output goes through this so reruns are
// byte-identical (17 significant digits round-trips a double).
inline std::string fmt_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf);
}

// Neumaier compensated summation; deterministic for a fixed input order.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  double value() const { return sum + comp; }
};

// Standard normals via Box-Muller over mt19937_64. Hand-rolled so the
// sequence does not depend on the standard library's distribution
// implementation; seeds in configs stay reproducible.
class NormalSampler {
 public:
  explicit NormalSampler(std::uint64_t seed) : gen_(seed) {}
  double operator()() {
    if (have_) {
      have_ = false;
      return cached_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * M_PI * u2;
    cached_ = r * std::sin(t);
    have_ = true;
    return r * std::cos(t);
  }

 private:
  double uniform01() {
    // in (0,1]; never 0, so log() is safe
    return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1p-53;
  }
  std::mt19937_64 gen_;
  bool have_ = false;
  double cached_ = 0.0;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

inline Matrix random_matrix(Eigen::Index n, std::uint64_t seed) {
  NormalSampler ns(seed);
  Matrix M(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double re = ns();
      const double im = ns();
      M(i, j) = Complex(re, im);
    }
  return M;
}

inline Matrix random_hermitian(Eigen::Index n, std::uint64_t seed) {
  const Matrix M = random_matrix(n, seed);
  return 0.5 * (M + M.adjoint());
}

inline Matrix random_density_matrix(Eigen::Index n, std::uint64_t seed) {
  const Matrix G = random_matrix(n, seed);
  Matrix rho = G * G.adjoint();
  rho /= rho.trace().real();
  return rho;
}

inline Matrix random_unitary(Eigen::Index n, std::uint64_t seed) {
  const Matrix G = random_matrix(n, seed);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ();
  return Q;
}

// ---------------------------------------------------------------------------
// Multi-indices a in N_0^d; x^a = prod_j x_j^{a_j}.

using MultiIndex = std::vector<int>;

inline int mi_order(const MultiIndex& a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

inline double pow_int(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

inline double mi_power(const Point& x, const MultiIndex& a) {
  if (static_cast<int>(a.size()) != x.size())
    throw std::invalid_argument("multi-index length does not match dimension");
  double r = 1.0;
  for (int j = 0; j < x.size(); ++j) r *= pow_int(x[j], a[j]);
  return r;
}

inline std::string mi_to_string(const MultiIndex& a) {
  std::string s;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (j) s += ';';
    s += std::to_string(a[j]);
  }
  return s;
}

// All a with |a| <= k; axes listed in zero_axes (1-based) forced to 0.
// Deterministic lexicographic order.
inline std::vector<MultiIndex> multi_indices_up_to(
    int d, int k, const std::vector<int>& zero_axes_1based = {}) {
  std::vector<MultiIndex> out;
  MultiIndex cur(d, 0);
  std::function<void(int, int)> rec = [&](int axis, int remaining) {
    if (axis == d) {
      out.push_back(cur);
      return;
    }
    bool frozen = false;
    for (int j : zero_axes_1based)
      if (j == axis + 1) frozen = true;
    const int hi = frozen ? 0 : remaining;
    for (int v = 0; v <= hi; ++v) {
      cur[axis] = v;
      rec(axis + 1, remaining - v);
    }
    cur[axis] = 0;
  };
  rec(0, k);
  return out;
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

// Index-addressed parallel map; results land in caller-owned slots so the
// outcome does not depend on scheduling.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  const int workers = std::min(threads, n);
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) break;
        fn(i);
      }
    });
  for (auto& t : pool) t.join();
}

}  // namespace mwmw
