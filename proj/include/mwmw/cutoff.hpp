#pragma once
// Smooth truncation machinery: the compactly supported bridge chi~, the
// product cutoff chi, its rescalings chi_m, weighted versions
// chi_m^(a)(z) = z^a chi_m(z), certified derivative constants C_a, and
// Taylor remainders with their closed-form bounds.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "mwmw/geometry.hpp"
#include "mwmw/util.hpp"

namespace mwmw {

namespace detail {

// f(t) = exp(-1/t) for t > 0, else 0. Derivatives are f(t) * q_n(1/t) with
// q_0 = 1, q_{n+1}(s) = s^2 (q_n(s) - q_n'(s)). Coefficient vectors of q_n
// are built on demand (orders stay small).
inline std::vector<std::vector<double>> mollifier_polys(int max_order) {
  std::vector<std::vector<double>> q(max_order + 1);
  q[0] = {1.0};
  for (int n = 0; n < max_order; ++n) {
    const auto& cur = q[n];
    std::vector<double> diff(cur.size(), 0.0);  // q_n'
    for (std::size_t i = 1; i < cur.size(); ++i) diff[i - 1] = cur[i] * i;
    std::vector<double> next(cur.size() + 2, 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) next[i + 2] += cur[i];
    for (std::size_t i = 0; i < diff.size(); ++i) next[i + 2] -= diff[i];
    q[n + 1] = std::move(next);
  }
  return q;
}

inline double poly_eval(const std::vector<double>& c, double s) {
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) r = r * s + c[i];
  return r;
}

inline double mollifier_derivative(double t, int order) {
  if (t <= 0.0) return 0.0;
  const double inv = 1.0 / t;
  if (inv >= 650.0) return 0.0;  // exp(-1/t) underflows past any polynomial factor
  static thread_local std::vector<std::vector<double>> cache = mollifier_polys(8);
  if (order >= static_cast<int>(cache.size()))
    cache = mollifier_polys(order + 4);
  return std::exp(-inv) * poly_eval(cache[order], inv);
}

}  // namespace detail

// One-dimensional bridge: 1 on [-1,1], 0 outside (-2,2), C^infinity.
// chi~(x) = f(2-|x|) / (f(2-|x|) + f(|x|-1)) on the transition.
class BridgeFunction {
 public:
  double value(double x) const { return derivative(x, 0); }

  double derivative(double x, int order) const {
    const double ax = std::abs(x);
    if (ax <= 1.0) return order == 0 ? 1.0 : 0.0;
    if (ax >= 2.0) return 0.0;
    const double sign = (x < 0.0 && order % 2 == 1) ? -1.0 : 1.0;
    return sign * transition_derivative(ax, order);
  }

 private:
  // x in (1,2): u = f(2-x), v = f(x-1), chi~ = u / (u+v); derivatives via
  // the recursion (chi~ w)^(n) = u^(n).
  static double transition_derivative(double x, int order) {
    std::vector<double> u(order + 1), w(order + 1);
    for (int n = 0; n <= order; ++n) {
      const double un = (n % 2 == 0 ? 1.0 : -1.0) * detail::mollifier_derivative(2.0 - x, n);
      const double vn = detail::mollifier_derivative(x - 1.0, n);
      u[n] = un;
      w[n] = un + vn;
    }
    std::vector<double> chi(order + 1);
    for (int n = 0; n <= order; ++n) {
      double acc = u[n];
      for (int i = 0; i < n; ++i) acc -= binomial(n, i) * chi[i] * w[n - i];
      chi[n] = acc / w[0];
    }
    return chi[order];
  }
};

struct CutoffProfile {
  BridgeFunction bridge;
  int dim = 1;
  int derivative_order_max = 4;
  int grid_resolution = 0;  // points per unit; 0 = default by dimension
  double safety = 1.05;

  int resolution() const {
    if (grid_resolution > 0) return grid_resolution;
    if (dim == 1) return 2000;
    if (dim == 2) return 200;
    return 50;
  }

  static CutoffProfile from_json(const json& j, int d) {
    CutoffProfile p;
    p.dim = d;
    if (j.contains("bridge") && j["bridge"].get<std::string>() != "exp_partition")
      throw std::invalid_argument("unknown cutoff bridge: " + j["bridge"].get<std::string>());
    if (j.contains("grid_resolution")) p.grid_resolution = j["grid_resolution"].get<int>();
    if (j.contains("safety")) p.safety = j["safety"].get<double>();
    return p;
  }
};

// d^n/dt^n [ t^p * chi~(t/m) ] by the Leibniz rule.
inline double scaled_monomial_bridge_derivative(const BridgeFunction& b, int p,
                                                int m, double t, int order) {
  double acc = 0.0;
  const double inv_m = 1.0 / m;
  for (int i = 0; i <= order && i <= p; ++i) {
    double mono = 1.0;  // p!/(p-i)! * t^{p-i}
    for (int q = 0; q < i; ++q) mono *= (p - q);
    mono *= pow_int(t, p - i);
    acc += binomial(order, i) * mono * b.derivative(t * inv_m, order - i) *
           pow_int(inv_m, order - i);
  }
  return acc;
}

// chi_m(z) = prod_j chi~(z_j / m)
inline double cutoff_weight(const CutoffProfile& prof, int m, const Point& z) {
  double r = 1.0;
  for (int j = 0; j < z.size(); ++j) r *= prof.bridge.value(z[j] / m);
  return r;
}

// chi_m^(a)(z) = z^a chi_m(z)
inline double evaluate_cutoff(const CutoffProfile& prof, int m, const MultiIndex& a,
                              const Point& z) {
  if (m < 1) throw std::invalid_argument("evaluate_cutoff: m must be >= 1");
  return mi_power(z, a) * cutoff_weight(prof, m, z);
}

// Mixed partial of chi_m^(a) with per-axis derivative multiplicities c.
inline double cutoff_partial(const CutoffProfile& prof, int m, const MultiIndex& a,
                             const MultiIndex& c, const Point& x) {
  double r = 1.0;
  for (int j = 0; j < x.size(); ++j)
    r *= scaled_monomial_bridge_derivative(prof.bridge, a[j], m, x[j], c[j]);
  return r;
}

// C_a from the (k+1)-st derivatives of chi^(a) (the m = 1 profile):
// (1/(k+1)!) sup_xi sum over ordered derivative tuples of |partial^{k+1}
// chi^(a)(xi)|, evaluated on a grid over [-2,2]^d and multiplied by the
// safety factor. The grid sup certifies only the tested family; the safety
// factor absorbs discretization and is flagged in reports.
inline double compute_Ca(const CutoffProfile& prof, const MultiIndex& a, int k) {
  const int d = prof.dim;
  if (static_cast<int>(a.size()) != d)
    throw std::invalid_argument("compute_Ca: multi-index length mismatch");
  if (mi_order(a) > k) throw std::invalid_argument("compute_Ca: requires |a| <= k");
  const int order = k + 1;
  const int res = prof.resolution();
  const int steps = 4 * res;  // grid over [-2, 2]
  // multiplicity vectors c with |c| = k+1, with multinomial weights
  std::vector<MultiIndex> cs;
  for (const auto& c : multi_indices_up_to(d, order))
    if (mi_order(c) == order) cs.push_back(c);
  std::vector<double> multinom(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    double w = factorial(order);
    for (int j = 0; j < d; ++j) w /= factorial(cs[i][j]);
    multinom[i] = w;
  }
  // per-axis tables: |d^n/dt^n [t^{a_j} chi~(t)]| on the grid
  std::vector<std::vector<std::vector<double>>> table(
      d, std::vector<std::vector<double>>(order + 1, std::vector<double>(steps + 1)));
  for (int j = 0; j < d; ++j)
    for (int n = 0; n <= order; ++n)
      for (int g = 0; g <= steps; ++g) {
        const double t = -2.0 + 4.0 * g / steps;
        table[j][n][g] =
            std::abs(scaled_monomial_bridge_derivative(prof.bridge, a[j], 1, t, n));
      }
  double sup = 0.0;
  std::vector<int> idx(d, 0);
  for (;;) {
    double total = 0.0;
    for (std::size_t i = 0; i < cs.size(); ++i) {
      double prod = multinom[i];
      for (int j = 0; j < d; ++j) prod *= table[j][cs[i][j]][idx[j]];
      total += prod;
    }
    sup = std::max(sup, total);
    int axis = d - 1;
    while (axis >= 0) {
      if (++idx[axis] <= steps) break;
      idx[axis] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
  return prof.safety * sup / factorial(order);
}

// R_{k+1}(x,z) = chi_m^(a)(z) - [Taylor polynomial of chi_m^(a) around x,
// total order <= k], derivatives taken analytically.
inline double taylor_remainder_exact(const CutoffProfile& prof, int m,
                                     const MultiIndex& a, int k, const Point& x,
                                     const Point& z) {
  if (mi_order(a) > k)
    throw std::invalid_argument("taylor_remainder_exact: requires |a| <= k");
  const int d = prof.dim;
  double taylor = 0.0;
  for (const auto& c : multi_indices_up_to(d, k)) {
    double coeff = cutoff_partial(prof, m, a, c, x);
    if (coeff == 0.0) continue;
    double w = 1.0;
    for (int j = 0; j < d; ++j) {
      w *= pow_int(z[j] - x[j], c[j]);
      w /= factorial(c[j]);
    }
    taylor += coeff * w;
  }
  return evaluate_cutoff(prof, m, a, z) - taylor;
}

// |R_{k+1}(x,z)| <= C_a / m^{k-|a|+1} * |x-z|^{k+1}
inline double taylor_remainder_bound(double Ca, int m, const MultiIndex& a, int k,
                                     const Point& x, const Point& z) {
  const double dist = (x - z).norm();
  return Ca / pow_int(static_cast<double>(m), k - mi_order(a) + 1) *
         std::pow(dist, k + 1);
}

struct SlabDerivReport {
  bool certified = false;
  double max_abs = 0.0;
  std::string note;
  json to_json() const {
    return json{{"certified", certified}, {"max_abs", max_abs}, {"note", note}};
  }
};

// Verifies del_j chi_m^(a)(x) = 0 for all lattice x and j in I (1-based),
// required by the slab variant. Needs a_j = 0 on I and m strictly above
// every bound M_j.
inline SlabDerivReport check_slab_derivatives(const CutoffProfile& prof,
                                              const Lattice& lat, int m,
                                              const MultiIndex& a,
                                              const std::vector<int>& I) {
  for (int j : I) {
    if (j < 1 || j > lat.dim())
      throw std::invalid_argument("check_slab_derivatives: axis out of range");
    if (a[j - 1] != 0)
      throw std::invalid_argument("check_slab_derivatives: requires a_j = 0 for j in I");
  }
  SlabDerivReport rep;
  double max_bound = 0.0;
  for (int j : I) {
    auto it = lat.slab_bounds().find(j);
    double Mj = 0.0;
    if (it != lat.slab_bounds().end()) {
      Mj = it->second;
    } else {
      for (const auto& p : lat.points()) Mj = std::max(Mj, std::abs(p[j - 1]));
    }
    max_bound = std::max(max_bound, Mj);
  }
  if (!(m > max_bound)) {
    rep.certified = false;
    rep.note = "refused: requires m > max_j M_j (got m = " + std::to_string(m) +
               ", max bound = " + fmt_g17(max_bound) + ")";
    return rep;
  }
  for (const auto& p : lat.points())
    for (int j : I) {
      MultiIndex c(lat.dim(), 0);
      c[j - 1] = 1;
      rep.max_abs = std::max(rep.max_abs, std::abs(cutoff_partial(prof, m, a, c, p)));
    }
  rep.certified = rep.max_abs <= 1e-12;
  rep.note = "checked all lattice sites, axes in I";
  return rep;
}

}  // namespace mwmw
