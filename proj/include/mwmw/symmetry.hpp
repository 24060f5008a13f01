#pragma once
// Multipole generators sum_x w(x) x^a n_x, the truncated unitaries
// U_m^(a)(s), the symmetry action on local observables, k-symmetry
// verification of interactions, stabilization and dynamics-commutation
// checks.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mwmw/algebra.hpp"
#include "mwmw/cutoff.hpp"
#include "mwmw/model.hpp"

namespace mwmw {

// Q_m = union of supp(n_x) over x in L cap [-2m, 2m]^d
inline std::vector<int> qm_sites(const ChargeFamily& cf, const Lattice& lat, int m) {
  const auto box = box_sites(lat, 2.0 * m, 0.0);
  return cf.support_union(box);
}

// Generator restricted to a region. truncate = true sums chi_m(x) x^a n_x
// over the whole lattice (the cutoff kills everything outside [-2m,2m]^d)
// and requires the region to contain Q_m; truncate = false uses plain x^a
// weights over {x : supp(n_x) cap region != empty}, matching the index set
// of the symmetry action on observables supported in the region.
inline LocalOperator build_generator(const ChargeFamily& cf, const Lattice& lat,
                                     const CutoffProfile* profile, const MultiIndex& a,
                                     int m, const std::vector<int>& region,
                                     bool truncate) {
  std::vector<int> gen_sites;
  std::vector<double> weights;
  if (truncate) {
    if (profile == nullptr)
      throw std::invalid_argument("build_generator: truncated mode needs a profile");
    for (const auto& [x, nx] : cf.charges) {
      const double w = cutoff_weight(*profile, m, lat.point(x)) *
                       mi_power(lat.point(x), a);
      if (w == 0.0) continue;
      gen_sites.push_back(x);
      weights.push_back(w);
    }
  } else {
    for (int x : cf.collar_of(lat, region)) {
      const double w = mi_power(lat.point(x), a);
      if (w == 0.0) continue;
      gen_sites.push_back(x);
      weights.push_back(w);
    }
  }
  std::vector<int> supp = cf.support_union(gen_sites);
  if (supp.empty()) {
    const int site = region.empty() ? 0 : region.front();
    return LocalOperator::make({site}, {cf.local_dim},
                               Matrix::Zero(cf.local_dim, cf.local_dim));
  }
  if (truncate) {
    for (int s : supp) {
      bool found = false;
      for (int r : region)
        if (r == s) found = true;
      if (!found)
        throw std::invalid_argument("build_generator: volume too small for Q_m");
    }
  }
  const Volume Vu = Volume::over(lat, supp, cf.local_dim);
  Matrix acc = Matrix::Zero(Vu.total_dim, Vu.total_dim);
  for (std::size_t i = 0; i < gen_sites.size(); ++i)
    acc += weights[i] * embed(cf.at(gen_sites[i]), Vu);
  return LocalOperator::make(supp, std::vector<int>(supp.size(), cf.local_dim),
                             std::move(acc));
}

struct TruncatedUnitary {
  MultiIndex a;
  double s = 0.0;
  int m = 1;
  std::vector<int> Qm;
  LocalOperator generator;
  LocalOperator unitary;  // exp(i s G) on the generator support
};

inline TruncatedUnitary build_truncated_unitary(const ChargeFamily& cf,
                                                const Lattice& lat,
                                                const CutoffProfile& profile,
                                                const MultiIndex& a, double s, int m,
                                                const Volume& V) {
  TruncatedUnitary tu;
  tu.a = a;
  tu.s = s;
  tu.m = m;
  tu.Qm = qm_sites(cf, lat, m);
  tu.generator = build_generator(cf, lat, &profile, a, m, V.sites, true);
  Matrix U = hermitian_exp(tu.generator.mat, Complex(0.0, s));
  tu.unitary = LocalOperator::make(tu.generator.support, tu.generator.dims, std::move(U));
  return tu;
}

// tau_s^(a)(A) = exp(-isG) A exp(isG) with G the plain-weight generator over
// the collar of supp(A). Result lives on supp(A) union that collar.
inline LocalOperator apply_tau(const LocalOperator& A, const ChargeFamily& cf,
                               const Lattice& lat, const MultiIndex& a, double s) {
  const LocalOperator G = build_generator(cf, lat, nullptr, a, 1, A.support, false);
  std::vector<int> supp = A.support;
  supp.insert(supp.end(), G.support.begin(), G.support.end());
  std::sort(supp.begin(), supp.end());
  supp.erase(std::unique(supp.begin(), supp.end()), supp.end());
  const Volume Vu = Volume::over(lat, supp, cf.local_dim);
  const Matrix U = hermitian_exp(embed(G, Vu), Complex(0.0, s));
  Matrix out = U.adjoint() * embed(A, Vu) * U;
  return LocalOperator::make(supp, std::vector<int>(supp.size(), cf.local_dim),
                             std::move(out));
}

struct KSymRecord {
  MultiIndex a;
  int term_id = -1;
  double defect = 0.0;
};

struct KSymReport {
  bool pass = true;
  double tol = 1e-12;
  std::vector<KSymRecord> records;
  std::optional<KSymRecord> worst;
  json to_json() const {
    json recs = json::array();
    for (const auto& r : records)
      recs.push_back(json{{"a", r.a}, {"term_id", r.term_id}, {"defect_norm", r.defect}});
    json j{{"pass", pass}, {"tol", tol}, {"records", recs}};
    if (worst)
      j["worst"] = json{{"a", worst->a}, {"term_id", worst->term_id},
                        {"defect_norm", worst->defect}};
    return j;
  }
};

// Invariance under tau_s^(a) for all s is equivalent, for commuting charges,
// to [G^(a)|collar, phi] = 0; that is what gets checked, per (a, term).
inline KSymReport check_k_symmetric(const Interaction& phi, const ChargeFamily& cf,
                                    const Lattice& lat, int k,
                                    const std::optional<std::vector<int>>& I = {}) {
  KSymReport rep;
  const auto as = multi_indices_up_to(lat.dim(), k, I ? *I : std::vector<int>{});
  for (const auto& a : as) {
    for (std::size_t t = 0; t < phi.terms.size(); ++t) {
      const LocalOperator G =
          build_generator(cf, lat, nullptr, a, 1, phi.terms[t].support, false);
      std::vector<int> supp = phi.terms[t].support;
      supp.insert(supp.end(), G.support.begin(), G.support.end());
      std::sort(supp.begin(), supp.end());
      supp.erase(std::unique(supp.begin(), supp.end()), supp.end());
      const Volume Vu = Volume::over(lat, supp, cf.local_dim);
      const double defect =
          op_norm(commutator(embed(G, Vu), embed(phi.term_op(static_cast<int>(t)), Vu)));
      KSymRecord rec{a, static_cast<int>(t), defect};
      rep.records.push_back(rec);
      if (!rep.worst || defect > rep.worst->defect) rep.worst = rec;
      if (defect > rep.tol) rep.pass = false;
    }
  }
  return rep;
}

struct StabilizationReport {
  double m0 = 0.0;
  double max_pairwise_defect = 0.0;
  double defect_vs_tau = 0.0;
  bool pass = false;
  json to_json() const {
    return json{{"m0", m0},
                {"max_pairwise_defect", max_pairwise_defect},
                {"defect_vs_tau", defect_vs_tau},
                {"pass", pass}};
  }
};

// The sequence U_m^* A U_m is constant once the cutoff plateau covers the
// collar of A; checks that, and that the stabilized value is the symmetry
// action itself.
inline StabilizationReport stabilization_check(const LocalOperator& A,
                                               const ChargeFamily& cf,
                                               const Lattice& lat,
                                               const CutoffProfile& profile,
                                               const MultiIndex& a, double s,
                                               const std::vector<int>& m_range) {
  StabilizationReport rep;
  double amax = 0.0;
  for (int site : A.support)
    amax = std::max(amax, lat.point(site).cwiseAbs().maxCoeff());
  rep.m0 = amax + cf.R0;
  int usable = 0;
  for (int m : m_range)
    if (m >= rep.m0) ++usable;
  if (usable < 1)
    throw std::invalid_argument("stabilization_check: m_range entirely below m0");

  auto conj_m = [&](int m) {
    const std::vector<int> collar = cf.collar_of(lat, A.support);
    std::vector<int> gen_sites;
    std::vector<double> weights;
    for (int z : collar) {
      const double w =
          cutoff_weight(profile, m, lat.point(z)) * mi_power(lat.point(z), a);
      gen_sites.push_back(z);
      weights.push_back(w);
    }
    std::vector<int> supp = cf.support_union(gen_sites);
    supp.insert(supp.end(), A.support.begin(), A.support.end());
    std::sort(supp.begin(), supp.end());
    supp.erase(std::unique(supp.begin(), supp.end()), supp.end());
    const Volume Vu = Volume::over(lat, supp, cf.local_dim);
    Matrix G = Matrix::Zero(Vu.total_dim, Vu.total_dim);
    for (std::size_t i = 0; i < gen_sites.size(); ++i)
      G += weights[i] * embed(cf.at(gen_sites[i]), Vu);
    const Matrix U = hermitian_exp(G, Complex(0.0, s));
    Matrix out = U.adjoint() * embed(A, Vu) * U;
    return LocalOperator::make(supp, std::vector<int>(supp.size(), cf.local_dim),
                               std::move(out));
  };

  std::vector<LocalOperator> vals;
  for (int m : m_range)
    if (m >= rep.m0) vals.push_back(conj_m(m));
  for (std::size_t i = 1; i < vals.size(); ++i)
    rep.max_pairwise_defect = std::max(
        rep.max_pairwise_defect, op_norm(Matrix(vals[i].mat - vals[0].mat)));
  const LocalOperator tau = apply_tau(A, cf, lat, a, s);
  // same support layout by construction for onsite charges; compare on union
  {
    std::vector<int> supp = vals[0].support;
    supp.insert(supp.end(), tau.support.begin(), tau.support.end());
    std::sort(supp.begin(), supp.end());
    supp.erase(std::unique(supp.begin(), supp.end()), supp.end());
    const Volume Vu = Volume::over(lat, supp, cf.local_dim);
    rep.defect_vs_tau = op_norm(Matrix(embed(vals[0], Vu) - embed(tau, Vu)));
  }
  rep.pass = rep.max_pairwise_defect <= 1e-10 && rep.defect_vs_tau <= 1e-10;
  return rep;
}

// Heisenberg conjugation by exp(itH_V).
inline Matrix finite_dynamics(const Matrix& H_V, double t, const Matrix& A) {
  const Matrix U = hermitian_exp(H_V, Complex(0.0, t));
  return U * A * U.adjoint();
}

// || alpha_t(tau_s(A)) - tau_s(alpha_t(A)) || at finite volume, with the
// truncated unitary playing tau via its stabilized plateau over V. Every
// site within the interaction range of supp(A) must lie in V.
inline double check_symmetry_commutes(const Interaction& phi, const ChargeFamily& cf,
                                      const Lattice& lat, const CutoffProfile& profile,
                                      const MultiIndex& a, double s, double t,
                                      const LocalOperator& A, const Volume& V) {
  const double range = phi.range_inf(lat);
  for (int x = 0; x < lat.size(); ++x) {
    double dmin = 1e300;
    for (int u : A.support)
      dmin = std::min(dmin, (lat.point(x) - lat.point(u)).cwiseAbs().maxCoeff());
    if (dmin <= range && V.position_of(x) < 0)
      throw std::invalid_argument(
          "check_symmetry_commutes: interaction collar of A exceeds the volume");
  }
  double vmax = 0.0;
  for (int site : V.sites)
    vmax = std::max(vmax, lat.point(site).cwiseAbs().maxCoeff());
  const int m = static_cast<int>(std::ceil(vmax + cf.R0)) + 1;  // plateau covers V
  const TruncatedUnitary tu = build_truncated_unitary(cf, lat, profile, a, s, m, V);
  const Matrix U = embed(tu.unitary, V);
  Matrix H = Matrix::Zero(V.total_dim, V.total_dim);
  for (std::size_t tt = 0; tt < phi.terms.size(); ++tt)
    if (V.contains(phi.terms[tt].support))
      H += embed(phi.term_op(static_cast<int>(tt)), V);
  const Matrix Af = embed(A, V);
  const Matrix tau_A = U.adjoint() * Af * U;
  const Matrix lhs = finite_dynamics(H, t, tau_A);
  const Matrix rhs = U.adjoint() * finite_dynamics(H, t, Af) * U;
  return op_norm(Matrix(lhs - rhs));
}

}  // namespace mwmw
