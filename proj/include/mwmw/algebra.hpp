#pragma once
// Finite-volume operator algebra on tensor products of per-site Hilbert
// spaces. The canonical tensor-factor order is the lattice point order;
// every embedding goes through this module so bases never silently differ.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mwmw/geometry.hpp"
#include "mwmw/util.hpp"

namespace mwmw {

inline constexpr std::int64_t kDenseLimit = 4096;

struct Volume {
  const Lattice* lattice = nullptr;
  std::vector<int> sites;  // ascending lattice site indices
  std::vector<int> dims;   // per-site local dimensions, aligned with sites
  std::int64_t total_dim = 1;

  static Volume over(const Lattice& lat, std::vector<int> site_list, int local_dim) {
    Volume v;
    v.lattice = &lat;
    std::sort(site_list.begin(), site_list.end());
    v.sites = std::move(site_list);
    v.dims.assign(v.sites.size(), local_dim);
    v.total_dim = 1;
    for (int d : v.dims) {
      v.total_dim *= d;
      if (v.total_dim > (std::int64_t(1) << 40))
        throw std::overflow_error("volume dimension overflow");
    }
    return v;
  }

  int position_of(int site) const {
    auto it = std::lower_bound(sites.begin(), sites.end(), site);
    if (it == sites.end() || *it != site) return -1;
    return static_cast<int>(it - sites.begin());
  }
  bool contains(const std::vector<int>& subset) const {
    for (int s : subset)
      if (position_of(s) < 0) return false;
    return true;
  }
};

struct LocalOperator {
  std::vector<int> support;  // ascending lattice site indices
  std::vector<int> dims;     // aligned with support
  Matrix mat;                // dimension = prod(dims), canonical support order

  std::int64_t dim() const { return mat.rows(); }

  static LocalOperator make(std::vector<int> support, std::vector<int> dims, Matrix m) {
    LocalOperator op;
    std::int64_t d = 1;
    for (int x : dims) d *= x;
    if (m.rows() != m.cols() || m.rows() != d)
      throw std::invalid_argument("LocalOperator: matrix dimension does not match support dims");
    for (std::size_t i = 1; i < support.size(); ++i)
      if (support[i] <= support[i - 1])
        throw std::invalid_argument("LocalOperator: support must be strictly ascending");
    op.support = std::move(support);
    op.dims = std::move(dims);
    op.mat = std::move(m);
    return op;
  }

  static LocalOperator self_adjoint(std::vector<int> support, std::vector<int> dims, Matrix m) {
    const double scale = m.cwiseAbs().maxCoeff();
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, scale))
      throw std::invalid_argument("LocalOperator: matrix is not self-adjoint");
    return make(std::move(support), std::move(dims), std::move(m));
  }
};

namespace detail {

// Row-major strides: first site is the most significant tensor factor.
inline std::vector<std::int64_t> strides(const std::vector<int>& dims) {
  std::vector<std::int64_t> s(dims.size());
  std::int64_t acc = 1;
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    s[i] = acc;
    acc *= dims[i];
  }
  return s;
}

// Base indices of every configuration of the listed positions.
inline std::vector<std::int64_t> config_bases(const std::vector<int>& positions,
                                              const std::vector<int>& dims,
                                              const std::vector<std::int64_t>& stride) {
  std::int64_t n = 1;
  for (int p : positions) n *= dims[p];
  std::vector<std::int64_t> base(n, 0);
  std::int64_t block = 1;
  for (int i = static_cast<int>(positions.size()) - 1; i >= 0; --i) {
    const int p = positions[i];
    const std::int64_t st = stride[p];
    const int dp = dims[p];
    for (std::int64_t idx = 0; idx < n; ++idx) {
      const std::int64_t digit = (idx / block) % dp;
      base[idx] += digit * st;
    }
    block *= dp;
  }
  return base;
}

struct EmbedPlan {
  std::vector<std::int64_t> supp_base;  // per operator row/col configuration
  std::vector<std::int64_t> comp_base;  // per complement configuration
};

inline EmbedPlan embed_plan(const LocalOperator& A, const Volume& V) {
  std::vector<int> supp_pos, comp_pos;
  supp_pos.reserve(A.support.size());
  for (std::size_t i = 0; i < A.support.size(); ++i) {
    const int p = V.position_of(A.support[i]);
    if (p < 0) throw std::invalid_argument("embed: support not contained in volume");
    if (V.dims[p] != A.dims[i])
      throw std::invalid_argument("embed: local dimension mismatch");
    supp_pos.push_back(p);
  }
  for (int p = 0; p < static_cast<int>(V.sites.size()); ++p)
    if (std::find(supp_pos.begin(), supp_pos.end(), p) == supp_pos.end())
      comp_pos.push_back(p);
  const auto st = strides(V.dims);
  EmbedPlan plan;
  plan.supp_base = config_bases(supp_pos, V.dims, st);
  plan.comp_base = config_bases(comp_pos, V.dims, st);
  return plan;
}

}  // namespace detail

// A (x) I on the complement, in the volume's canonical factor order.
inline Matrix embed(const LocalOperator& A, const Volume& V) {
  if (V.total_dim > kDenseLimit)
    throw std::invalid_argument("embed: volume exceeds dense limit");
  const auto plan = detail::embed_plan(A, V);
  Matrix R = Matrix::Zero(V.total_dim, V.total_dim);
  const std::int64_t da = A.dim();
  for (std::int64_t r = 0; r < da; ++r)
    for (std::int64_t c = 0; c < da; ++c) {
      const Complex v = A.mat(r, c);
      if (v == Complex(0, 0)) continue;
      for (std::int64_t off : plan.comp_base)
        R(plan.supp_base[r] + off, plan.supp_base[c] + off) += v;
    }
  return R;
}

// out += A * in, matrix-free; usable far beyond the dense limit.
inline void apply_local(const LocalOperator& A, const Volume& V,
                        const Vector& in, Vector& out) {
  const auto plan = detail::embed_plan(A, V);
  const std::int64_t da = A.dim();
  for (std::int64_t off : plan.comp_base) {
    for (std::int64_t r = 0; r < da; ++r) {
      Complex acc(0, 0);
      for (std::int64_t c = 0; c < da; ++c)
        acc += A.mat(r, c) * in[plan.supp_base[c] + off];
      out[plan.supp_base[r] + off] += acc;
    }
  }
}

inline double op_norm(const Matrix& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("op_norm: matrix not square");
  if (!M.allFinite()) throw std::invalid_argument("op_norm: non-finite entries");
  if (M.rows() == 0) return 0.0;
  const double scale = M.cwiseAbs().maxCoeff();
  if (scale == 0.0) return 0.0;
  if ((M - M.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * scale) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.adjoint()),
                                             Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::BDCSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

inline Matrix commutator(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols() || A.rows() != A.cols())
    throw std::invalid_argument("commutator: dimension mismatch");
  return A * B - B * A;
}

inline Matrix conjugate_unitary(const Matrix& U, const Matrix& A) {
  if (U.rows() != A.rows() || U.rows() != U.cols() || A.rows() != A.cols())
    throw std::invalid_argument("conjugate_unitary: dimension mismatch");
  const Matrix defect = U.adjoint() * U - Matrix::Identity(U.rows(), U.cols());
  if (defect.cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("conjugate_unitary: U fails unitarity tolerance");
  return U * A * U.adjoint();
}

inline Matrix hermitian_exp(const Matrix& H, Complex scale) {
  const double s = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * s)
    throw std::invalid_argument("hermitian_exp: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.adjoint()));
  const Eigen::VectorXd& lam = es.eigenvalues();
  Vector w(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) w[i] = std::exp(scale * lam[i]);
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

// log of a PSD matrix with eigenvalues clamped at `floor` before the log.
// Support violations are the caller's business (relative_entropy flags them).
inline Matrix matrix_log_psd(const Matrix& rho, double floor = 1e-300) {
  const double s = rho.cwiseAbs().maxCoeff();
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, s))
    throw std::invalid_argument("matrix_log_psd: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()));
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double norm = lam.cwiseAbs().maxCoeff();
  if (lam.minCoeff() < -1e-10 * std::max(1.0, norm))
    throw std::invalid_argument("matrix_log_psd: negative eigenvalue beyond tolerance");
  Vector w(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    w[i] = std::log(std::max(lam[i], floor));
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

inline Matrix partial_trace(const Matrix& rho, const Volume& V,
                            const std::vector<int>& keep_sites) {
  if (rho.rows() != V.total_dim || rho.cols() != V.total_dim)
    throw std::invalid_argument("partial_trace: state dimension mismatch");
  std::vector<int> keep_pos, traced_pos;
  std::vector<int> keep_sorted = keep_sites;
  std::sort(keep_sorted.begin(), keep_sorted.end());
  for (int s : keep_sorted) {
    const int p = V.position_of(s);
    if (p < 0) throw std::invalid_argument("partial_trace: keep is not a subvolume");
    keep_pos.push_back(p);
  }
  for (int p = 0; p < static_cast<int>(V.sites.size()); ++p)
    if (std::find(keep_pos.begin(), keep_pos.end(), p) == keep_pos.end())
      traced_pos.push_back(p);
  const auto st = detail::strides(V.dims);
  const auto kb = detail::config_bases(keep_pos, V.dims, st);
  const auto tb = detail::config_bases(traced_pos, V.dims, st);
  const std::int64_t dk = static_cast<std::int64_t>(kb.size());
  Matrix R = Matrix::Zero(dk, dk);
  for (std::int64_t r = 0; r < dk; ++r)
    for (std::int64_t c = 0; c < dk; ++c) {
      Complex acc(0, 0);
      for (std::int64_t off : tb) acc += rho(kb[r] + off, kb[c] + off);
      R(r, c) = acc;
    }
  return R;
}

// ---------------------------------------------------------------------------
// Matrix-free sums of local terms with an iterative extremal-eigenvalue
// estimate (Lanczos). Used for operator norms past the dense limit; the
// returned value is a Rayleigh-Ritz lower bound of the true norm.

struct LocalOpSum {
  const Volume* volume = nullptr;
  std::vector<LocalOperator> terms;
  std::vector<detail::EmbedPlan> plans;

  static LocalOpSum over(const Volume& V, std::vector<LocalOperator> ts) {
    LocalOpSum s;
    s.volume = &V;
    s.terms = std::move(ts);
    for (const auto& t : s.terms) s.plans.push_back(detail::embed_plan(t, V));
    return s;
  }

  Vector apply(const Vector& in) const {
    Vector out = Vector::Zero(in.size());
    for (std::size_t t = 0; t < terms.size(); ++t) {
      const auto& A = terms[t];
      const auto& plan = plans[t];
      const std::int64_t da = A.dim();
      for (std::int64_t off : plan.comp_base) {
        for (std::int64_t r = 0; r < da; ++r) {
          Complex acc(0, 0);
          for (std::int64_t c = 0; c < da; ++c)
            acc += A.mat(r, c) * in[plan.supp_base[c] + off];
          out[plan.supp_base[r] + off] += acc;
        }
      }
    }
    return out;
  }
};

struct IterNormResult {
  double estimate = 0.0;  // certified lower bound of the norm (Hermitian input)
  int iterations = 0;
  bool converged = false;
};

inline IterNormResult lanczos_extreme_abs(
    const std::function<Vector(const Vector&)>& apply, std::int64_t dim,
    double tol = 1e-8, int maxiter = 300, std::uint64_t seed = 7) {
  NormalSampler ns(seed);
  Vector v(dim);
  for (std::int64_t i = 0; i < dim; ++i) v[i] = Complex(ns(), ns());
  v /= v.norm();
  Vector v_prev = Vector::Zero(dim);
  std::vector<double> alpha, beta, history;
  IterNormResult res;
  const auto extreme = [&]() {
    const int n = static_cast<int>(alpha.size());
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) T(i, i) = alpha[i];
    for (int i = 0; i + 1 < n; ++i) T(i, i + 1) = T(i + 1, i) = beta[i];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  };
  for (int j = 0; j < maxiter; ++j) {
    Vector w = apply(v);
    const double a = (v.adjoint() * w)(0, 0).real();
    alpha.push_back(a);
    w -= a * v;
    if (!beta.empty()) w -= beta.back() * v_prev;
    const double b = w.norm();
    const int n = static_cast<int>(alpha.size());
    if (b < 1e-14) {  // invariant subspace reached
      res.estimate = extreme();
      res.iterations = n;
      res.converged = true;
      return res;
    }
    if (n % 5 == 0 || n == maxiter) {
      const double cur = extreme();
      res.estimate = cur;
      res.iterations = n;
      history.push_back(cur);
      if (history.size() >= 3) {
        const double old = history[history.size() - 3];
        if (std::abs(cur - old) <= tol * std::max(1.0, std::abs(cur))) {
          res.converged = true;
          return res;
        }
      }
    }
    beta.push_back(b);
    v_prev = v;
    v = w / b;
  }
  res.estimate = extreme();
  res.iterations = static_cast<int>(alpha.size());
  return res;
}

}  // namespace mwmw
