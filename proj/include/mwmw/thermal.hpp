#pragma once
// Finite-volume Gibbs states and the exact entropy identities: KMS defect,
// quantum relative entropy with tagged support violations, perturbed
// functionals normalized by the unperturbed partition function, Uhlmann
// monotonicity, and the infinite-temperature tracial check.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mwmw/algebra.hpp"
#include "mwmw/model.hpp"
#include "mwmw/symmetry.hpp"

namespace mwmw {

inline Matrix hamiltonian(const Interaction& phi, const Volume& V) {
  Matrix H = Matrix::Zero(V.total_dim, V.total_dim);
  for (std::size_t t = 0; t < phi.terms.size(); ++t) {
    for (int s : phi.terms[t].support)
      if (s < 0 || s >= V.lattice->size())
        throw std::invalid_argument("hamiltonian: dangling term support");
    if (!V.contains(phi.terms[t].support)) continue;  // finite-volume restriction
    H += embed(phi.term_op(static_cast<int>(t)), V);
  }
  return H;
}

struct GibbsState {
  Matrix rho;
  double beta = 0.0;
  Matrix H;
  double logZ = 0.0;
};

// rho = exp(-beta H) / Tr exp(-beta H), computed with a spectral shift so
// any beta * ||H|| is representable.
inline GibbsState gibbs(const Matrix& H, double beta) {
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("gibbs: Hamiltonian is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.adjoint()));
  const Eigen::VectorXd& lam = es.eigenvalues();
  double shift = -beta * lam[0];
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    shift = std::max(shift, -beta * lam[i]);
  Eigen::VectorXd w(lam.size());
  CompensatedSum Z;
  for (Eigen::Index i = 0; i < lam.size(); ++i) {
    w[i] = std::exp(-beta * lam[i] - shift);
    Z.add(w[i]);
  }
  GibbsState g;
  g.beta = beta;
  g.H = H;
  g.logZ = std::log(Z.value()) + shift;
  g.rho = es.eigenvectors() * (w / Z.value()).asDiagonal().toDenseMatrix().cast<Complex>() *
          es.eigenvectors().adjoint();
  return g;
}

// | Tr(rho A e^{-bH} B e^{bH}) - Tr(rho B A) |. For the exact Gibbs state
// this is an identity by cyclicity. Past beta * spread = 100 the analytic
// continuation is evaluated in the eigenbasis with shifted weights.
inline double kms_defect(const Matrix& rho, const Matrix& H, double beta,
                         const Matrix& A, const Matrix& B) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.adjoint()));
  const Eigen::VectorXd& lam = es.eigenvalues();
  const double spread = lam.maxCoeff() - lam.minCoeff();
  const Complex rhs = (rho * B * A).trace();
  Complex lhs;
  if (std::abs(beta) * std::max(spread, lam.cwiseAbs().maxCoeff()) <= 100.0) {
    const Matrix em = hermitian_exp(H, Complex(-beta, 0.0));
    const Matrix ep = hermitian_exp(H, Complex(beta, 0.0));
    lhs = (rho * A * em * B * ep).trace();
  } else {
    const Matrix Q = es.eigenvectors();
    const Matrix At = Q.adjoint() * A * Q;
    const Matrix Bt = Q.adjoint() * B * Q;
    const Matrix Rt = Q.adjoint() * rho * Q;
    // Tr(rho A e^{-bH} B e^{bH}) = sum_{pij} R_pi A_ij B_jp e^{-b(l_j - l_p)}
    Complex acc(0, 0);
    for (Eigen::Index p = 0; p < lam.size(); ++p)
      for (Eigen::Index i = 0; i < lam.size(); ++i)
        for (Eigen::Index j = 0; j < lam.size(); ++j) {
          const double e = -beta * (lam[j] - lam[p]);
          if (e < -700.0) continue;
          acc += Rt(p, i) * At(i, j) * Bt(j, p) * std::exp(e);
        }
    lhs = acc;
  }
  return std::abs(lhs - rhs);
}

inline double kms_defect(const GibbsState& g, const Matrix& A, const Matrix& B) {
  return kms_defect(g.rho, g.H, g.beta, A, B);
}

struct RelEntropy {
  double value = 0.0;
  bool infinite = false;
};

// S(rho||sigma) = Tr rho (log rho - log sigma). A sigma eigendirection
// whose eigenvalue is <= 1e-200 * max counts as outside the support; if rho
// carries weight > 1e-12 there the result is the tagged "infinite", never a
// huge float. Nonnegative when Tr sigma = 1; may be negative when sigma is
// unnormalized (allowed only if the caller says so).
inline RelEntropy relative_entropy(const Matrix& rho, const Matrix& sigma,
                                   bool allow_unnormalized = false,
                                   double floor = 1e-300) {
  const double rscale = std::max(1.0, rho.cwiseAbs().maxCoeff());
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * rscale)
    throw std::invalid_argument("relative_entropy: rho not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> er(0.5 * (rho + rho.adjoint()));
  const Eigen::VectorXd& p = er.eigenvalues();
  if (p.minCoeff() < -1e-10 * std::max(1.0, p.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("relative_entropy: rho not positive semidefinite");
  if (std::abs(rho.trace().real() - 1.0) > 1e-8)
    throw std::invalid_argument("relative_entropy: rho is not a state");
  Eigen::SelfAdjointEigenSolver<Matrix> ss(0.5 * (sigma + sigma.adjoint()));
  const Eigen::VectorXd& q = ss.eigenvalues();
  const double qmax = q.cwiseAbs().maxCoeff();
  if (q.minCoeff() < -1e-10 * std::max(1.0, qmax))
    throw std::invalid_argument("relative_entropy: sigma not positive semidefinite");
  if (!allow_unnormalized && std::abs(sigma.trace().real() - 1.0) > 1e-8)
    throw std::invalid_argument("relative_entropy: sigma is not a state "
                                "(pass allow_unnormalized to accept)");
  RelEntropy out;
  // support check
  const double support_floor = qmax * 1e-200;
  double zero_weight = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    if (q[i] <= support_floor) {
      const Vector v = ss.eigenvectors().col(i);
      zero_weight += std::abs((v.adjoint() * rho * v)(0, 0).real());
    }
  }
  if (zero_weight > 1e-12) {
    out.infinite = true;
    return out;
  }
  CompensatedSum s_rho;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 1e-18) s_rho.add(p[i] * std::log(p[i]));
  const Matrix log_sigma = matrix_log_psd(sigma, std::max(floor, support_floor));
  out.value = s_rho.value() - (rho * log_sigma).trace().real();
  return out;
}

struct PerturbedFunctional {
  Matrix sigma;  // e^{-beta(H - W)} / Tr e^{-beta H}; deliberately unnormalized
  Matrix W;
};

inline PerturbedFunctional perturbed_gibbs(const Matrix& H, const Matrix& W,
                                           double beta) {
  const double wscale = std::max(1.0, W.cwiseAbs().maxCoeff());
  if ((W - W.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * wscale)
    throw std::invalid_argument("perturbed_gibbs: W is not self-adjoint");
  const GibbsState base = gibbs(H, beta);
  const Matrix HW = H - W;
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (HW + HW.adjoint()));
  const Eigen::VectorXd& lam = es.eigenvalues();
  Vector w(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    w[i] = std::exp(-beta * lam[i] - base.logZ);  // divide by unperturbed Z
  PerturbedFunctional pf;
  pf.W = W;
  pf.sigma = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
  return pf;
}

struct EntropyIdentityReport {
  double lhs = 0.0;   // S(rho || sigma_W), unnormalized sigma
  double rhs = 0.0;   // -beta Tr(rho W)
  double defect = 0.0;
  json to_json() const {
    return json{{"lhs", lhs}, {"rhs", rhs}, {"defect", defect}};
  }
};

// S(omega|omega^W) = -beta omega(W): exact because log sigma_W =
// -beta(H - W) - logZ while log rho = -beta H - logZ, no commutation needed.
inline EntropyIdentityReport entropy_perturbation_identity(const Matrix& H,
                                                           const Matrix& W,
                                                           double beta) {
  const GibbsState g = gibbs(H, beta);
  const PerturbedFunctional pf = perturbed_gibbs(H, W, beta);
  EntropyIdentityReport rep;
  const RelEntropy re = relative_entropy(g.rho, pf.sigma, true);
  if (re.infinite)
    throw std::runtime_error("entropy_perturbation_identity: unexpected support violation");
  rep.lhs = re.value;
  rep.rhs = -beta * (g.rho * W).trace().real();
  rep.defect = std::abs(rep.lhs - rep.rhs);
  return rep;
}

struct UhlmannReport {
  double restricted = 0.0;
  double full = 0.0;
  bool pass = false;
  json to_json() const {
    return json{{"restricted", restricted}, {"full", full}, {"pass", pass}};
  }
};

inline UhlmannReport uhlmann_check(const Matrix& rho, const Matrix& sigma,
                                   const Volume& V, const std::vector<int>& keep) {
  UhlmannReport rep;
  const RelEntropy full = relative_entropy(rho, sigma);
  const Matrix rho1 = partial_trace(rho, V, keep);
  const Matrix sigma1 = partial_trace(sigma, V, keep);
  const RelEntropy restr = relative_entropy(rho1, sigma1);
  if (full.infinite) {
    rep.full = std::numeric_limits<double>::infinity();
    rep.restricted = restr.infinite ? rep.full : restr.value;
    rep.pass = true;  // anything <= infinity
    return rep;
  }
  if (restr.infinite)
    throw std::runtime_error("uhlmann_check: restriction has larger support violation");
  rep.full = full.value;
  rep.restricted = restr.value;
  rep.pass = rep.restricted <= rep.full + 1e-9;
  return rep;
}

// | tr-state(tau_s^(a)(A)) - tr-state(A) |; zero by cyclicity, so the
// infinite-temperature state never breaks these symmetries.
inline double tracial_invariance_defect(const Volume& V, const ChargeFamily& cf,
                                        const MultiIndex& a, double s,
                                        const Matrix& A) {
  const LocalOperator G =
      build_generator(cf, *V.lattice, nullptr, a, 1, V.sites, false);
  std::vector<int> gsupp = G.support;
  Matrix Gfull = Matrix::Zero(V.total_dim, V.total_dim);
  if (!gsupp.empty() && V.contains(gsupp)) Gfull = embed(G, V);
  const Matrix U = hermitian_exp(Gfull, Complex(0.0, s));
  const double dim = static_cast<double>(V.total_dim);
  const Complex t1 = (U.adjoint() * A * U).trace() / dim;
  const Complex t2 = A.trace() / dim;
  return std::abs(t1 - t2);
}

}  // namespace mwmw
