#pragma once

#include <vector>

#include "sdecov/estimation.hpp"

namespace sdecov {

/// Sufficient statistics of the Gaussian-random-effects likelihood. With
/// regressors m(z(t), x(t)) = (1, g_1(z_1) b_beta(x), ..., g_p(z_p) b_beta(x)),
///   A = sum_k m(t_k) / sigma^2(X_k) * (X_{k+1} - X_k)
///   B = sum_k m(t_k) m(t_k)^T / sigma^2(X_k) * step
/// so the subject's conditional log density given effects xi is
/// xi^T A - xi^T B xi / 2. B is positive semidefinite by construction.
struct RESuffStats {
  VectorXd A;  // length p+1
  MatrixXd B;  // (p+1) x (p+1)
};

RESuffStats re_suff_stats(const Subject& subject, const DriftSpec& drift,
                          const DiffusionSpec& diffusion, const VectorXd& beta);

RESuffStats re_suff_stats(const SubjectPath& path, const CovariatePath& cov,
                          const DriftSpec& drift, const DiffusionSpec& diffusion,
                          const VectorXd& beta);

/// Population parameters: effects xi^i ~ N(mu, Sigma) iid, plus the drift's
/// fixed shape parameters beta.
struct REParams {
  VectorXd mu;
  MatrixXd Sigma;
  VectorXd beta;

  void validate() const;
};

/// Per-subject marginal log-likelihood terms, effects integrated out:
///   -log det(I + B Sigma)/2 - (mu - B^{-1}A)^T (I + B Sigma)^{-1} B (mu - B^{-1}A)/2
///     + A^T B^{-1} A / 2.
double re_subject_loglik_direct(const RESuffStats& s, const REParams& params);

/// Algebraically equivalent form that avoids B^{-1} (valid for singular B):
///   -log det(I + B Sigma)/2 + mu^T A - mu^T B mu / 2
///     + (A - B mu)^T (I + Sigma B)^{-1} Sigma (A - B mu) / 2.
double re_subject_loglik_stable(const RESuffStats& s, const REParams& params);

/// Dispatches on the conditioning of B.
double re_subject_loglik(const RESuffStats& s, const REParams& params);

std::vector<double> re_subject_terms(const Panel& panel, const REParams& params);

double re_marginal_loglik(const Panel& panel, const REParams& params);

/// Best-effort coordinate-ascent fit of (mu, log-Cholesky(Sigma), beta).
/// Experimental: exposes the generic scalar updates, no global guarantees.
struct REFitResult {
  REParams params;
  double loglik = 0.0;
  bool converged = false;
  int sweeps = 0;
};

REFitResult re_fit_experimental(const Panel& panel, REParams init, double tol = 1e-6,
                                int max_sweeps = 100);

}  // namespace sdecov
