#pragma once

#include <vector>

#include "sdecov/model.hpp"

namespace sdecov {

/// Per-subject sufficient reduction of the drift likelihood:
///   U = sum_k phi(t_k) b(X_k) / sigma^2(X_k) * (X_{k+1} - X_k)   (left-point Ito sum)
///   V = sum_k phi(t_k)^2 b(X_k)^2 / sigma^2(X_k) * step
/// The log density against the null-drift dominating measure is U - V/2.
struct GirsanovStats {
  double U = 0.0;
  double V = 0.0;
};

GirsanovStats girsanov_stats(const Subject& subject, const DriftSpec& drift,
                             const DiffusionSpec& diffusion, const ThetaVector& theta);

/// Assembles features on the fly; convenience for single-path callers.
GirsanovStats girsanov_stats(const SubjectPath& path, const CovariatePath& cov,
                             const DriftSpec& drift, const DiffusionSpec& diffusion,
                             const ThetaVector& theta);

std::vector<GirsanovStats> girsanov_stats(const Panel& panel, const ThetaVector& theta);

/// sum_i (U_i - V_i / 2); summation order fixed by subject then time index.
double log_likelihood(const Panel& panel, const ThetaVector& theta);

/// Coordinate-restricted quadratic: with every other coordinate held fixed and
/// the drift affine in theta_j,
///   logL(theta_j) = const + a * theta_j - (c * theta_j^2 + d * theta_j) / 2,
/// where a comes from U and (c, d) from V. c >= 0 always; c == 0 marks a flat
/// direction. Precondition: drift.affine_in(j).
struct CoordinateQuadratic {
  double a = 0.0;
  double c = 0.0;
  double d = 0.0;

  double stationary_point() const { return (a - d / 2.0) / c; }
  double derivative_at(double v) const { return a - d / 2.0 - c * v; }
};

CoordinateQuadratic coordinate_quadratic(const Panel& panel, const ThetaVector& theta, int j);

/// Gradient of log_likelihood. Coordinates with affine drift use the exact
/// sums; the rest use central finite differences with h = 1e-6 max(1, |theta_j|).
/// `analytic[j]` records which branch produced gradient(j).
struct ScoreResult {
  VectorXd gradient;
  std::vector<bool> analytic;
  bool boundary_warning = false;  // theta sits on its box boundary
};

ScoreResult score(const Panel& panel, const ThetaVector& theta);

/// Observed Fisher information -l''_n(theta_hat) via symmetric finite
/// differences of the score. Falls back to the identity (flagged) when the
/// matrix has a nonpositive eigenvalue or the MLE is absent.
struct InformationMatrix {
  MatrixXd matrix;       // identity when fallback is set
  MatrixXd neg_hessian;  // raw -l'' estimate, kept for diagnostics
  bool fallback = false;
};

InformationMatrix observed_information(const Panel& panel, const ThetaVector& theta_hat,
                                       bool mle_exists = true);

/// Symmetric PSD square root of the observed information (identity under fallback);
/// standardizes estimates and posterior draws.
MatrixXd information_sqrt(const InformationMatrix& info);

}  // namespace sdecov
