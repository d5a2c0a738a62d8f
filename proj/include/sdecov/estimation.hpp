#pragma once

#include <functional>
#include <vector>

#include "sdecov/likelihood.hpp"

namespace sdecov {

/// Result of a single coordinate maximization.
struct CoordinateUpdate {
  double value = 0.0;
  bool flat = false;      // zero curvature; coordinate left unchanged
  bool clamped = false;   // maximizer hit the coordinate's bounds
  bool analytic = true;   // closed form (affine drift) vs safeguarded Newton
};

/// Solve d logL / d theta_j = 0 with every other coordinate fixed, clamped to
/// the coordinate's bounds. Closed form for affine coordinates, safeguarded
/// Newton with bisection fallback otherwise (tolerance 1e-10).
CoordinateUpdate conditional_update(const Panel& panel, const ThetaVector& theta, int j);

struct MLEResult {
  ThetaVector theta_hat;
  int sweeps = 0;
  double final_move = 0.0;
  std::vector<double> loglik_trace;  // value at init, then after each sweep
  bool converged = false;
  long flat_updates = 0;
  long clamped_updates = 0;
};

/// Cyclic coordinate ascent: sweep coordinates in declaration order until the
/// Euclidean move of a full sweep is <= tol or max_sweeps is hit (the latter
/// yields converged = false, not an exception).
MLEResult block_relaxation_mle(const Panel& panel, const ThetaVector& init, double tol = 1e-5,
                               int max_sweeps = 10000);

struct GridSearchResult {
  ThetaVector theta;
  double loglik = 0.0;
  bool flat = false;  // constant surface; first grid point returned
};

/// Exhaustive maximizer over the bounded box, `resolution` points per axis.
/// Test oracle; refuses dimensions above 3.
GridSearchResult grid_search_mle(const Panel& panel, int resolution);

/// Golden-section maximization of a unimodal scalar function on [lo, hi].
double maximize_scalar(const std::function<double(double)>& f, double lo, double hi,
                       double tol = 1e-10);

/// Generic cyclic coordinate ascent over an arbitrary objective (used by the
/// experimental random-effects fit).
struct CoordinatewiseResult {
  VectorXd argmax;
  double value = 0.0;
  bool converged = false;
  int sweeps = 0;
};

CoordinatewiseResult maximize_coordinatewise(const std::function<double(const VectorXd&)>& f,
                                             VectorXd init, const VectorXd& lo, const VectorXd& hi,
                                             double tol = 1e-6, int max_sweeps = 200);

}  // namespace sdecov
