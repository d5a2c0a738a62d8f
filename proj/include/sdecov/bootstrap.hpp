#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sdecov/estimation.hpp"
#include "sdecov/simulate.hpp"

namespace sdecov {

struct BootstrapOptions {
  int B = 1000;
  std::uint64_t seed = 0;
  double fit_tol = 1e-5;
  int max_sweeps = 10000;
  /// Covariates are conditioning information and held fixed by default;
  /// regeneration draws fresh paths per replicate from `covariate_sim`.
  bool regenerate_covariates = false;
  std::vector<CovariateSimSpec> covariate_sim;
  double max_failure_fraction = 0.10;
};

struct BootstrapDist {
  std::vector<VectorXd> draws;  // one refitted theta per replicate
  std::vector<char> converged;
  ThetaVector source;  // the plug-in theta_hat
  std::uint64_t seed = 0;

  int n_failed() const {
    int f = 0;
    for (char c : converged)
      if (!c) ++f;
    return f;
  }
};

/// Simulate B panels under theta_hat on the observed panel's grids/x0s (seed, b)
/// and refit each by block relaxation warm-started at theta_hat. Replicate
/// failures are recorded, not fatal, unless they exceed max_failure_fraction.
BootstrapDist parametric_bootstrap(const Panel& observed, const ThetaVector& theta_hat,
                                   const BootstrapOptions& opt);

/// Nearest-rank percentile interval: ranks ceil((1-level)/2 * B) and
/// ceil((1+level)/2 * B) of the sorted sample.
std::pair<double, double> percentile_ci(std::vector<double> values, double level);

}  // namespace sdecov
