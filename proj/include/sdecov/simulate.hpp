#pragma once

#include <cstdint>
#include <vector>

#include "sdecov/model.hpp"
#include "sdecov/rng.hpp"

namespace sdecov {

/// Parameters of one covariate SDE dz = xi_i z dt + dW with xi_i ~ N(xi_mean, xi_sd^2)
/// drawn per subject.
struct CovariateSimSpec {
  double xi_mean = 0.0;
  double xi_sd = 1.0;
  double z0 = 0.0;
};

/// Warning counters produced while stepping paths.
struct SimulationLog {
  long reflections = 0;  // CKLS states reflected at the positivity floor
};

/// Euler-Maruyama covariate paths, one per subject; series l for subject i is
/// driven by its own derived noise stream, so the output is independent of
/// evaluation order.
std::vector<CovariatePath> simulate_covariates(int n, const TimeGrid& grid,
                                               const std::vector<CovariateSimSpec>& series,
                                               std::uint64_t seed);

/// Single-covariate convenience overload.
std::vector<CovariatePath> simulate_covariates(int n, const TimeGrid& grid, double xi_mean,
                                               double xi_sd, double z0, std::uint64_t seed);

/// Euler-Maruyama state path X(t_{k+1}) = X(t_k) + phi(t_k) b(X(t_k)) step + sigma(X(t_k)) dW_k.
SubjectPath simulate_path(const DriftSpec& drift, const DiffusionSpec& diffusion,
                          const ThetaVector& theta, const CovariatePath& cov, double x0,
                          std::uint64_t seed, SimulationLog* log = nullptr);

/// Same stepping with caller-supplied Wiener increments (grid refinement tests
/// share one fine noise path across coarse/fine grids this way).
SubjectPath simulate_path_with_noise(const DriftSpec& drift, const DiffusionSpec& diffusion,
                                     const ThetaVector& theta, const CovariatePath& cov,
                                     double x0, const VectorXd& increments,
                                     SimulationLog* log = nullptr);

/// One path per subject with per-subject derived seeds (seed, i).
Panel simulate_panel(const ModelSpec& spec, const ThetaVector& theta,
                     const std::vector<TimeGrid>& grids, const std::vector<double>& x0s,
                     std::vector<CovariatePath> covariates, std::uint64_t seed,
                     SimulationLog* log = nullptr);

}  // namespace sdecov
