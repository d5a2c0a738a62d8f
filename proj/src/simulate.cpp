#include "sdecov/simulate.hpp"

#include <cmath>

namespace sdecov {

namespace {

constexpr double kPositivityFloor = 1e-8;

// Substream tags so one subject key can feed several independent streams.
constexpr std::uint64_t kXiDrawStream = 0;
constexpr std::uint64_t kNoiseStream = 1;

}  // namespace

std::vector<CovariatePath> simulate_covariates(int n, const TimeGrid& grid,
                                               const std::vector<CovariateSimSpec>& series,
                                               std::uint64_t seed) {
  if (n < 1) throw UserError("simulate_covariates: n must be >= 1");
  if (!grid.valid()) throw UserError("simulate_covariates: invalid grid");
  const int p = static_cast<int>(series.size());
  const double step = grid.step();
  std::vector<CovariatePath> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    CovariatePath path;
    path.subject = i;
    path.grid = grid;
    path.z.resize(p, grid.knots());
    const std::uint64_t subject_key = rng::derive(seed, static_cast<std::uint64_t>(i));
    for (int l = 0; l < p; ++l) {
      const CovariateSimSpec& cs = series[static_cast<size_t>(l)];
      const std::uint64_t series_key = rng::derive(subject_key, static_cast<std::uint64_t>(l));
      const double xi = cs.xi_mean +
                        cs.xi_sd * rng::normal_at(rng::derive(series_key, kXiDrawStream), 0);
      const std::uint64_t noise_key = rng::derive(series_key, kNoiseStream);
      double z = cs.z0;
      path.z(l, 0) = z;
      for (int k = 0; k < grid.n_steps; ++k) {
        z += xi * z * step + rng::wiener_increment(noise_key, static_cast<std::uint64_t>(k), step);
        if (!std::isfinite(z)) throw SimulationOverflowError(i, k);
        path.z(l, k + 1) = z;
      }
    }
    out.push_back(std::move(path));
  }
  return out;
}

std::vector<CovariatePath> simulate_covariates(int n, const TimeGrid& grid, double xi_mean,
                                               double xi_sd, double z0, std::uint64_t seed) {
  return simulate_covariates(n, grid, {CovariateSimSpec{xi_mean, xi_sd, z0}}, seed);
}

namespace {

SubjectPath step_path(const DriftSpec& drift, const DiffusionSpec& diffusion,
                      const ThetaVector& theta, const CovariatePath& cov, double x0,
                      const VectorXd& increments, SimulationLog* log) {
  const TimeGrid& grid = cov.grid;
  if (!grid.valid()) throw UserError("simulate_path: invalid grid");
  if (increments.size() != grid.n_steps)
    throw UserError("simulate_path: expected " + std::to_string(grid.n_steps) + " increments");
  const MatrixXd feat = drift_features(drift, cov);
  const double step = grid.step();
  const VectorXd beta = theta.beta();
  const VectorXd xi = theta.xi();

  SubjectPath path;
  path.subject = cov.subject;
  path.x0 = x0;
  path.grid = grid;
  path.x.resize(grid.knots());

  if (diffusion.requires_positive_state() && x0 <= 0.0)
    throw NumericalError("domain error: CKLS diffusion needs positive state, subject " +
                         std::to_string(cov.subject) + " has x0 = " + std::to_string(x0));

  double x = x0;
  path.x(0) = x;
  for (int k = 0; k < grid.n_steps; ++k) {
    const double mu = drift_value(drift, beta, xi, feat.col(k), x);
    x += mu * step + diffusion(x) * increments(k);
    if (!std::isfinite(x)) throw SimulationOverflowError(cov.subject, k);
    if (diffusion.requires_positive_state() && x < kPositivityFloor) {
      x = kPositivityFloor + (kPositivityFloor - x);  // reflect at the floor
      if (log) ++log->reflections;
    }
    path.x(k + 1) = x;
  }
  return path;
}

}  // namespace

SubjectPath simulate_path(const DriftSpec& drift, const DiffusionSpec& diffusion,
                          const ThetaVector& theta, const CovariatePath& cov, double x0,
                          std::uint64_t seed, SimulationLog* log) {
  VectorXd dw(cov.grid.n_steps);
  const double step = cov.grid.step();
  for (int k = 0; k < cov.grid.n_steps; ++k)
    dw(k) = rng::wiener_increment(seed, static_cast<std::uint64_t>(k), step);
  return step_path(drift, diffusion, theta, cov, x0, dw, log);
}

SubjectPath simulate_path_with_noise(const DriftSpec& drift, const DiffusionSpec& diffusion,
                                     const ThetaVector& theta, const CovariatePath& cov,
                                     double x0, const VectorXd& increments, SimulationLog* log) {
  return step_path(drift, diffusion, theta, cov, x0, increments, log);
}

Panel simulate_panel(const ModelSpec& spec, const ThetaVector& theta,
                     const std::vector<TimeGrid>& grids, const std::vector<double>& x0s,
                     std::vector<CovariatePath> covariates, std::uint64_t seed,
                     SimulationLog* log) {
  const size_t n = covariates.size();
  if (n == 0) throw UserError("simulate_panel: need at least one subject");
  if (grids.size() != n || x0s.size() != n)
    throw UserError("simulate_panel: grids/x0s/covariates sizes differ");
  std::vector<SubjectPath> paths(n);
  for (size_t i = 0; i < n; ++i) {
    covariates[i].subject = static_cast<int>(i);
    if (!(covariates[i].grid == grids[i]))
      throw UserError("simulate_panel: covariate grid mismatch for subject " + std::to_string(i));
    const std::uint64_t subject_key = rng::derive(seed, static_cast<std::uint64_t>(i));
    paths[i] = simulate_path(spec.drift, spec.diffusion_for(static_cast<int>(i)), theta,
                             covariates[i], x0s[i], subject_key, log);
  }
  return Panel::assemble(spec, std::move(paths), std::move(covariates));
}

}  // namespace sdecov
