#include "sdecov/bootstrap.hpp"

#include <algorithm>
#include <cmath>

namespace sdecov {

namespace {

constexpr std::uint64_t kCovariateStream = 0x636f76;  // "cov"

Panel replicate_panel(const Panel& observed, const ThetaVector& theta_hat,
                      const BootstrapOptions& opt, std::uint64_t rep_key) {
  const int n = observed.n();
  std::vector<TimeGrid> grids(static_cast<size_t>(n));
  std::vector<double> x0s(static_cast<size_t>(n));
  std::vector<CovariatePath> covs(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Subject& s = observed.subjects[static_cast<size_t>(i)];
    grids[static_cast<size_t>(i)] = s.path.grid;
    x0s[static_cast<size_t>(i)] = s.path.x0;
    covs[static_cast<size_t>(i)] = s.cov;
  }
  if (opt.regenerate_covariates) {
    if (opt.covariate_sim.size() != static_cast<size_t>(observed.spec.drift.p()))
      throw UserError("bootstrap: regenerate_covariates needs one covariate_sim entry per series");
    // Mixed grids would need per-grid covariate batches; the panels this
    // pipeline bootstraps share one grid.
    for (int i = 1; i < n; ++i)
      if (!(grids[static_cast<size_t>(i)] == grids[0]))
        throw UserError("bootstrap: covariate regeneration requires a shared grid");
    covs = simulate_covariates(n, grids[0], opt.covariate_sim,
                               rng::derive(rep_key, kCovariateStream));
  }
  return simulate_panel(observed.spec, theta_hat, grids, x0s, std::move(covs), rep_key);
}

}  // namespace

BootstrapDist parametric_bootstrap(const Panel& observed, const ThetaVector& theta_hat,
                                   const BootstrapOptions& opt) {
  if (opt.B < 1) throw UserError("bootstrap: B must be >= 1");
  BootstrapDist dist;
  dist.source = theta_hat;
  dist.seed = opt.seed;
  dist.draws.assign(static_cast<size_t>(opt.B), theta_hat.value);
  dist.converged.assign(static_cast<size_t>(opt.B), 0);

#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < opt.B; ++b) {
    const std::uint64_t rep_key = rng::derive(opt.seed, static_cast<std::uint64_t>(b));
    try {
      const Panel panel = replicate_panel(observed, theta_hat, opt, rep_key);
      const MLEResult fit = block_relaxation_mle(panel, theta_hat, opt.fit_tol, opt.max_sweeps);
      dist.draws[static_cast<size_t>(b)] = fit.theta_hat.value;
      dist.converged[static_cast<size_t>(b)] = fit.converged ? 1 : 0;
    } catch (const NumericalError&) {
      dist.converged[static_cast<size_t>(b)] = 0;  // draw stays at theta_hat
    }
  }

  const double failure_rate = static_cast<double>(dist.n_failed()) / opt.B;
  if (failure_rate > opt.max_failure_fraction)
    throw NumericalError("bootstrap: " + std::to_string(dist.n_failed()) + " of " +
                         std::to_string(opt.B) + " replicates failed to converge");
  return dist;
}

std::pair<double, double> percentile_ci(std::vector<double> values, double level) {
  if (values.empty()) throw UserError("percentile_ci: empty sample");
  if (!(level > 0.0 && level < 1.0)) throw UserError("percentile_ci: level must be in (0,1)");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = [&](double q) {
    // nearest-rank ceil with a guard against 25.000000000000004-style noise
    const auto r = static_cast<long>(std::ceil(q * n - 1e-9));
    return static_cast<size_t>(std::clamp(r, 1L, static_cast<long>(values.size()))) - 1;
  };
  return {values[rank((1.0 - level) / 2.0)], values[rank((1.0 + level) / 2.0)]};
}

}  // namespace sdecov
