#include "sdecov/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sdecov/stats.hpp"

namespace sdecov {

namespace {

constexpr std::uint64_t kThetaStream = 0;
constexpr std::uint64_t kPathStream = 1;

}  // namespace

PriorSpec empirical_bayes_prior(const BootstrapDist& boot, double level) {
  if (boot.draws.empty()) throw UserError("empirical_bayes_prior: empty bootstrap distribution");
  const int d = boot.source.dim();
  PriorSpec prior;
  prior.mean = boot.source.value;
  prior.sd.resize(d);
  for (int j = 0; j < d; ++j) {
    std::vector<double> coord;
    coord.reserve(boot.draws.size());
    for (const VectorXd& v : boot.draws) coord.push_back(v(j));
    const auto [lo, hi] = percentile_ci(std::move(coord), level);
    prior.sd(j) = (hi - lo + 2.0) / (2.0 * 1.96);
  }
  prior.validate();
  return prior;
}

double abc_distance(const Panel& x_true, const Panel& x_new) {
  if (x_true.n() != x_new.n()) throw UserError("abc_distance: panel sizes differ");
  double ss = 0.0;
  long count = 0;
  for (int i = 0; i < x_true.n(); ++i) {
    const VectorXd& a = x_true.subjects[static_cast<size_t>(i)].path.x;
    const VectorXd& b = x_new.subjects[static_cast<size_t>(i)].path.x;
    if (a.size() != b.size()) throw UserError("abc_distance: grid sizes differ");
    ss += (a - b).squaredNorm();
    count += a.size();
  }
  return std::sqrt(ss / static_cast<double>(count));
}

AbcTrial abc_trial(const Panel& x_true, const PriorSpec& prior, std::uint64_t seed, long trial) {
  const std::uint64_t trial_key = rng::derive(seed, static_cast<std::uint64_t>(trial));
  rng::CounterRng draw(rng::derive(trial_key, kThetaStream));
  AbcTrial out;
  out.theta.resize(prior.dim());
  for (int j = 0; j < prior.dim(); ++j) out.theta(j) = prior.mean(j) + prior.sd(j) * draw.normal();

  const int n = x_true.n();
  std::vector<TimeGrid> grids(static_cast<size_t>(n));
  std::vector<double> x0s(static_cast<size_t>(n));
  std::vector<CovariatePath> covs(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Subject& s = x_true.subjects[static_cast<size_t>(i)];
    grids[static_cast<size_t>(i)] = s.path.grid;
    x0s[static_cast<size_t>(i)] = s.path.x0;
    covs[static_cast<size_t>(i)] = s.cov;
  }
  ThetaVector theta = x_true.spec.make_theta(out.theta);
  try {
    const Panel sim = simulate_panel(x_true.spec, theta, grids, x0s, std::move(covs),
                                     rng::derive(trial_key, kPathStream));
    out.distance = abc_distance(x_true, sim);
  } catch (const NumericalError&) {
    out.distance = std::numeric_limits<double>::infinity();  // exploded path: reject
  }
  return out;
}

ChainResult abc_rejection(const Panel& x_true, const PriorSpec& prior, const AbcOptions& opt) {
  if (!(opt.epsilon > 0.0)) throw UserError("abc: epsilon must be > 0");
  if (opt.n_accept < 1) throw UserError("abc: n_accept must be >= 1");
  prior.validate();
  if (prior.dim() != x_true.spec.dim()) throw UserError("abc: prior dimension mismatch");

  ChainResult chain;
  chain.seed = opt.seed;
  chain.coord_names = x_true.spec.coordinate_names();
  chain.draws.reserve(static_cast<size_t>(opt.n_accept));
  chain.distances.reserve(static_cast<size_t>(opt.n_accept));

  std::vector<AbcTrial> batch(static_cast<size_t>(opt.chunk));
  long next_trial = 0;
  while (static_cast<int>(chain.draws.size()) < opt.n_accept && next_trial < opt.max_trials) {
    const long count = std::min<long>(opt.chunk, opt.max_trials - next_trial);
#pragma omp parallel for schedule(dynamic)
    for (long t = 0; t < count; ++t)
      batch[static_cast<size_t>(t)] = abc_trial(x_true, prior, opt.seed, next_trial + t);
    for (long t = 0; t < count && static_cast<int>(chain.draws.size()) < opt.n_accept; ++t) {
      chain.trials = next_trial + t + 1;
      const AbcTrial& trial = batch[static_cast<size_t>(t)];
      if (trial.distance < opt.epsilon) {
        chain.draws.push_back(trial.theta);
        chain.distances.push_back(trial.distance);
      }
    }
    next_trial += count;
  }
  chain.acceptance_rate =
      chain.trials > 0 ? static_cast<double>(chain.draws.size()) / chain.trials : 0.0;
  if (static_cast<int>(chain.draws.size()) < opt.n_accept)
    throw BudgetError(chain.trials, static_cast<long>(chain.draws.size()), chain.acceptance_rate);
  return chain;
}

ChainResult gibbs_sampler(const Panel& panel, const PriorSpec& prior, const ThetaVector& init,
                          const GibbsOptions& opt) {
  prior.validate();
  const int d = init.dim();
  if (prior.dim() != d) throw UserError("gibbs: prior dimension mismatch");
  if (opt.iters < 1) throw UserError("gibbs: iters must be >= 1");
  if (opt.thin < 1) throw UserError("gibbs: thin must be >= 1");
  std::vector<char> mask = opt.update_mask;
  if (mask.empty()) mask.assign(static_cast<size_t>(d), 1);
  if (static_cast<int>(mask.size()) != d) throw UserError("gibbs: update_mask dimension mismatch");
  for (int j = 0; j < d; ++j)
    if (mask[static_cast<size_t>(j)] && !panel.spec.drift.affine_in(j))
      throw UserError("gibbs: coordinate " + std::to_string(j) +
                      " is not affine in the drift; full conditional is not Normal");

  ChainResult chain;
  chain.seed = opt.seed;
  chain.iters = opt.iters;
  chain.thin = opt.thin;
  chain.coord_names = panel.spec.coordinate_names();
  chain.draws.reserve(static_cast<size_t>(opt.iters / opt.thin));

  rng::CounterRng rng(rng::derive(opt.seed, 0x67696273));  // "gibs"
  ThetaVector theta = init;
  for (long it = 1; it <= opt.iters; ++it) {
    for (int j = 0; j < d; ++j) {
      if (!mask[static_cast<size_t>(j)]) continue;
      const CoordinateQuadratic q = coordinate_quadratic(panel, theta, j);
      if (q.c < -1e-12)
        throw NumericalError("gibbs: negative curvature c_j for coordinate " + std::to_string(j));
      const double prior_prec = 1.0 / (prior.sd(j) * prior.sd(j));
      const double precision = std::max(q.c, 0.0) + prior_prec;
      const double mean = (q.a - q.d / 2.0 + prior.mean(j) * prior_prec) / precision;
      theta.value(j) = mean + rng.normal() / std::sqrt(precision);
      if (!std::isfinite(theta.value(j)))
        throw NumericalError("gibbs: non-finite state for coordinate " + std::to_string(j));
    }
    if (it % opt.thin == 0) chain.draws.push_back(theta.value);
  }
  return chain;
}

ChainDiagnostics chain_diagnostics(const ChainResult& chain) {
  ChainDiagnostics diag;
  if (chain.draws.empty()) return diag;
  const int d = static_cast<int>(chain.draws.front().size());
  const size_t n = chain.draws.size();
  diag.coords.resize(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j) {
    CoordinateDiagnostics& c = diag.coords[static_cast<size_t>(j)];
    std::vector<double> x(n);
    for (size_t t = 0; t < n; ++t) x[t] = chain.draws[t](j);
    c.mean = stats::mean(x);
    c.variance = stats::variance(x);
    c.running_mean.resize(n);
    double acc = 0.0;
    for (size_t t = 0; t < n; ++t) {
      acc += x[t];
      c.running_mean[t] = acc / static_cast<double>(t + 1);
    }
    if (c.variance <= 0.0) {
      c.degenerate = true;
      c.acf.assign(50, 0.0);
      c.ess = 0.0;
      continue;
    }
    c.acf = stats::autocorrelations(x, 50);
    const auto ess = stats::effective_sample_size(x, 50);
    c.ess = ess.ess;
    c.degenerate = ess.degenerate;
  }
  return diag;
}

}  // namespace sdecov
