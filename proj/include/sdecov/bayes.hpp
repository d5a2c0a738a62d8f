#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdecov/bootstrap.hpp"

namespace sdecov {

/// Independent Normal(mean_j, sd_j^2) prior per coordinate.
struct PriorSpec {
  VectorXd mean;
  VectorXd sd;

  int dim() const { return static_cast<int>(mean.size()); }
  void validate() const {
    if (mean.size() != sd.size()) throw UserError("prior: mean/sd dimension mismatch");
    for (int j = 0; j < sd.size(); ++j)
      if (!(sd(j) > 0.0)) throw UserError("prior: sd must be > 0 for coordinate " + std::to_string(j));
  }
};

/// Prior centered at the plug-in estimate whose 95% credible interval length
/// equals the bootstrap CI length enlarged by one unit at each end:
/// sd_j = (L_j + 2) / (2 * 1.96).
PriorSpec empirical_bayes_prior(const BootstrapDist& boot, double level = 0.95);

/// Root-mean-square distance over all subjects and grid knots.
double abc_distance(const Panel& x_true, const Panel& x_new);

struct AbcOptions {
  double epsilon = 0.1;
  int n_accept = 10000;
  std::uint64_t seed = 0;
  long max_trials = 100000000;
  int chunk = 2048;  // trials evaluated per parallel batch
};

struct ChainResult {
  std::vector<VectorXd> draws;
  std::vector<double> distances;  // ABC: accepted d_x, one per draw
  long trials = 0;                // ABC: trials examined up to the last acceptance
  double acceptance_rate = 0.0;
  long iters = 0;  // Gibbs
  int thin = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> coord_names;
};

/// One prior draw + simulation + distance, keyed by trial index. Exposed so
/// shared-trial studies can replay identical trials under several epsilons.
struct AbcTrial {
  VectorXd theta;
  double distance = 0.0;
};

AbcTrial abc_trial(const Panel& x_true, const PriorSpec& prior, std::uint64_t seed, long trial);

/// Rejection ABC: draw theta from the prior, simulate on the observed panel's
/// grids/x0s/covariates, accept when d_x < epsilon. Accepted draws are ordered
/// by trial index regardless of parallel schedule.
ChainResult abc_rejection(const Panel& x_true, const PriorSpec& prior, const AbcOptions& opt);

struct GibbsOptions {
  long iters = 100000;
  int thin = 10;
  std::uint64_t seed = 0;
  std::vector<char> update_mask;  // empty = update all coordinates
};

/// Systematic-scan Gibbs sampler. Requires the drift affine in every updated
/// coordinate so each full conditional is Normal: with the coordinate slice
/// logL = a t - (c t^2 + d t)/2, precision = c + 1/sd^2 and
/// mean = (a - d/2 + prior_mean/sd^2) / precision.
ChainResult gibbs_sampler(const Panel& panel, const PriorSpec& prior, const ThetaVector& init,
                          const GibbsOptions& opt);

struct CoordinateDiagnostics {
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> acf;       // lags 1..50
  std::vector<double> running_mean;
  double ess = 0.0;              // initial-positive-sequence estimator
  bool degenerate = false;       // constant chain
};

struct ChainDiagnostics {
  std::vector<CoordinateDiagnostics> coords;
};

ChainDiagnostics chain_diagnostics(const ChainResult& chain);

}  // namespace sdecov
