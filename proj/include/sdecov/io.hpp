#pragma once

#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <string>
#include <vector>

#include "sdecov/bayes.hpp"
#include "sdecov/experiments.hpp"
#include "sdecov/random_effects.hpp"
#include "sdecov/stats.hpp"

namespace sdecov::io {

using json = nlohmann::json;

/// 17-significant-digit formatting; round-trips doubles exactly.
std::string fmt(double v);

// ---- Panel CSV (long format: subject,time,x,z1,...,zp) -------------------

std::string panel_to_csv(const Panel& panel);
void write_panel_csv(const std::string& path, const Panel& panel);

struct RawPanel {
  std::vector<SubjectPath> paths;
  std::vector<CovariatePath> covariates;
  int n_covariates = 0;
};

/// Parse + validate the long format; errors carry 1-based row numbers.
RawPanel read_panel_csv(const std::string& path);

/// Assemble a Panel against `spec`; without a spec, a product-drift model with
/// the inferred covariate count is attached.
Panel ingest_panel(const std::string& path, std::optional<ModelSpec> spec = std::nullopt);

// ---- Config JSON ----------------------------------------------------------

struct RunConfig {
  ModelSpec model;
  TimeGrid grid{1.0, 100};
  int n_subjects = 20;
  std::vector<double> x0s{0.0};  // one shared value or one per subject
  std::vector<CovariateSimSpec> covariate_sim;
  VectorXd theta_true;  // may be empty
  VectorXd theta_init;  // may be empty (random init)
  std::uint64_t seed = 1;
  double fit_tol = 1e-5;

  int bootstrap_B = 1000;
  double ci_level = 0.95;
  bool regenerate_covariates = false;

  double abc_epsilon = 0.1;
  int abc_n_accept = 10000;
  long abc_max_trials = 100000000;

  long gibbs_iters = 100000;
  int gibbs_thin = 10;
  double gibbs_prior_mean = 0.0;
  double gibbs_prior_sd = 10.0;
  double gibbs_init = 0.1;

  double x0_for(int subject) const {
    return x0s.size() == 1 ? x0s.front() : x0s.at(static_cast<size_t>(subject));
  }
};

RunConfig parse_config(const json& j);
RunConfig load_config(const std::string& path);
json config_to_json(const RunConfig& cfg);

REParams parse_re_params(const json& j);
REParams load_re_params(const std::string& path);

// ---- Output writers --------------------------------------------------------

void write_text(const std::string& path, const std::string& body);
void write_json(const std::string& path, const json& j);

json fit_to_json(const MLEResult& fit, std::uint64_t seed);
void write_bootstrap_replicates_csv(const std::string& path, const BootstrapDist& dist);
void write_chain_csv(const std::string& path, const ChainResult& chain);
void write_diagnostics_csv(const std::string& path, const ChainDiagnostics& diag,
                           const std::vector<std::string>& names);
void write_girsanov_csv(const std::string& path, const std::vector<GirsanovStats>& stats);
void write_histogram_csv(const std::string& path, const stats::Histogram& hist);
void write_qq_csv(const std::string& path, std::vector<double> sample);
json experiment_report_to_json(const ExperimentReport& report);
void write_standardized_csv(const std::string& path, const ExperimentReport& report);

// ---- Manifest ---------------------------------------------------------------

std::string hash_hex(const std::string& data);  // FNV-1a 64

/// Every run writes manifest.json: subcommand, resolved config, args, seed,
/// threads, outputs, runtimes. A run is reproducible from this file alone.
void write_manifest(const std::string& dir, const std::string& subcommand, const json& args,
                    const json& config, std::uint64_t seed, int threads,
                    const std::vector<std::string>& outputs, double runtime_sec);

json load_manifest(const std::string& path);

}  // namespace sdecov::io
