// Command-line entry point: simulate | fit | bootstrap | abc | gibbs |
// re-loglik | verify | ingest. Every run writes a manifest.json into the
// output directory; rerunning any subcommand with --config manifest.json
// reproduces it bit-identically.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sdecov/io.hpp"
#include "sdecov/random_effects.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace sdecov;

namespace {

struct GlobalOpts {
  std::string out_dir;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

std::string resolve_out(const GlobalOpts& g, const std::string& name) {
  const fs::path p(name);
  if (p.is_absolute()) return name;
  return (fs::path(g.out_dir) / p).string();
}

int effective_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

io::RunConfig load_resolved_config(const std::string& path, const GlobalOpts& g) {
  io::RunConfig cfg = io::load_config(path);
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

std::vector<CovariatePath> covariates_for_config(const io::RunConfig& cfg, std::uint64_t key) {
  if (cfg.model.drift.p() == 0) {
    std::vector<CovariatePath> covs(static_cast<size_t>(cfg.n_subjects));
    for (int i = 0; i < cfg.n_subjects; ++i) {
      covs[static_cast<size_t>(i)].subject = i;
      covs[static_cast<size_t>(i)].grid = cfg.grid;
      covs[static_cast<size_t>(i)].z.resize(0, cfg.grid.knots());
    }
    return covs;
  }
  return simulate_covariates(cfg.n_subjects, cfg.grid, cfg.covariate_sim,
                             rng::derive(key, 0xc0f));
}

Panel simulate_config_panel(const io::RunConfig& cfg) {
  if (cfg.theta_true.size() == 0)
    throw UserError("config: field 'theta_true' is required to simulate");
  std::vector<TimeGrid> grids(static_cast<size_t>(cfg.n_subjects), cfg.grid);
  std::vector<double> x0s(static_cast<size_t>(cfg.n_subjects));
  for (int i = 0; i < cfg.n_subjects; ++i) x0s[static_cast<size_t>(i)] = cfg.x0_for(i);
  return simulate_panel(cfg.model, cfg.model.make_theta(cfg.theta_true), grids, x0s,
                        covariates_for_config(cfg, cfg.seed), rng::derive(cfg.seed, 0x0a7));
}

ThetaVector initial_theta(const io::RunConfig& cfg, const std::string& init_arg) {
  const int d = cfg.model.dim();
  if (init_arg == "random" || (init_arg.empty() && cfg.theta_init.size() == 0)) {
    rng::CounterRng r(rng::derive(cfg.seed, 0x1217));
    VectorXd v(d);
    for (int j = 0; j < d; ++j) v(j) = r.normal();
    ThetaVector t = cfg.model.make_theta(v);
    for (int j = 0; j < d; ++j) t.value(j) = t.clamp(j, t.value(j));
    return t;
  }
  if (!init_arg.empty() && init_arg.front() == '[') {
    const json j = json::parse(init_arg);
    VectorXd v(j.size());
    for (size_t k = 0; k < j.size(); ++k) v(static_cast<long>(k)) = j[k].get<double>();
    return cfg.model.make_theta(v);
  }
  if (!init_arg.empty()) {
    const json j = io::load_manifest(init_arg);  // any JSON file
    const json arr = j.contains("theta_hat") ? j.at("theta_hat") : j;
    VectorXd v(arr.size());
    for (size_t k = 0; k < arr.size(); ++k) v(static_cast<long>(k)) = arr[k].get<double>();
    return cfg.model.make_theta(v);
  }
  return cfg.model.make_theta(cfg.theta_init);
}

json summarize_draws(const std::vector<VectorXd>& draws, const std::vector<std::string>& names,
                     const DriftSpec& drift, const ModelSpec& spec, double level) {
  json out;
  const int d = static_cast<int>(draws.front().size());
  for (int j = 0; j < d; ++j) {
    std::vector<double> coord;
    coord.reserve(draws.size());
    for (const VectorXd& v : draws) coord.push_back(v(j));
    const auto [lo, hi] = percentile_ci(coord, level);
    out["coordinates"][names[static_cast<size_t>(j)]] = {
        {"mean", stats::mean(coord)}, {"ci", {lo, hi}}};
  }
  if (drift.scale_invariant()) {
    const ThetaVector probe = spec.make_theta(draws.front());
    const auto first = identified_products(drift, probe);
    for (size_t k = 0; k < first.size(); ++k) {
      std::vector<double> prod;
      prod.reserve(draws.size());
      for (const VectorXd& v : draws)
        prod.push_back(identified_products(drift, spec.make_theta(v))[k].second);
      const auto [lo, hi] = percentile_ci(prod, level);
      out["products"][first[k].first] = {{"mean", stats::mean(prod)}, {"ci", {lo, hi}}};
    }
  }
  return out;
}

void write_draw_histograms(const GlobalOpts& g, const std::vector<VectorXd>& draws,
                           const std::vector<std::string>& names, const ModelSpec& spec,
                           std::vector<std::string>& outputs) {
  const int d = static_cast<int>(draws.front().size());
  for (int j = 0; j < d; ++j) {
    std::vector<double> coord;
    coord.reserve(draws.size());
    for (const VectorXd& v : draws) coord.push_back(v(j));
    const std::string path = resolve_out(g, "hist_" + names[static_cast<size_t>(j)] + ".csv");
    io::write_histogram_csv(path, stats::histogram(coord, 40));
    outputs.push_back(path);
  }
  if (spec.drift.scale_invariant()) {
    const auto first = identified_products(spec.drift, spec.make_theta(draws.front()));
    for (size_t k = 0; k < first.size(); ++k) {
      std::vector<double> prod;
      prod.reserve(draws.size());
      for (const VectorXd& v : draws)
        prod.push_back(identified_products(spec.drift, spec.make_theta(v))[k].second);
      std::string tag = first[k].first;
      std::replace(tag.begin(), tag.end(), '*', '_');
      const std::string path = resolve_out(g, "hist_" + tag + ".csv");
      io::write_histogram_csv(path, stats::histogram(prod, 40));
      outputs.push_back(path);
    }
  }
}

// nse-like preset: 15 subjects, 467 rows (466 steps), three tame covariate
// series, per-subject CKLS diffusions.
io::RunConfig nse_like_config(std::uint64_t seed) {
  io::RunConfig cfg;
  std::vector<DiffusionSpec> diffusions;
  rng::CounterRng r(rng::derive(seed, 0x4e5e));
  for (int i = 0; i < 15; ++i) {
    DiffusionSpec d;
    d.kind = DiffusionSpec::Kind::CklsPower;
    d.A = 0.3 + 0.1 * std::abs(r.normal());
    d.B = 0.5 + 0.1 * std::abs(r.normal());
    diffusions.push_back(d);
  }
  cfg.model = make_nse_like_model(diffusions);
  cfg.grid = TimeGrid{466.0 / 252.0, 466};
  cfg.n_subjects = 15;
  cfg.x0s = {100.0};
  cfg.covariate_sim.assign(3, CovariateSimSpec{-0.5, 0.5, 1.0});
  // (beta1, beta2, xi0..xi3): weak mean reversion, three covariate effects
  cfg.theta_true = (VectorXd(6) << 1.0, -0.002, 0.15, 0.1, -0.1, 0.05).finished();
  cfg.seed = seed;
  return cfg;
}

// ---------------------------------------------------------------------------

int run_simulate(const GlobalOpts& g, const std::string& config_path, const std::string& preset,
                 const std::string& out_name) {
  const auto t0 = Clock::now();
  io::RunConfig cfg;
  if (!preset.empty()) {
    if (preset != "nse-like") throw UserError("simulate: unknown preset '" + preset + "'");
    cfg = nse_like_config(g.seed ? *g.seed : 1);
  } else {
    if (config_path.empty()) throw UserError("simulate: need --config or --preset");
    cfg = load_resolved_config(config_path, g);
  }
  const Panel panel = simulate_config_panel(cfg);
  const std::string out = resolve_out(g, out_name);
  io::write_panel_csv(out, panel);
  if (panel.clamped_values > 0)
    std::cerr << "warning: " << panel.clamped_values
              << " covariate values clamped to their declared range\n";
  io::write_manifest(g.out_dir, "simulate", {{"out", out_name}, {"preset", preset}},
                     io::config_to_json(cfg), cfg.seed, effective_threads(), {out},
                     seconds_since(t0));
  std::cout << "wrote " << out << " (" << panel.n() << " subjects)\n";
  return 0;
}

int run_fit(const GlobalOpts& g, const std::string& config_path, const std::string& data_path,
            const std::string& init_arg, std::optional<double> tol, const std::string& out_name,
            const std::string& dump_uv) {
  const auto t0 = Clock::now();
  io::RunConfig cfg = load_resolved_config(config_path, g);
  if (tol) cfg.fit_tol = *tol;
  const Panel panel = io::ingest_panel(data_path, cfg.model);
  const ThetaVector init = initial_theta(cfg, init_arg);
  const MLEResult fit = block_relaxation_mle(panel, init, cfg.fit_tol);

  json out_json = io::fit_to_json(fit, cfg.seed);
  for (const auto& [name, value] : identified_products(cfg.model.drift, fit.theta_hat))
    out_json["products"][name] = value;
  const std::string out = resolve_out(g, out_name);
  io::write_json(out, out_json);
  std::vector<std::string> outputs{out};
  if (!dump_uv.empty()) {
    const std::string uv = resolve_out(g, dump_uv);
    io::write_girsanov_csv(uv, girsanov_stats(panel, fit.theta_hat));
    outputs.push_back(uv);
  }
  io::write_manifest(g.out_dir, "fit",
                     {{"data", data_path}, {"init", init_arg}, {"out", out_name}},
                     io::config_to_json(cfg), cfg.seed, effective_threads(), outputs,
                     seconds_since(t0));
  std::cout << (fit.converged ? "converged" : "NOT converged") << " after " << fit.sweeps
            << " sweeps\n";
  return 0;
}

int run_bootstrap(const GlobalOpts& g, const std::string& config_path,
                  const std::string& data_path, const std::string& fit_path,
                  std::optional<int> B) {
  const auto t0 = Clock::now();
  io::RunConfig cfg = load_resolved_config(config_path, g);
  if (B) cfg.bootstrap_B = *B;
  const Panel panel = io::ingest_panel(data_path, cfg.model);

  ThetaVector theta_hat = fit_path.empty()
                              ? block_relaxation_mle(panel, initial_theta(cfg, ""), cfg.fit_tol)
                                    .theta_hat
                              : initial_theta(cfg, fit_path);

  BootstrapOptions opt;
  opt.B = cfg.bootstrap_B;
  opt.seed = rng::derive(cfg.seed, 0xb007);
  opt.fit_tol = cfg.fit_tol;
  opt.regenerate_covariates = cfg.regenerate_covariates;
  opt.covariate_sim = cfg.covariate_sim;
  const BootstrapDist dist = parametric_bootstrap(panel, theta_hat, opt);

  std::vector<std::string> outputs;
  const std::string reps = resolve_out(g, "replicates.csv");
  io::write_bootstrap_replicates_csv(reps, dist);
  outputs.push_back(reps);

  json summary = summarize_draws(dist.draws, theta_hat.names, cfg.model.drift, cfg.model,
                                 cfg.ci_level);
  summary["theta_hat"] = std::vector<double>(theta_hat.value.data(),
                                             theta_hat.value.data() + theta_hat.value.size());
  summary["failed_replicates"] = dist.n_failed();
  const PriorSpec prior = empirical_bayes_prior(dist, cfg.ci_level);
  summary["empirical_bayes_prior"] = {
      {"mean", std::vector<double>(prior.mean.data(), prior.mean.data() + prior.mean.size())},
      {"sd", std::vector<double>(prior.sd.data(), prior.sd.data() + prior.sd.size())}};
  const std::string sum = resolve_out(g, "summary.json");
  io::write_json(sum, summary);
  outputs.push_back(sum);
  write_draw_histograms(g, dist.draws, theta_hat.names, cfg.model, outputs);

  io::write_manifest(g.out_dir, "bootstrap", {{"data", data_path}, {"fit", fit_path}},
                     io::config_to_json(cfg), cfg.seed, effective_threads(), outputs,
                     seconds_since(t0));
  std::cout << "bootstrap: " << dist.draws.size() << " replicates, " << dist.n_failed()
            << " failed\n";
  return 0;
}

PriorSpec prior_from_arg(const io::RunConfig& cfg, const std::string& prior_arg) {
  PriorSpec prior;
  if (prior_arg.empty()) {
    prior.mean = VectorXd::Constant(cfg.model.dim(), cfg.gibbs_prior_mean);
    prior.sd = VectorXd::Constant(cfg.model.dim(), cfg.gibbs_prior_sd);
    return prior;
  }
  const json j = io::load_manifest(prior_arg);
  const json& src = j.contains("empirical_bayes_prior") ? j.at("empirical_bayes_prior") : j;
  if (!src.contains("mean") || !src.contains("sd"))
    throw UserError("prior: '" + prior_arg + "' needs 'mean' and 'sd' arrays");
  prior.mean.resize(static_cast<long>(src.at("mean").size()));
  prior.sd.resize(static_cast<long>(src.at("sd").size()));
  for (long k = 0; k < prior.mean.size(); ++k) {
    prior.mean(k) = src.at("mean")[static_cast<size_t>(k)].get<double>();
    prior.sd(k) = src.at("sd")[static_cast<size_t>(k)].get<double>();
  }
  prior.validate();
  return prior;
}

int run_abc(const GlobalOpts& g, const std::string& config_path, const std::string& data_path,
            const std::string& prior_arg, std::optional<double> epsilon,
            std::optional<int> n_accept) {
  const auto t0 = Clock::now();
  io::RunConfig cfg = load_resolved_config(config_path, g);
  if (epsilon) cfg.abc_epsilon = *epsilon;
  if (n_accept) cfg.abc_n_accept = *n_accept;
  const Panel panel = io::ingest_panel(data_path, cfg.model);
  const PriorSpec prior = prior_from_arg(cfg, prior_arg);

  AbcOptions opt;
  opt.epsilon = cfg.abc_epsilon;
  opt.n_accept = cfg.abc_n_accept;
  opt.max_trials = cfg.abc_max_trials;
  opt.seed = rng::derive(cfg.seed, 0xabc);
  const ChainResult chain = abc_rejection(panel, prior, opt);

  std::vector<std::string> outputs;
  const std::string chain_path = resolve_out(g, "chain.csv");
  io::write_chain_csv(chain_path, chain);
  outputs.push_back(chain_path);
  const std::string diag_path = resolve_out(g, "diagnostics.csv");
  io::write_diagnostics_csv(diag_path, chain_diagnostics(chain), chain.coord_names);
  outputs.push_back(diag_path);

  json summary = summarize_draws(chain.draws, chain.coord_names, cfg.model.drift, cfg.model,
                                 cfg.ci_level);
  summary["acceptance_rate"] = chain.acceptance_rate;
  summary["trials"] = chain.trials;
  summary["epsilon"] = cfg.abc_epsilon;
  const std::string sum = resolve_out(g, "summary.json");
  io::write_json(sum, summary);
  outputs.push_back(sum);

  io::write_manifest(g.out_dir, "abc", {{"data", data_path}, {"prior", prior_arg}},
                     io::config_to_json(cfg), cfg.seed, effective_threads(), outputs,
                     seconds_since(t0));
  std::cout << "abc: " << chain.draws.size() << " draws, acceptance rate "
            << chain.acceptance_rate << "\n";
  return 0;
}

int run_gibbs(const GlobalOpts& g, const std::string& config_path, const std::string& data_path,
              const std::string& prior_arg, std::optional<long> iters, std::optional<int> thin) {
  const auto t0 = Clock::now();
  io::RunConfig cfg = load_resolved_config(config_path, g);
  if (iters) cfg.gibbs_iters = *iters;
  if (thin) cfg.gibbs_thin = *thin;
  const Panel panel = io::ingest_panel(data_path, cfg.model);
  const PriorSpec prior = prior_from_arg(cfg, prior_arg);

  GibbsOptions opt;
  opt.iters = cfg.gibbs_iters;
  opt.thin = cfg.gibbs_thin;
  opt.seed = rng::derive(cfg.seed, 0x91bb5);
  const ThetaVector init =
      cfg.model.make_theta(VectorXd::Constant(cfg.model.dim(), cfg.gibbs_init));
  const ChainResult chain = gibbs_sampler(panel, prior, init, opt);

  std::vector<std::string> outputs;
  const std::string chain_path = resolve_out(g, "chain.csv");
  io::write_chain_csv(chain_path, chain);
  outputs.push_back(chain_path);
  const std::string diag_path = resolve_out(g, "diagnostics.csv");
  io::write_diagnostics_csv(diag_path, chain_diagnostics(chain), chain.coord_names);
  outputs.push_back(diag_path);

  json summary = summarize_draws(chain.draws, chain.coord_names, cfg.model.drift, cfg.model,
                                 cfg.ci_level);
  summary["iters"] = cfg.gibbs_iters;
  summary["thin"] = cfg.gibbs_thin;
  const std::string sum = resolve_out(g, "summary.json");
  io::write_json(sum, summary);
  outputs.push_back(sum);

  io::write_manifest(g.out_dir, "gibbs", {{"data", data_path}, {"prior", prior_arg}},
                     io::config_to_json(cfg), cfg.seed, effective_threads(), outputs,
                     seconds_since(t0));
  std::cout << "gibbs: " << chain.draws.size() << " recorded draws\n";
  return 0;
}

int run_re_loglik(const GlobalOpts& g, const std::string& config_path,
                  const std::string& data_path, const std::string& params_path) {
  const auto t0 = Clock::now();
  io::RunConfig cfg = load_resolved_config(config_path, g);
  const Panel panel = io::ingest_panel(data_path, cfg.model);
  const REParams params = io::load_re_params(params_path);

  const std::vector<double> terms = re_subject_terms(panel, params);
  double total = 0.0;
  for (double t : terms) total += t;

  std::ostringstream csv;
  csv << "subject,loglik\n";
  for (size_t i = 0; i < terms.size(); ++i)
    csv << panel.subjects[i].path.subject << ',' << io::fmt(terms[i]) << "\n";
  const std::string per = resolve_out(g, "per_subject.csv");
  io::write_text(per, csv.str());
  const std::string res = resolve_out(g, "re_loglik.json");
  io::write_json(res, json{{"loglik", total}});

  io::write_manifest(g.out_dir, "re-loglik", {{"data", data_path}, {"params", params_path}},
                     io::config_to_json(cfg), cfg.seed, effective_threads(), {per, res},
                     seconds_since(t0));
  std::cout << io::fmt(total) << "\n";
  return 0;
}

int run_verify(const GlobalOpts& g, const std::string& experiment, int reps,
               const std::string& n_list_arg, int n, std::uint64_t seed, bool iid) {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.reps = reps;
  cfg.n = n;
  cfg.seed = seed;
  cfg.iid = iid;
  if (iid) {
    cfg.spec = make_identifiable_model(1.0, 0);
    cfg.theta0 = (VectorXd(1) << 1.0).finished();
  } else {
    cfg.spec = make_identifiable_model(1.0, 1);
    cfg.theta0 = (VectorXd(2) << 1.0, -1.0).finished();
  }
  if (!n_list_arg.empty()) {
    cfg.n_list.clear();
    std::stringstream ss(n_list_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) cfg.n_list.push_back(std::stoi(tok));
    if (cfg.n_list.empty()) throw UserError("verify: bad --n-list");
  }

  ExperimentReport report;
  if (experiment == "consistency")
    report = consistency_experiment(cfg);
  else if (experiment == "mle-normality")
    report = normality_experiment(cfg);
  else if (experiment == "posterior-normality")
    report = posterior_normality_experiment(cfg);
  else
    throw UserError("verify: unknown experiment '" + experiment + "'");

  std::vector<std::string> outputs;
  const std::string rep_path = resolve_out(g, "report.json");
  io::write_json(rep_path, io::experiment_report_to_json(report));
  outputs.push_back(rep_path);
  if (report.standardized.size() > 0) {
    const std::string std_path = resolve_out(g, "standardized.csv");
    io::write_standardized_csv(std_path, report);
    outputs.push_back(std_path);
    for (long j = 0; j < report.standardized.cols(); ++j) {
      std::vector<double> coord(static_cast<size_t>(report.standardized.rows()));
      for (long r = 0; r < report.standardized.rows(); ++r)
        coord[static_cast<size_t>(r)] = report.standardized(r, j);
      const std::string qq =
          resolve_out(g, "qq_" + report.coord_names[static_cast<size_t>(j)] + ".csv");
      io::write_qq_csv(qq, coord);
      outputs.push_back(qq);
    }
  }

  json args{{"experiment", experiment}, {"reps", reps},  {"n", n},
            {"n_list", n_list_arg},     {"variant", iid ? "iid" : "non-iid"}};
  io::write_manifest(g.out_dir, "verify", args, args, seed, effective_threads(), outputs,
                     seconds_since(t0));
  std::cout << "verify " << experiment << ": done in " << report.runtime_sec << "s\n";
  return 0;
}

int run_ingest(const GlobalOpts& g, const std::string& data_path, const std::string& out_name) {
  const auto t0 = Clock::now();
  const Panel panel = io::ingest_panel(data_path);
  std::vector<std::string> outputs;
  if (!out_name.empty()) {
    const std::string out = resolve_out(g, out_name);
    io::write_panel_csv(out, panel);
    outputs.push_back(out);
  }
  io::write_manifest(g.out_dir, "ingest", {{"data", data_path}, {"out", out_name}}, json::object(),
                     0, effective_threads(), outputs, seconds_since(t0));
  std::cout << "ok: " << panel.n() << " subjects, " << panel.spec.drift.p() << " covariates, "
            << panel.subjects.front().path.grid.knots() << " knots (subject "
            << panel.subjects.front().path.subject << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inference for SDE systems with time-varying covariates"};
  app.require_subcommand(1);

  GlobalOpts g;
  const char* env_dir = std::getenv("SDECOV_OUT_DIR");
  g.out_dir = env_dir ? env_dir : ".";
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker thread count (0 = default)");
  std::uint64_t seed_opt = 0;
  auto* seed_flag = app.add_option("--seed", seed_opt, "Override the config seed");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a panel to CSV");
  std::string sim_config, sim_preset, sim_out = "panel.csv";
  sim->add_option("--config", sim_config, "Config JSON (or a previous manifest)");
  sim->add_option("--preset", sim_preset, "Built-in preset: nse-like");
  sim->add_option("--out", sim_out, "Output CSV name")->capture_default_str();

  // fit
  auto* fit = app.add_subcommand("fit", "Block-relaxation MLE");
  std::string fit_config, fit_data, fit_init, fit_out = "fit.json", fit_uv;
  double fit_tol = 0.0;
  bool fit_tol_set = false;
  fit->add_option("--config", fit_config)->required();
  fit->add_option("--data", fit_data, "Panel CSV")->required();
  fit->add_option("--init", fit_init, "'random', inline JSON array, or a fit JSON file");
  fit->add_option("--tol", fit_tol)->each([&](const std::string&) { fit_tol_set = true; });
  fit->add_option("--out", fit_out)->capture_default_str();
  fit->add_option("--dump-uv", fit_uv, "Write per-subject (U,V) CSV");

  // bootstrap
  auto* boot = app.add_subcommand("bootstrap", "Parametric bootstrap of the MLE");
  std::string boot_config, boot_data, boot_fit;
  int boot_B = 0;
  bool boot_B_set = false;
  boot->add_option("--config", boot_config)->required();
  boot->add_option("--data", boot_data)->required();
  boot->add_option("--fit", boot_fit, "fit JSON with theta_hat (refits when absent)");
  boot->add_option("--B", boot_B)->each([&](const std::string&) { boot_B_set = true; });

  // abc
  auto* abc = app.add_subcommand("abc", "Rejection ABC posterior");
  std::string abc_config, abc_data, abc_prior;
  double abc_eps = 0.0;
  int abc_n = 0;
  bool abc_eps_set = false, abc_n_set = false;
  abc->add_option("--config", abc_config)->required();
  abc->add_option("--data", abc_data)->required();
  abc->add_option("--prior", abc_prior, "prior JSON or bootstrap summary.json");
  abc->add_option("--epsilon", abc_eps)->each([&](const std::string&) { abc_eps_set = true; });
  abc->add_option("--n-accept", abc_n)->each([&](const std::string&) { abc_n_set = true; });

  // gibbs
  auto* gibbs = app.add_subcommand("gibbs", "Gibbs sampler (conjugate normal conditionals)");
  std::string gibbs_config, gibbs_data, gibbs_prior;
  long gibbs_iters = 0;
  int gibbs_thin = 0;
  bool gibbs_iters_set = false, gibbs_thin_set = false;
  gibbs->add_option("--config", gibbs_config)->required();
  gibbs->add_option("--data", gibbs_data)->required();
  gibbs->add_option("--prior", gibbs_prior, "prior JSON (defaults to the config prior)");
  gibbs->add_option("--iters", gibbs_iters)->each([&](const std::string&) {
    gibbs_iters_set = true;
  });
  gibbs->add_option("--thin", gibbs_thin)->each([&](const std::string&) {
    gibbs_thin_set = true;
  });

  // re-loglik
  auto* re = app.add_subcommand("re-loglik", "Random-effects marginal log-likelihood");
  std::string re_config, re_data, re_params;
  re->add_option("--config", re_config)->required();
  re->add_option("--data", re_data)->required();
  re->add_option("--params", re_params, "JSON with mu, Sigma, beta")->required();

  // verify
  auto* verify = app.add_subcommand("verify", "Asymptotics verification experiments");
  std::string verify_experiment, verify_n_list;
  int verify_reps = 500, verify_n = 160;
  bool verify_iid = false;
  std::uint64_t verify_seed = 1;
  verify->add_option("--experiment", verify_experiment,
                     "consistency | mle-normality | posterior-normality")
      ->required();
  verify->add_option("--reps", verify_reps)->capture_default_str();
  verify->add_option("--n", verify_n)->capture_default_str();
  verify->add_option("--n-list", verify_n_list, "e.g. 10,40,160");
  verify->add_option("--exp-seed", verify_seed)->capture_default_str();
  verify->add_flag("--iid", verify_iid, "iid variant (no covariates)");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Validate a panel CSV");
  std::string ingest_data, ingest_out;
  ingest->add_option("data", ingest_data, "Panel CSV")->required();
  ingest->add_option("--out", ingest_out, "Re-emit the canonical CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    apply_threads(g.threads);
    if (seed_flag->count() > 0) g.seed = seed_opt;
    if (sim->parsed()) return run_simulate(g, sim_config, sim_preset, sim_out);
    if (fit->parsed())
      return run_fit(g, fit_config, fit_data, fit_init,
                     fit_tol_set ? std::optional<double>(fit_tol) : std::nullopt, fit_out, fit_uv);
    if (boot->parsed())
      return run_bootstrap(g, boot_config, boot_data, boot_fit,
                           boot_B_set ? std::optional<int>(boot_B) : std::nullopt);
    if (abc->parsed())
      return run_abc(g, abc_config, abc_data, abc_prior,
                     abc_eps_set ? std::optional<double>(abc_eps) : std::nullopt,
                     abc_n_set ? std::optional<int>(abc_n) : std::nullopt);
    if (gibbs->parsed())
      return run_gibbs(g, gibbs_config, gibbs_data, gibbs_prior,
                       gibbs_iters_set ? std::optional<long>(gibbs_iters) : std::nullopt,
                       gibbs_thin_set ? std::optional<int>(gibbs_thin) : std::nullopt);
    if (re->parsed()) return run_re_loglik(g, re_config, re_data, re_params);
    if (verify->parsed())
      return run_verify(g, verify_experiment, verify_reps, verify_n_list, verify_n, verify_seed,
                        verify_iid);
    if (ingest->parsed()) return run_ingest(g, ingest_data, ingest_out);
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
