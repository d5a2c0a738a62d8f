#include "sdecov/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "sdecov/stats.hpp"

namespace sdecov::io {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Panel CSV

std::string panel_to_csv(const Panel& panel) {
  std::ostringstream out;
  const int p = panel.spec.drift.p();
  out << "subject,time,x";
  for (int l = 1; l <= p; ++l) out << ",z" << l;
  out << "\n";
  for (const Subject& s : panel.subjects) {
    for (int k = 0; k < s.path.grid.knots(); ++k) {
      out << s.path.subject << ',' << fmt(s.path.grid.t(k)) << ',' << fmt(s.path.x(k));
      for (int l = 0; l < p; ++l) out << ',' << fmt(s.cov.z(l, k));
      out << "\n";
    }
  }
  return out.str();
}

void write_panel_csv(const std::string& path, const Panel& panel) {
  write_text(path, panel_to_csv(panel));
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& s, long row, const std::string& what) {
  if (s.empty())
    throw UserError("ingest: row " + std::to_string(row) + ": missing " + what + " value");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v))
    throw UserError("ingest: row " + std::to_string(row) + ": bad " + what + " value '" + s + "'");
  return v;
}

struct SubjectRows {
  int id = 0;
  std::vector<double> t;
  std::vector<double> x;
  std::vector<std::vector<double>> z;  // per covariate
  long first_row = 0;
};

}  // namespace

RawPanel read_panel_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("ingest: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw UserError("ingest: '" + path + "' is empty");
  const std::vector<std::string> header = split_csv_row(line);
  if (header.size() < 3 || header[0] != "subject" || header[1] != "time" || header[2] != "x")
    throw UserError("ingest: header must be subject,time,x[,z1,...]");
  const int p = static_cast<int>(header.size()) - 3;
  for (int l = 0; l < p; ++l)
    if (header[static_cast<size_t>(3 + l)] != "z" + std::to_string(l + 1))
      throw UserError("ingest: covariate column " + std::to_string(l + 4) + " must be named z" +
                      std::to_string(l + 1));

  std::vector<SubjectRows> blocks;
  std::vector<int> seen;
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_row(line);
    if (f.size() != header.size())
      throw UserError("ingest: row " + std::to_string(row) + ": expected " +
                      std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
    const auto id = static_cast<int>(parse_field(f[0], row, "subject"));
    if (blocks.empty() || blocks.back().id != id) {
      if (std::find(seen.begin(), seen.end(), id) != seen.end())
        throw UserError("ingest: row " + std::to_string(row) + ": ragged subject blocks (subject " +
                        std::to_string(id) + " reappears)");
      seen.push_back(id);
      blocks.push_back(SubjectRows{id, {}, {}, std::vector<std::vector<double>>(
                                               static_cast<size_t>(p)),
                                   row});
    }
    SubjectRows& blk = blocks.back();
    blk.t.push_back(parse_field(f[1], row, "time"));
    blk.x.push_back(parse_field(f[2], row, "x"));
    for (int l = 0; l < p; ++l)
      blk.z[static_cast<size_t>(l)].push_back(
          parse_field(f[static_cast<size_t>(3 + l)], row, "z" + std::to_string(l + 1)));
  }
  if (blocks.empty()) throw UserError("ingest: no data rows");

  RawPanel raw;
  raw.n_covariates = p;
  for (const SubjectRows& blk : blocks) {
    const auto m = static_cast<long>(blk.t.size());
    if (m < 2)
      throw UserError("ingest: row " + std::to_string(blk.first_row) + ": subject " +
                      std::to_string(blk.id) + " needs at least 2 rows");
    const double t_end = blk.t.back();
    if (!(t_end > 0.0))
      throw UserError("ingest: row " + std::to_string(blk.first_row) + ": subject " +
                      std::to_string(blk.id) + " has nonpositive horizon");
    const double step = t_end / static_cast<double>(m - 1);
    const double tol = 1e-9 * std::max(1.0, std::abs(t_end));
    for (long k = 0; k < m; ++k)
      if (std::abs(blk.t[static_cast<size_t>(k)] - step * static_cast<double>(k)) > tol)
        throw UserError("ingest: row " + std::to_string(blk.first_row + k) +
                        ": nonuniform time spacing for subject " + std::to_string(blk.id));

    TimeGrid grid{t_end, static_cast<int>(m - 1)};
    SubjectPath path;
    path.subject = blk.id;
    path.grid = grid;
    path.x = Eigen::Map<const VectorXd>(blk.x.data(), m);
    path.x0 = path.x(0);
    CovariatePath cov;
    cov.subject = blk.id;
    cov.grid = grid;
    cov.z.resize(p, m);
    for (int l = 0; l < p; ++l)
      cov.z.row(l) = Eigen::Map<const VectorXd>(blk.z[static_cast<size_t>(l)].data(), m);
    raw.paths.push_back(std::move(path));
    raw.covariates.push_back(std::move(cov));
  }
  return raw;
}

Panel ingest_panel(const std::string& path, std::optional<ModelSpec> spec) {
  RawPanel raw = read_panel_csv(path);
  ModelSpec model;
  if (spec) {
    model = *spec;
    if (model.drift.p() != raw.n_covariates)
      throw UserError("ingest: file has " + std::to_string(raw.n_covariates) +
                      " covariates, model declares " + std::to_string(model.drift.p()));
  } else {
    model.drift.family = BFamily::Affine;
    model.drift.covariates.assign(static_cast<size_t>(raw.n_covariates), CovariateSpec{});
    model.finalize();
  }
  return Panel::assemble(std::move(model), std::move(raw.paths), std::move(raw.covariates));
}

// ---------------------------------------------------------------------------
// Config JSON

namespace {

const json& require(const json& j, const std::string& key, const std::string& scope) {
  if (!j.contains(key)) throw UserError("config: missing field '" + scope + key + "'");
  return j.at(key);
}

double num(const json& j, const std::string& field) {
  if (!j.is_number()) throw UserError("config: field '" + field + "' must be a number");
  return j.get<double>();
}

long integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) throw UserError("config: field '" + field + "' must be an integer");
  return j.get<long>();
}

VectorXd vec(const json& j, const std::string& field) {
  if (!j.is_array()) throw UserError("config: field '" + field + "' must be an array");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v(static_cast<long>(i)) = num(j[i], field);
  return v;
}

BFamily parse_b_family(const std::string& name) {
  if (name == "constant") return BFamily::Constant;
  if (name == "linear") return BFamily::Linear;
  if (name == "neg_linear") return BFamily::NegLinear;
  if (name == "affine") return BFamily::Affine;
  if (name == "tanh_affine") return BFamily::TanhAffine;
  throw UserError("config: field 'model.b_family' has unknown value '" + name + "'");
}

std::string b_family_name(BFamily f) {
  switch (f) {
    case BFamily::Constant: return "constant";
    case BFamily::Linear: return "linear";
    case BFamily::NegLinear: return "neg_linear";
    case BFamily::Affine: return "affine";
    case BFamily::TanhAffine: return "tanh_affine";
  }
  return "affine";
}

ModelSpec parse_model(const json& j) {
  ModelSpec spec;
  spec.drift.family = parse_b_family(require(j, "b_family", "model.").get<std::string>());
  if (j.contains("covariates")) {
    const json& covs = j.at("covariates");
    if (!covs.is_array()) throw UserError("config: field 'model.covariates' must be an array");
    for (const json& c : covs) {
      CovariateSpec cs;
      if (c.contains("transform")) {
        const std::string t = c.at("transform").get<std::string>();
        if (t == "identity")
          cs.transform = CovariateSpec::Transform::Identity;
        else if (t == "tanh")
          cs.transform = CovariateSpec::Transform::Tanh;
        else
          throw UserError("config: field 'model.covariates.transform' has unknown value '" + t +
                          "'");
      }
      if (c.contains("range")) {
        const VectorXd r = vec(c.at("range"), "model.covariates.range");
        if (r.size() != 2 || !(r(0) < r(1)))
          throw UserError("config: field 'model.covariates.range' must be [lo, hi] with lo < hi");
        cs.lo = r(0);
        cs.hi = r(1);
      }
      spec.drift.covariates.push_back(cs);
    }
  }
  const json& diff = require(j, "diffusion", "model.");
  if (!diff.is_array() || diff.empty())
    throw UserError("config: field 'model.diffusion' must be a nonempty array");
  spec.diffusions.clear();
  for (const json& d : diff) {
    DiffusionSpec ds;
    const std::string family = require(d, "family", "model.diffusion.").get<std::string>();
    if (family == "constant") {
      ds.kind = DiffusionSpec::Kind::Constant;
      ds.sigma = num(require(d, "sigma", "model.diffusion."), "model.diffusion.sigma");
      if (!(ds.sigma > 0.0)) throw UserError("config: field 'model.diffusion.sigma' must be > 0");
    } else if (family == "ckls") {
      ds.kind = DiffusionSpec::Kind::CklsPower;
      ds.A = num(require(d, "A", "model.diffusion."), "model.diffusion.A");
      ds.B = num(require(d, "B", "model.diffusion."), "model.diffusion.B");
      if (!(ds.A > 0.0)) throw UserError("config: field 'model.diffusion.A' must be > 0");
      if (ds.B < 0.0) throw UserError("config: field 'model.diffusion.B' must be >= 0");
    } else {
      throw UserError("config: field 'model.diffusion.family' has unknown value '" + family + "'");
    }
    spec.diffusions.push_back(ds);
  }
  if (j.contains("bounds")) {
    const json& b = j.at("bounds");
    spec.theta_lower = vec(require(b, "lower", "model.bounds."), "model.bounds.lower");
    spec.theta_upper = vec(require(b, "upper", "model.bounds."), "model.bounds.upper");
    if (spec.theta_lower.size() != spec.dim() || spec.theta_upper.size() != spec.dim())
      throw UserError("config: field 'model.bounds' must have " + std::to_string(spec.dim()) +
                      " entries");
    for (int k = 0; k < spec.dim(); ++k)
      if (!(spec.theta_lower(k) < spec.theta_upper(k)))
        throw UserError("config: field 'model.bounds' needs lower < upper per coordinate");
  }
  spec.finalize();
  return spec;
}

json model_to_json(const ModelSpec& spec) {
  json j;
  j["b_family"] = b_family_name(spec.drift.family);
  j["covariates"] = json::array();
  for (const CovariateSpec& c : spec.drift.covariates) {
    json cj;
    cj["transform"] = c.transform == CovariateSpec::Transform::Tanh ? "tanh" : "identity";
    cj["range"] = {c.lo, c.hi};
    j["covariates"].push_back(cj);
  }
  j["diffusion"] = json::array();
  for (const DiffusionSpec& d : spec.diffusions) {
    json dj;
    if (d.kind == DiffusionSpec::Kind::Constant) {
      dj["family"] = "constant";
      dj["sigma"] = d.sigma;
    } else {
      dj["family"] = "ckls";
      dj["A"] = d.A;
      dj["B"] = d.B;
    }
    j["diffusion"].push_back(dj);
  }
  j["bounds"]["lower"] = std::vector<double>(spec.theta_lower.data(),
                                             spec.theta_lower.data() + spec.theta_lower.size());
  j["bounds"]["upper"] = std::vector<double>(spec.theta_upper.data(),
                                             spec.theta_upper.data() + spec.theta_upper.size());
  return j;
}

CovariateSimSpec parse_covariate_sim(const json& j) {
  CovariateSimSpec cs;
  if (j.contains("xi_mean")) cs.xi_mean = num(j.at("xi_mean"), "covariate_sim.xi_mean");
  if (j.contains("xi_sd")) cs.xi_sd = num(j.at("xi_sd"), "covariate_sim.xi_sd");
  if (cs.xi_sd < 0.0) throw UserError("config: field 'covariate_sim.xi_sd' must be >= 0");
  if (j.contains("z0")) cs.z0 = num(j.at("z0"), "covariate_sim.z0");
  return cs;
}

}  // namespace

RunConfig parse_config(const json& j) {
  RunConfig cfg;
  cfg.model = parse_model(require(j, "model", ""));

  if (j.contains("grid")) {
    const json& g = j.at("grid");
    cfg.grid.t_end = num(require(g, "t_end", "grid."), "grid.t_end");
    cfg.grid.n_steps = static_cast<int>(integer(require(g, "n_steps", "grid."), "grid.n_steps"));
    if (!cfg.grid.valid())
      throw UserError("config: field 'grid' needs t_end > 0 and n_steps >= 1");
  }

  if (j.contains("n_subjects")) {
    cfg.n_subjects = static_cast<int>(integer(j.at("n_subjects"), "n_subjects"));
    if (cfg.n_subjects < 1) throw UserError("config: field 'n_subjects' must be >= 1");
  }

  if (j.contains("x0")) {
    if (j.at("x0").is_array()) {
      const VectorXd v = vec(j.at("x0"), "x0");
      cfg.x0s.assign(v.data(), v.data() + v.size());
      if (cfg.x0s.size() != static_cast<size_t>(cfg.n_subjects) && cfg.x0s.size() != 1)
        throw UserError("config: field 'x0' must be a scalar or one entry per subject");
    } else {
      cfg.x0s = {num(j.at("x0"), "x0")};
    }
  }

  cfg.covariate_sim.assign(static_cast<size_t>(cfg.model.drift.p()), CovariateSimSpec{});
  if (j.contains("covariate_sim")) {
    const json& cs = j.at("covariate_sim");
    if (cs.is_array()) {
      if (cs.size() != static_cast<size_t>(cfg.model.drift.p()))
        throw UserError("config: field 'covariate_sim' must have one entry per covariate");
      for (size_t l = 0; l < cs.size(); ++l) cfg.covariate_sim[l] = parse_covariate_sim(cs[l]);
    } else {
      std::fill(cfg.covariate_sim.begin(), cfg.covariate_sim.end(), parse_covariate_sim(cs));
    }
  }

  if (j.contains("theta_true")) {
    cfg.theta_true = vec(j.at("theta_true"), "theta_true");
    if (cfg.theta_true.size() != cfg.model.dim())
      throw UserError("config: field 'theta_true' must have " + std::to_string(cfg.model.dim()) +
                      " entries");
  }
  if (j.contains("theta_init")) {
    cfg.theta_init = vec(j.at("theta_init"), "theta_init");
    if (cfg.theta_init.size() != cfg.model.dim())
      throw UserError("config: field 'theta_init' must have " + std::to_string(cfg.model.dim()) +
                      " entries");
  }

  if (j.contains("seed")) cfg.seed = static_cast<std::uint64_t>(integer(j.at("seed"), "seed"));

  if (j.contains("fit")) {
    const json& f = j.at("fit");
    if (f.contains("tol")) cfg.fit_tol = num(f.at("tol"), "fit.tol");
    if (!(cfg.fit_tol > 0.0)) throw UserError("config: field 'fit.tol' must be > 0");
  }

  if (j.contains("bootstrap")) {
    const json& b = j.at("bootstrap");
    if (b.contains("B")) cfg.bootstrap_B = static_cast<int>(integer(b.at("B"), "bootstrap.B"));
    if (cfg.bootstrap_B < 1) throw UserError("config: field 'bootstrap.B' must be >= 1");
    if (b.contains("level")) cfg.ci_level = num(b.at("level"), "bootstrap.level");
    if (!(cfg.ci_level > 0.0 && cfg.ci_level < 1.0))
      throw UserError("config: field 'bootstrap.level' must be in (0,1)");
    if (b.contains("regenerate_covariates")) {
      if (!b.at("regenerate_covariates").is_boolean())
        throw UserError("config: field 'bootstrap.regenerate_covariates' must be a boolean");
      cfg.regenerate_covariates = b.at("regenerate_covariates").get<bool>();
    }
  }

  if (j.contains("abc")) {
    const json& a = j.at("abc");
    if (a.contains("epsilon")) cfg.abc_epsilon = num(a.at("epsilon"), "abc.epsilon");
    if (!(cfg.abc_epsilon > 0.0)) throw UserError("config: field 'abc.epsilon' must be > 0");
    if (a.contains("n_accept"))
      cfg.abc_n_accept = static_cast<int>(integer(a.at("n_accept"), "abc.n_accept"));
    if (cfg.abc_n_accept < 1) throw UserError("config: field 'abc.n_accept' must be >= 1");
    if (a.contains("max_trials")) cfg.abc_max_trials = integer(a.at("max_trials"), "abc.max_trials");
  }

  if (j.contains("gibbs")) {
    const json& g = j.at("gibbs");
    if (g.contains("iters")) cfg.gibbs_iters = integer(g.at("iters"), "gibbs.iters");
    if (cfg.gibbs_iters < 1) throw UserError("config: field 'gibbs.iters' must be >= 1");
    if (g.contains("thin")) cfg.gibbs_thin = static_cast<int>(integer(g.at("thin"), "gibbs.thin"));
    if (cfg.gibbs_thin < 1) throw UserError("config: field 'gibbs.thin' must be >= 1");
    if (g.contains("prior_mean")) cfg.gibbs_prior_mean = num(g.at("prior_mean"), "gibbs.prior_mean");
    if (g.contains("prior_sd")) cfg.gibbs_prior_sd = num(g.at("prior_sd"), "gibbs.prior_sd");
    if (!(cfg.gibbs_prior_sd > 0.0)) throw UserError("config: field 'gibbs.prior_sd' must be > 0");
    if (g.contains("init")) cfg.gibbs_init = num(g.at("init"), "gibbs.init");
  }

  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UserError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  // Manifests embed the resolved config; accept them directly.
  if (j.contains("config") && j.contains("subcommand")) return parse_config(j.at("config"));
  return parse_config(j);
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["model"] = model_to_json(cfg.model);
  j["grid"] = {{"t_end", cfg.grid.t_end}, {"n_steps", cfg.grid.n_steps}};
  j["n_subjects"] = cfg.n_subjects;
  if (cfg.x0s.size() == 1)
    j["x0"] = cfg.x0s.front();
  else
    j["x0"] = cfg.x0s;
  j["covariate_sim"] = json::array();
  for (const CovariateSimSpec& cs : cfg.covariate_sim)
    j["covariate_sim"].push_back({{"xi_mean", cs.xi_mean}, {"xi_sd", cs.xi_sd}, {"z0", cs.z0}});
  if (cfg.theta_true.size() > 0)
    j["theta_true"] =
        std::vector<double>(cfg.theta_true.data(), cfg.theta_true.data() + cfg.theta_true.size());
  if (cfg.theta_init.size() > 0)
    j["theta_init"] =
        std::vector<double>(cfg.theta_init.data(), cfg.theta_init.data() + cfg.theta_init.size());
  j["seed"] = cfg.seed;
  j["fit"] = {{"tol", cfg.fit_tol}};
  j["bootstrap"] = {{"B", cfg.bootstrap_B},
                    {"level", cfg.ci_level},
                    {"regenerate_covariates", cfg.regenerate_covariates}};
  j["abc"] = {{"epsilon", cfg.abc_epsilon},
              {"n_accept", cfg.abc_n_accept},
              {"max_trials", cfg.abc_max_trials}};
  j["gibbs"] = {{"iters", cfg.gibbs_iters},
                {"thin", cfg.gibbs_thin},
                {"prior_mean", cfg.gibbs_prior_mean},
                {"prior_sd", cfg.gibbs_prior_sd},
                {"init", cfg.gibbs_init}};
  return j;
}

REParams parse_re_params(const json& j) {
  REParams p;
  p.mu = vec(require(j, "mu", ""), "mu");
  const json& sig = require(j, "Sigma", "");
  if (!sig.is_array() || sig.empty()) throw UserError("config: field 'Sigma' must be a matrix");
  p.Sigma.resize(static_cast<long>(sig.size()), static_cast<long>(sig.size()));
  for (size_t r = 0; r < sig.size(); ++r) {
    const VectorXd row = vec(sig[r], "Sigma");
    if (row.size() != p.Sigma.cols()) throw UserError("config: field 'Sigma' must be square");
    p.Sigma.row(static_cast<long>(r)) = row.transpose();
  }
  p.beta = j.contains("beta") ? vec(j.at("beta"), "beta") : VectorXd(0);
  return p;
}

REParams load_re_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UserError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_re_params(j);
}

// ---------------------------------------------------------------------------
// Output writers

void write_text(const std::string& path, const std::string& body) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write '" + path + "'");
  out << body;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json fit_to_json(const MLEResult& fit, std::uint64_t seed) {
  json j;
  j["theta_hat"] = std::vector<double>(fit.theta_hat.value.data(),
                                       fit.theta_hat.value.data() + fit.theta_hat.value.size());
  j["names"] = fit.theta_hat.names;
  j["converged"] = fit.converged;
  j["sweeps"] = fit.sweeps;
  j["final_move"] = fit.final_move;
  j["loglik_trace"] = fit.loglik_trace;
  j["flat_updates"] = fit.flat_updates;
  j["clamped_updates"] = fit.clamped_updates;
  j["seed"] = seed;
  return j;
}

void write_bootstrap_replicates_csv(const std::string& path, const BootstrapDist& dist) {
  std::ostringstream out;
  out << "replicate";
  for (const std::string& n : dist.source.names) out << ',' << n;
  out << ",converged\n";
  for (size_t b = 0; b < dist.draws.size(); ++b) {
    out << b;
    for (long j = 0; j < dist.draws[b].size(); ++j) out << ',' << fmt(dist.draws[b](j));
    out << ',' << (dist.converged[b] ? 1 : 0) << "\n";
  }
  write_text(path, out.str());
}

void write_chain_csv(const std::string& path, const ChainResult& chain) {
  std::ostringstream out;
  out << "draw";
  for (const std::string& n : chain.coord_names) out << ',' << n;
  out << "\n";
  for (size_t t = 0; t < chain.draws.size(); ++t) {
    out << t;
    for (long j = 0; j < chain.draws[t].size(); ++j) out << ',' << fmt(chain.draws[t](j));
    out << "\n";
  }
  write_text(path, out.str());
}

void write_diagnostics_csv(const std::string& path, const ChainDiagnostics& diag,
                           const std::vector<std::string>& names) {
  std::ostringstream out;
  out << "coordinate,mean,variance,ess,degenerate";
  for (int lag = 1; lag <= 50; ++lag) out << ",acf" << lag;
  out << "\n";
  for (size_t j = 0; j < diag.coords.size(); ++j) {
    const CoordinateDiagnostics& c = diag.coords[j];
    out << (j < names.size() ? names[j] : "theta" + std::to_string(j + 1)) << ',' << fmt(c.mean)
        << ',' << fmt(c.variance) << ',' << fmt(c.ess) << ',' << (c.degenerate ? 1 : 0);
    for (double a : c.acf) out << ',' << fmt(a);
    out << "\n";
  }
  write_text(path, out.str());
}

void write_girsanov_csv(const std::string& path, const std::vector<GirsanovStats>& stats) {
  std::ostringstream out;
  out << "subject,U,V\n";
  for (size_t i = 0; i < stats.size(); ++i)
    out << i << ',' << fmt(stats[i].U) << ',' << fmt(stats[i].V) << "\n";
  write_text(path, out.str());
}

void write_histogram_csv(const std::string& path, const stats::Histogram& hist) {
  std::ostringstream out;
  out << "bin_left,bin_right,count\n";
  for (size_t b = 0; b < hist.count.size(); ++b)
    out << fmt(hist.bin_left[b]) << ',' << fmt(hist.bin_right[b]) << ',' << hist.count[b] << "\n";
  write_text(path, out.str());
}

void write_qq_csv(const std::string& path, std::vector<double> sample) {
  std::sort(sample.begin(), sample.end());
  std::ostringstream out;
  out << "theoretical_quantile,empirical_quantile\n";
  const auto n = static_cast<double>(sample.size());
  for (size_t i = 0; i < sample.size(); ++i)
    out << fmt(stats::normal_quantile((static_cast<double>(i) + 0.5) / n)) << ','
        << fmt(sample[i]) << "\n";
  write_text(path, out.str());
}

json experiment_report_to_json(const ExperimentReport& report) {
  json j;
  j["experiment"] = report.experiment;
  j["coordinates"] = report.coord_names;
  j["seed"] = report.seed;
  j["reps"] = report.reps;
  j["runtime_sec"] = report.runtime_sec;
  if (!report.rows.empty()) {
    j["rows"] = json::array();
    for (const ConsistencyRow& r : report.rows) {
      json row;
      row["n"] = r.n;
      row["mae"] = std::vector<double>(r.mae.data(), r.mae.data() + r.mae.size());
      row["rmse"] = std::vector<double>(r.rmse.data(), r.rmse.data() + r.rmse.size());
      row["failures"] = r.failures;
      j["rows"].push_back(row);
    }
  }
  if (report.ks_statistic.size() > 0) {
    j["ks_statistic"] = std::vector<double>(
        report.ks_statistic.data(), report.ks_statistic.data() + report.ks_statistic.size());
    j["ks_pvalue"] = std::vector<double>(report.ks_pvalue.data(),
                                         report.ks_pvalue.data() + report.ks_pvalue.size());
    j["sample_mean"] = std::vector<double>(report.sample_mean.data(),
                                           report.sample_mean.data() + report.sample_mean.size());
    j["sample_variance"] =
        std::vector<double>(report.sample_variance.data(),
                            report.sample_variance.data() + report.sample_variance.size());
    j["mardia_skewness"] = report.mardia_skewness;
    j["mardia_kurtosis"] = report.mardia_kurtosis;
  }
  j["info_fallback_rate"] = report.info_fallback_rate;
  j["flagged"] = report.flagged;
  j["underpowered"] = report.underpowered;
  j["non_normal"] = report.non_normal;
  return j;
}

void write_standardized_csv(const std::string& path, const ExperimentReport& report) {
  std::ostringstream out;
  out << "replicate";
  for (const std::string& n : report.coord_names) out << ",z_" << n;
  out << "\n";
  for (long r = 0; r < report.standardized.rows(); ++r) {
    out << r;
    for (long j = 0; j < report.standardized.cols(); ++j)
      out << ',' << fmt(report.standardized(r, j));
    out << "\n";
  }
  write_text(path, out.str());
}

// ---------------------------------------------------------------------------
// Manifest

std::string hash_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(const std::string& dir, const std::string& subcommand, const json& args,
                    const json& config, std::uint64_t seed, int threads,
                    const std::vector<std::string>& outputs, double runtime_sec) {
  json j;
  j["tool"] = "sdecov";
  j["version"] = "0.1.0";
  j["subcommand"] = subcommand;
  j["args"] = args;
  j["config"] = config;
  j["config_hash"] = hash_hex(config.dump());
  j["seed"] = seed;
  j["threads"] = threads;
  j["outputs"] = outputs;
  j["runtime_sec"] = runtime_sec;
  write_json((fs::path(dir) / "manifest.json").string(), j);
}

json load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UserError("manifest: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UserError("manifest: '" + path + "' is not valid JSON: " + e.what());
  }
  return j;
}

}  // namespace sdecov::io
