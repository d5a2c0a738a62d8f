#include "sdecov/model.hpp"

#include <algorithm>

namespace sdecov {

void ModelSpec::finalize() {
  const int d = dim();
  if (theta_lower.size() != d) theta_lower = VectorXd::Constant(d, -50.0);
  if (theta_upper.size() != d) theta_upper = VectorXd::Constant(d, 50.0);
}

std::vector<std::string> ModelSpec::coordinate_names() const {
  std::vector<std::string> names;
  for (int j = 0; j < drift.n_beta(); ++j) names.push_back("beta" + std::to_string(j + 1));
  for (int l = 0; l <= drift.p(); ++l) names.push_back("xi" + std::to_string(l));
  return names;
}

ThetaVector ModelSpec::make_theta(const VectorXd& values) const {
  if (values.size() != dim())
    throw UserError("theta has " + std::to_string(values.size()) + " coordinates, model needs " +
                    std::to_string(dim()));
  ThetaVector t;
  t.value = values;
  t.lower = theta_lower.size() == dim() ? theta_lower : VectorXd::Constant(dim(), -50.0);
  t.upper = theta_upper.size() == dim() ? theta_upper : VectorXd::Constant(dim(), 50.0);
  t.names = coordinate_names();
  t.n_beta = drift.n_beta();
  t.n_xi = drift.p() + 1;
  return t;
}

MatrixXd drift_features(const DriftSpec& drift, const CovariatePath& cov, long* clamped) {
  const int p = drift.p();
  if (cov.n_covariates() != p)
    throw UserError("covariate path has " + std::to_string(cov.n_covariates()) +
                    " series, drift declares " + std::to_string(p));
  MatrixXd feat(p + 1, cov.grid.knots());
  feat.row(0).setOnes();
  long n_clamped = 0;
  for (int l = 0; l < p; ++l) {
    const CovariateSpec& cs = drift.covariates[static_cast<size_t>(l)];
    for (int k = 0; k < cov.grid.knots(); ++k) {
      double z = cov.z(l, k);
      if (z < cs.lo || z > cs.hi) {
        z = std::min(std::max(z, cs.lo), cs.hi);
        ++n_clamped;
      }
      feat(l + 1, k) = cs.g(z);
    }
  }
  if (clamped) *clamped += n_clamped;
  return feat;
}

double drift_value(const DriftSpec& drift, const VectorXd& beta, const VectorXd& xi,
                   const Eigen::Ref<const VectorXd>& feature_col, double x) {
  return xi.dot(feature_col) * drift.b(beta, x);
}

Panel Panel::assemble(ModelSpec spec, std::vector<SubjectPath> paths,
                      std::vector<CovariatePath> covs) {
  spec.finalize();
  if (paths.size() != covs.size())
    throw UserError("panel assembly: " + std::to_string(paths.size()) + " paths vs " +
                    std::to_string(covs.size()) + " covariate paths");
  if (paths.empty()) throw UserError("panel assembly: need at least one subject");
  if (spec.diffusions.size() != 1 && spec.diffusions.size() != paths.size())
    throw UserError("panel assembly: diffusion list must have 1 or n entries");
  Panel panel;
  panel.spec = spec;
  panel.subjects.reserve(paths.size());
  for (size_t i = 0; i < paths.size(); ++i) {
    if (!(paths[i].grid == covs[i].grid))
      throw UserError("panel assembly: grid mismatch for subject " +
                      std::to_string(paths[i].subject));
    Subject s;
    s.path = std::move(paths[i]);
    s.cov = std::move(covs[i]);
    s.features = drift_features(spec.drift, s.cov, &panel.clamped_values);
    panel.subjects.push_back(std::move(s));
  }
  return panel;
}

std::vector<std::pair<std::string, double>> identified_products(const DriftSpec& drift,
                                                                const ThetaVector& theta) {
  std::vector<std::pair<std::string, double>> out;
  if (!drift.scale_invariant()) return out;
  for (int l = 0; l < theta.n_xi; ++l)
    for (int j = 0; j < theta.n_beta; ++j)
      out.emplace_back("xi" + std::to_string(l) + "*beta" + std::to_string(j + 1),
                       theta.xi()(l) * theta.beta()(j));
  return out;
}

ModelSpec make_product_model(double sigma) {
  ModelSpec spec;
  spec.drift.family = BFamily::Affine;
  spec.drift.covariates = {CovariateSpec{}};
  spec.diffusions = {DiffusionSpec{.kind = DiffusionSpec::Kind::Constant, .sigma = sigma}};
  spec.finalize();
  return spec;
}

ModelSpec make_identifiable_model(double sigma, int n_covariates) {
  ModelSpec spec;
  spec.drift.family = BFamily::Linear;
  spec.drift.covariates.assign(static_cast<size_t>(n_covariates), CovariateSpec{});
  spec.diffusions = {DiffusionSpec{.kind = DiffusionSpec::Kind::Constant, .sigma = sigma}};
  spec.finalize();
  return spec;
}

ModelSpec make_ou_model(double sigma) {
  ModelSpec spec;
  spec.drift.family = BFamily::NegLinear;
  spec.diffusions = {DiffusionSpec{.kind = DiffusionSpec::Kind::Constant, .sigma = sigma}};
  spec.finalize();
  return spec;
}

ModelSpec make_nse_like_model(const std::vector<DiffusionSpec>& diffusions) {
  ModelSpec spec;
  spec.drift.family = BFamily::Affine;
  spec.drift.covariates.assign(3, CovariateSpec{});
  spec.diffusions = diffusions;
  spec.finalize();
  return spec;
}

}  // namespace sdecov
