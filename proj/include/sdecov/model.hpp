#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "sdecov/types.hpp"

namespace sdecov {

/// Scalar transform g_l applied to a covariate, defined on a compact range.
/// Values outside [lo, hi] are clamped at panel assembly (with a counter).
struct CovariateSpec {
  enum class Transform { Identity, Tanh };
  Transform transform = Transform::Identity;
  double lo = -1e12;
  double hi = 1e12;

  double g(double z) const {
    return transform == Transform::Tanh ? std::tanh(z) : z;
  }
};

/// Drift factor family b_beta(x). Fixed families have q = 0 free parameters.
enum class BFamily {
  Constant,     // b(x) = 1
  Linear,       // b(x) = x
  NegLinear,    // b(x) = -x
  Affine,       // b(x) = beta_1 + beta_2 x
  TanhAffine,   // b(x) = tanh(beta_1 + beta_2 x)   (non-affine in beta)
};

/// Drift family phi_xi(t) * b_beta(x) with phi_xi(t) = xi_0 + sum_l xi_l g_l(z_l(t)).
struct DriftSpec {
  BFamily family = BFamily::Affine;
  std::vector<CovariateSpec> covariates;  // size p

  int p() const { return static_cast<int>(covariates.size()); }
  int n_beta() const {
    return (family == BFamily::Affine || family == BFamily::TanhAffine) ? 2 : 0;
  }
  int dim() const { return n_beta() + p() + 1; }

  /// True when the drift is affine in coordinate j with the others held fixed.
  /// The xi block is always affine; the beta block is affine except for TanhAffine.
  bool affine_in(int j) const {
    if (j >= n_beta()) return true;
    return family != BFamily::TanhAffine;
  }

  /// True when scaling (xi, beta) -> (c xi, beta / c) leaves the drift
  /// unchanged, i.e. the coordinates are identified only up to products.
  bool scale_invariant() const { return family == BFamily::Affine; }

  double b(const VectorXd& beta, double x) const {
    switch (family) {
      case BFamily::Constant: return 1.0;
      case BFamily::Linear: return x;
      case BFamily::NegLinear: return -x;
      case BFamily::Affine: return beta(0) + beta(1) * x;
      case BFamily::TanhAffine: return std::tanh(beta(0) + beta(1) * x);
    }
    return 0.0;
  }
};

/// Diffusion coefficient sigma(x); parameters are fixed, never estimated.
struct DiffusionSpec {
  enum class Kind { Constant, CklsPower };
  Kind kind = Kind::Constant;
  double sigma = 1.0;  // Constant
  double A = 1.0;      // CKLS: A x^B, A > 0, B >= 0
  double B = 0.0;

  bool requires_positive_state() const {
    return kind == Kind::CklsPower && B > 0.0;
  }

  double operator()(double x) const {
    if (kind == Kind::Constant) return sigma;
    return A * std::pow(x, B);
  }
};

/// Model specification shared by a panel: drift family, diffusion (one shared
/// entry or one per subject), and the compact parameter box.
struct ModelSpec {
  DriftSpec drift;
  std::vector<DiffusionSpec> diffusions{DiffusionSpec{}};
  VectorXd theta_lower;  // dim() entries; defaulted to +/-50 by finalize()
  VectorXd theta_upper;

  int dim() const { return drift.dim(); }

  const DiffusionSpec& diffusion_for(int subject) const {
    return diffusions.size() == 1 ? diffusions.front()
                                  : diffusions.at(static_cast<size_t>(subject));
  }

  /// Fill default bounds/names; call after manual construction.
  void finalize();

  std::vector<std::string> coordinate_names() const;

  ThetaVector make_theta(const VectorXd& values) const;
};

/// One subject of a panel. `features` caches the drift regressors
/// (1, g_1(z_1(t_k)), ..., g_p(z_p(t_k))) after range clamping.
struct Subject {
  SubjectPath path;
  CovariatePath cov;
  MatrixXd features;  // (p+1) x knots
};

struct Panel {
  ModelSpec spec;
  std::vector<Subject> subjects;
  long clamped_values = 0;  // covariate samples moved onto their compact range

  int n() const { return static_cast<int>(subjects.size()); }

  static Panel assemble(ModelSpec spec, std::vector<SubjectPath> paths,
                        std::vector<CovariatePath> covs);
};

/// Transformed + clamped drift regressors for one subject; row 0 is all ones.
MatrixXd drift_features(const DriftSpec& drift, const CovariatePath& cov,
                        long* clamped = nullptr);

double drift_value(const DriftSpec& drift, const VectorXd& beta, const VectorXd& xi,
                   const Eigen::Ref<const VectorXd>& feature_col, double x);

/// For scale-invariant families the likelihood identifies only the pairwise
/// products xi_a * beta_b; returns them with stable names.
std::vector<std::pair<std::string, double>> identified_products(const DriftSpec& drift,
                                                                const ThetaVector& theta);

// Ready-made specifications used by the experiment harness, the CLI presets
// and the test suites.

/// Product drift (xi_0 + xi_1 z)(beta_1 + beta_2 x), constant sigma.
ModelSpec make_product_model(double sigma = 1.0);

/// Identifiable reduced drift (xi_0 + xi_1 z) * x, constant sigma.
ModelSpec make_identifiable_model(double sigma = 1.0, int n_covariates = 1);

/// Mean-reverting reduction: drift xi_0 * (-x), constant sigma.
ModelSpec make_ou_model(double sigma = 1.0);

/// Six-parameter product drift with three covariates and per-subject CKLS
/// diffusions (A_i x^{B_i}).
ModelSpec make_nse_like_model(const std::vector<DiffusionSpec>& diffusions);

}  // namespace sdecov
