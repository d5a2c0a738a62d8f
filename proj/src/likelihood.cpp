#include "sdecov/likelihood.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace sdecov {

namespace {

// Neumaier compensated accumulator: grid sums stay accurate to a few ulp even
// when individual terms are large, which the ascent and stationarity
// tolerances (1e-12 / 1e-6, absolute) rely on.
struct KahanSum {
  double s = 0.0;
  double c = 0.0;

  void add(double v) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }

  double value() const { return s + c; }
};

double sigma_sq_at(const DiffusionSpec& diffusion, double x, int subject, int k) {
  if (diffusion.requires_positive_state() && x <= 0.0)
    throw NumericalError("domain error: CKLS diffusion needs positive state, subject " +
                         std::to_string(subject) + " at step " + std::to_string(k));
  const double s = diffusion(x);
  if (s == 0.0) throw SingularDiffusionError(subject, k);
  return s * s;
}

GirsanovStats girsanov_kernel(const MatrixXd& feat, const VectorXd& x, const TimeGrid& grid,
                              const DriftSpec& drift, const DiffusionSpec& diffusion,
                              const VectorXd& beta, const VectorXd& xi, int subject) {
  const double step = grid.step();
  KahanSum u, v;
  for (int k = 0; k < grid.n_steps; ++k) {
    const double s2 = sigma_sq_at(diffusion, x(k), subject, k);
    const double mu = xi.dot(feat.col(k)) * drift.b(beta, x(k));
    u.add(mu / s2 * (x(k + 1) - x(k)));
    v.add(mu * mu / s2 * step);
  }
  const GirsanovStats stats{u.value(), v.value()};
  if (!std::isfinite(stats.U) || !std::isfinite(stats.V))
    throw NumericalError("non-finite Girsanov statistics for subject " + std::to_string(subject));
  return stats;
}

}  // namespace

GirsanovStats girsanov_stats(const Subject& subject, const DriftSpec& drift,
                             const DiffusionSpec& diffusion, const ThetaVector& theta) {
  return girsanov_kernel(subject.features, subject.path.x, subject.path.grid, drift, diffusion,
                         theta.beta(), theta.xi(), subject.path.subject);
}

GirsanovStats girsanov_stats(const SubjectPath& path, const CovariatePath& cov,
                             const DriftSpec& drift, const DiffusionSpec& diffusion,
                             const ThetaVector& theta) {
  if (!(path.grid == cov.grid))
    throw UserError("girsanov_stats: path and covariate grids differ for subject " +
                    std::to_string(path.subject));
  const MatrixXd feat = drift_features(drift, cov);
  return girsanov_kernel(feat, path.x, path.grid, drift, diffusion, theta.beta(), theta.xi(),
                         path.subject);
}

std::vector<GirsanovStats> girsanov_stats(const Panel& panel, const ThetaVector& theta) {
  std::vector<GirsanovStats> out;
  out.reserve(panel.subjects.size());
  for (int i = 0; i < panel.n(); ++i)
    out.push_back(girsanov_stats(panel.subjects[static_cast<size_t>(i)], panel.spec.drift,
                                 panel.spec.diffusion_for(i), theta));
  return out;
}

double log_likelihood(const Panel& panel, const ThetaVector& theta) {
  KahanSum ll;
  for (int i = 0; i < panel.n(); ++i) {
    const GirsanovStats s = girsanov_stats(panel.subjects[static_cast<size_t>(i)],
                                           panel.spec.drift, panel.spec.diffusion_for(i), theta);
    ll.add(s.U);
    ll.add(-s.V / 2.0);
  }
  return ll.value();
}

CoordinateQuadratic coordinate_quadratic(const Panel& panel, const ThetaVector& theta, int j) {
  const DriftSpec& drift = panel.spec.drift;
  // The decomposition reads the drift at theta_j = 0 and theta_j = 1; it is
  // exact only when the drift is affine in coordinate j.
  const ThetaVector theta_zero = theta.with_coordinate(j, 0.0);
  const ThetaVector theta_one = theta.with_coordinate(j, 1.0);
  const VectorXd beta0 = theta_zero.beta(), xi0 = theta_zero.xi();
  const VectorXd beta1 = theta_one.beta(), xi1 = theta_one.xi();

  KahanSum a, c, d;
  for (int i = 0; i < panel.n(); ++i) {
    const Subject& s = panel.subjects[static_cast<size_t>(i)];
    const DiffusionSpec& diffusion = panel.spec.diffusion_for(i);
    const double step = s.path.grid.step();
    for (int k = 0; k < s.path.grid.n_steps; ++k) {
      const double x = s.path.x(k);
      const double s2 = sigma_sq_at(diffusion, x, i, k);
      const double base = drift_value(drift, beta0, xi0, s.features.col(k), x);
      const double slope = drift_value(drift, beta1, xi1, s.features.col(k), x) - base;
      a.add(slope / s2 * (s.path.x(k + 1) - x));
      c.add(slope * slope / s2 * step);
      d.add(2.0 * base * slope / s2 * step);
    }
  }
  const CoordinateQuadratic q{a.value(), c.value(), d.value()};
  if (!std::isfinite(q.a) || !std::isfinite(q.c) || !std::isfinite(q.d))
    throw NumericalError("non-finite coordinate statistics for coordinate " + std::to_string(j));
  return q;
}

ScoreResult score(const Panel& panel, const ThetaVector& theta) {
  const int d = theta.dim();
  ScoreResult result;
  result.gradient.resize(d);
  result.analytic.assign(static_cast<size_t>(d), true);
  for (int j = 0; j < d; ++j)
    if (!theta.interior(j, 1e-12)) result.boundary_warning = true;

  for (int j = 0; j < d; ++j) {
    if (panel.spec.drift.affine_in(j)) {
      const CoordinateQuadratic q = coordinate_quadratic(panel, theta, j);
      result.gradient(j) = q.derivative_at(theta.value(j));
    } else {
      result.analytic[static_cast<size_t>(j)] = false;
      const double h = 1e-6 * std::max(1.0, std::abs(theta.value(j)));
      const double up = log_likelihood(panel, theta.with_coordinate(j, theta.value(j) + h));
      const double dn = log_likelihood(panel, theta.with_coordinate(j, theta.value(j) - h));
      result.gradient(j) = (up - dn) / (2.0 * h);
    }
  }
  return result;
}

InformationMatrix observed_information(const Panel& panel, const ThetaVector& theta_hat,
                                       bool mle_exists) {
  const int d = theta_hat.dim();
  InformationMatrix info;
  info.neg_hessian.setZero(d, d);

  MatrixXd hess(d, d);
  for (int j = 0; j < d; ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta_hat.value(j)));
    const VectorXd up =
        score(panel, theta_hat.with_coordinate(j, theta_hat.value(j) + h)).gradient;
    const VectorXd dn =
        score(panel, theta_hat.with_coordinate(j, theta_hat.value(j) - h)).gradient;
    hess.col(j) = (up - dn) / (2.0 * h);
  }
  info.neg_hessian = -0.5 * (hess + hess.transpose());

  bool ok = mle_exists && info.neg_hessian.allFinite();
  if (ok) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(info.neg_hessian);
    const double max_abs = eig.eigenvalues().cwiseAbs().maxCoeff();
    const double tol = 1e-8 * std::max(1.0, max_abs);
    if (eig.eigenvalues().minCoeff() <= tol) ok = false;
  }
  info.fallback = !ok;
  info.matrix = ok ? info.neg_hessian : MatrixXd::Identity(d, d);
  return info;
}

MatrixXd information_sqrt(const InformationMatrix& info) {
  if (info.fallback) return MatrixXd::Identity(info.matrix.rows(), info.matrix.cols());
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(info.matrix);
  return eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace sdecov
