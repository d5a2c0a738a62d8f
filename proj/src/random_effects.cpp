#include "sdecov/random_effects.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace sdecov {

namespace {

double sigma_sq_or_throw(const DiffusionSpec& diffusion, double x, int subject, int k) {
  const double s = diffusion(x);
  if (s == 0.0 || !std::isfinite(s)) throw SingularDiffusionError(subject, k);
  return s * s;
}

}  // namespace

RESuffStats re_suff_stats(const Subject& subject, const DriftSpec& drift,
                          const DiffusionSpec& diffusion, const VectorXd& beta) {
  const int p = drift.p();
  const TimeGrid& grid = subject.path.grid;
  const double step = grid.step();
  RESuffStats s;
  s.A.setZero(p + 1);
  s.B.setZero(p + 1, p + 1);
  VectorXd m(p + 1);
  for (int k = 0; k < grid.n_steps; ++k) {
    const double x = subject.path.x(k);
    const double s2 = sigma_sq_or_throw(diffusion, x, subject.path.subject, k);
    const double b = drift.b(beta, x);
    m(0) = 1.0;
    for (int l = 1; l <= p; ++l) m(l) = subject.features(l, k) * b;
    s.A += m * ((subject.path.x(k + 1) - x) / s2);
    s.B.noalias() += m * m.transpose() * (step / s2);
  }
  if (!s.A.allFinite() || !s.B.allFinite())
    throw NumericalError("non-finite random-effects statistics for subject " +
                         std::to_string(subject.path.subject));
  return s;
}

RESuffStats re_suff_stats(const SubjectPath& path, const CovariatePath& cov,
                          const DriftSpec& drift, const DiffusionSpec& diffusion,
                          const VectorXd& beta) {
  if (!(path.grid == cov.grid))
    throw UserError("re_suff_stats: path and covariate grids differ for subject " +
                    std::to_string(path.subject));
  Subject s;
  s.path = path;
  s.cov = cov;
  s.features = drift_features(drift, cov);
  return re_suff_stats(s, drift, diffusion, beta);
}

void REParams::validate() const {
  const auto d = mu.size();
  if (Sigma.rows() != d || Sigma.cols() != d)
    throw UserError("random effects: Sigma must be " + std::to_string(d) + "x" +
                    std::to_string(d));
  if (!Sigma.isApprox(Sigma.transpose(), 1e-10))
    throw UserError("random effects: Sigma must be symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(Sigma);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw UserError("random effects: Sigma must be positive definite");
}

double re_subject_loglik_direct(const RESuffStats& s, const REParams& params) {
  const auto d = s.A.size();
  const MatrixXd I = MatrixXd::Identity(d, d);
  const MatrixXd IBS = I + s.B * params.Sigma;
  Eigen::PartialPivLU<MatrixXd> lu(IBS);
  const double det = lu.determinant();
  if (!(det > 0.0)) throw NumericalError("random effects: det(I + B Sigma) <= 0");
  const VectorXd binv_a = s.B.ldlt().solve(s.A);
  const VectorXd resid = params.mu - binv_a;
  const VectorXd r = lu.solve(s.B * resid);  // (I + B Sigma)^{-1} B (mu - B^{-1} A)
  return -0.5 * std::log(det) - 0.5 * resid.dot(r) + 0.5 * s.A.dot(binv_a);
}

double re_subject_loglik_stable(const RESuffStats& s, const REParams& params) {
  const auto d = s.A.size();
  const MatrixXd I = MatrixXd::Identity(d, d);
  const MatrixXd IBS = I + s.B * params.Sigma;
  Eigen::PartialPivLU<MatrixXd> lu(IBS);
  const double det = lu.determinant();
  if (!(det > 0.0)) throw NumericalError("random effects: det(I + B Sigma) <= 0");
  const VectorXd w = s.A - s.B * params.mu;
  // (I + Sigma B)^{-1} Sigma = Sigma (I + B Sigma)^{-1}
  const VectorXd r = params.Sigma * lu.solve(w);
  return -0.5 * std::log(det) + params.mu.dot(s.A) - 0.5 * params.mu.dot(s.B * params.mu) +
         0.5 * w.dot(r);
}

double re_subject_loglik(const RESuffStats& s, const REParams& params) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s.B);
  const double max_eig = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (eig.eigenvalues().minCoeff() > 1e-10 * std::max(1.0, max_eig))
    return re_subject_loglik_direct(s, params);
  return re_subject_loglik_stable(s, params);
}

std::vector<double> re_subject_terms(const Panel& panel, const REParams& params) {
  params.validate();
  if (params.mu.size() != panel.spec.drift.p() + 1)
    throw UserError("random effects: mu must have p+1 = " +
                    std::to_string(panel.spec.drift.p() + 1) + " entries");
  if (params.beta.size() != panel.spec.drift.n_beta())
    throw UserError("random effects: beta must have " +
                    std::to_string(panel.spec.drift.n_beta()) + " entries");
  std::vector<double> terms;
  terms.reserve(panel.subjects.size());
  for (int i = 0; i < panel.n(); ++i) {
    const RESuffStats s = re_suff_stats(panel.subjects[static_cast<size_t>(i)], panel.spec.drift,
                                        panel.spec.diffusion_for(i), params.beta);
    terms.push_back(re_subject_loglik(s, params));
  }
  return terms;
}

double re_marginal_loglik(const Panel& panel, const REParams& params) {
  double ll = 0.0;
  for (double t : re_subject_terms(panel, params)) ll += t;
  return ll;
}

namespace {

// Pack (mu, log-Cholesky(Sigma), beta) into one coordinate vector.
struct REPacking {
  int d = 0;  // p+1
  int q = 0;

  int size() const { return d + d * (d + 1) / 2 + q; }

  VectorXd pack(const REParams& p) const {
    const Eigen::LLT<MatrixXd> llt(p.Sigma);
    MatrixXd L = llt.matrixL();
    VectorXd v(size());
    v.head(d) = p.mu;
    int idx = d;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j)
        v(idx++) = (i == j) ? std::log(L(i, j)) : L(i, j);
    v.tail(q) = p.beta;
    return v;
  }

  REParams unpack(const VectorXd& v) const {
    REParams p;
    p.mu = v.head(d);
    MatrixXd L = MatrixXd::Zero(d, d);
    int idx = d;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j) {
        const double x = v(idx++);
        L(i, j) = (i == j) ? std::exp(x) : x;
      }
    p.Sigma = L * L.transpose();
    p.beta = v.tail(q);
    return p;
  }
};

}  // namespace

REFitResult re_fit_experimental(const Panel& panel, REParams init, double tol, int max_sweeps) {
  init.validate();
  REPacking packing{static_cast<int>(init.mu.size()),
                    static_cast<int>(init.beta.size())};
  const int m = packing.size();
  VectorXd lo = VectorXd::Constant(m, -20.0);
  VectorXd hi = VectorXd::Constant(m, 20.0);
  // keep log-diagonal entries of the Cholesky factor in a sane range
  int idx = packing.d;
  for (int i = 0; i < packing.d; ++i)
    for (int j = 0; j <= i; ++j) {
      if (i == j) {
        lo(idx) = -12.0;
        hi(idx) = 6.0;
      }
      ++idx;
    }

  auto objective = [&](const VectorXd& v) {
    try {
      return re_marginal_loglik(panel, packing.unpack(v));
    } catch (const NumericalError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };

  const CoordinatewiseResult r =
      maximize_coordinatewise(objective, packing.pack(init), lo, hi, tol, max_sweeps);
  REFitResult out;
  out.params = packing.unpack(r.argmax);
  out.loglik = r.value;
  out.converged = r.converged;
  out.sweeps = r.sweeps;
  return out;
}

}  // namespace sdecov
