#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sdecov/errors.hpp"

namespace sdecov {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Equispaced grid on [0, t_end] with knots t_k = k * step, k = 0..n_steps.
struct TimeGrid {
  double t_end = 1.0;
  int n_steps = 1;

  double step() const { return t_end / n_steps; }
  int knots() const { return n_steps + 1; }
  double t(int k) const { return step() * k; }
  bool valid() const { return t_end > 0.0 && n_steps >= 1; }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

/// Covariate trajectories z_l(t_k) for one subject; one row per covariate.
struct CovariatePath {
  int subject = 0;
  TimeGrid grid;
  MatrixXd z;  // p x knots; p may be 0

  int n_covariates() const { return static_cast<int>(z.rows()); }
};

/// One observed/simulated state path on its grid.
struct SubjectPath {
  int subject = 0;
  double x0 = 0.0;
  TimeGrid grid;
  VectorXd x;  // knots() values, x(0) == x0
};

/// Full parameter vector theta = (beta_1..beta_q, xi_0..xi_p) with
/// per-coordinate closed bounds (compact parameter space).
struct ThetaVector {
  VectorXd value;
  VectorXd lower;
  VectorXd upper;
  std::vector<std::string> names;
  int n_beta = 0;  // q
  int n_xi = 0;    // p + 1

  int dim() const { return static_cast<int>(value.size()); }

  Eigen::VectorBlock<const VectorXd> beta() const { return value.head(n_beta); }
  Eigen::VectorBlock<const VectorXd> xi() const { return value.tail(n_xi); }

  bool within_bounds(double tol = 0.0) const {
    for (int j = 0; j < dim(); ++j)
      if (value(j) < lower(j) - tol || value(j) > upper(j) + tol) return false;
    return true;
  }

  /// Interior test used to decide whether a stationarity check applies.
  bool interior(int j, double margin = 1e-9) const {
    return value(j) > lower(j) + margin && value(j) < upper(j) - margin;
  }

  ThetaVector with_value(const VectorXd& v) const {
    ThetaVector out = *this;
    out.value = v;
    return out;
  }

  ThetaVector with_coordinate(int j, double v) const {
    ThetaVector out = *this;
    out.value(j) = v;
    return out;
  }

  double clamp(int j, double v) const {
    return std::min(std::max(v, lower(j)), upper(j));
  }
};

}  // namespace sdecov
