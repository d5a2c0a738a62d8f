#include "sdecov/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdecov {

namespace {

// 1-D slice of the log-likelihood along coordinate j.
double slice_loglik(const Panel& panel, const ThetaVector& theta, int j, double v) {
  return log_likelihood(panel, theta.with_coordinate(j, v));
}

double slice_score(const Panel& panel, const ThetaVector& theta, int j, double v) {
  const double h = 1e-7 * std::max(1.0, std::abs(v));
  return (slice_loglik(panel, theta, j, v + h) - slice_loglik(panel, theta, j, v - h)) /
         (2.0 * h);
}

CoordinateUpdate newton_update(const Panel& panel, const ThetaVector& theta, int j) {
  constexpr double kTol = 1e-10;
  const double lo = theta.lower(j), hi = theta.upper(j);
  CoordinateUpdate out;
  out.analytic = false;

  double glo = slice_score(panel, theta, j, lo);
  double ghi = slice_score(panel, theta, j, hi);
  if (!std::isfinite(glo) || !std::isfinite(ghi))
    throw NumericalError("non-finite score for coordinate " + std::to_string(j));

  if (glo <= 0.0 && ghi <= 0.0) {
    out.value = lo;
    out.clamped = true;
  } else if (glo >= 0.0 && ghi >= 0.0) {
    out.value = hi;
    out.clamped = true;
  } else {
    // Bracket [a, b] with g(a) > 0 > g(b); Newton steps that stay inside the
    // bracket, bisection otherwise.
    double a = lo, b = hi;
    double v = std::min(std::max(theta.value(j), a), b);
    for (int it = 0; it < 200 && b - a > kTol; ++it) {
      double g = slice_score(panel, theta, j, v);
      if (!std::isfinite(g))
        throw NumericalError("non-finite score for coordinate " + std::to_string(j));
      if (g > 0.0)
        a = v;
      else
        b = v;
      const double h = 1e-5 * std::max(1.0, std::abs(v));
      const double gpp = (slice_score(panel, theta, j, v + h) - slice_score(panel, theta, j, v - h)) /
                         (2.0 * h);
      double next = (std::isfinite(gpp) && gpp < 0.0) ? v - g / gpp : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      v = next;
    }
    out.value = v;
  }

  // Safeguard the ascent property: never hand back a worse point.
  const double current = theta.value(j);
  if (slice_loglik(panel, theta, j, out.value) < slice_loglik(panel, theta, j, current)) {
    const double golden = maximize_scalar(
        [&](double v) { return slice_loglik(panel, theta, j, v); }, lo, hi, kTol);
    out.value = slice_loglik(panel, theta, j, golden) >= slice_loglik(panel, theta, j, current)
                    ? golden
                    : current;
    out.clamped = out.value == lo || out.value == hi;
  }
  return out;
}

}  // namespace

CoordinateUpdate conditional_update(const Panel& panel, const ThetaVector& theta, int j) {
  if (j < 0 || j >= theta.dim()) throw UserError("conditional_update: bad coordinate index");
  if (!panel.spec.drift.affine_in(j)) return newton_update(panel, theta, j);

  const CoordinateQuadratic q = coordinate_quadratic(panel, theta, j);
  CoordinateUpdate out;
  if (q.c <= 0.0) {
    // Flat direction: the coordinate-restricted likelihood carries no
    // curvature (reachable under the product parameterization).
    out.value = theta.value(j);
    out.flat = true;
    return out;
  }
  const double raw = q.stationary_point();
  if (!std::isfinite(raw))
    throw NumericalError("non-finite update for coordinate " + std::to_string(j));
  out.value = theta.clamp(j, raw);
  out.clamped = out.value != raw;
  return out;
}

MLEResult block_relaxation_mle(const Panel& panel, const ThetaVector& init, double tol,
                               int max_sweeps) {
  if (!init.within_bounds(1e-12)) throw UserError("block_relaxation_mle: init outside bounds");
  MLEResult result;
  result.theta_hat = init;
  result.loglik_trace.push_back(log_likelihood(panel, init));

  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    const VectorXd before = result.theta_hat.value;
    for (int j = 0; j < result.theta_hat.dim(); ++j) {
      const CoordinateUpdate u = conditional_update(panel, result.theta_hat, j);
      if (u.flat) ++result.flat_updates;
      if (u.clamped) ++result.clamped_updates;
      result.theta_hat.value(j) = u.value;
    }
    result.sweeps = sweep;
    result.final_move = (result.theta_hat.value - before).norm();
    result.loglik_trace.push_back(log_likelihood(panel, result.theta_hat));
    if (result.final_move <= tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

GridSearchResult grid_search_mle(const Panel& panel, int resolution) {
  const int d = panel.spec.dim();
  if (d > 3) throw UserError("grid_search_mle: dimension " + std::to_string(d) + " exceeds 3");
  if (resolution < 2) throw UserError("grid_search_mle: resolution must be >= 2");

  ThetaVector theta = panel.spec.make_theta(VectorXd::Zero(d));
  std::vector<double> cells(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j)
    cells[static_cast<size_t>(j)] = (theta.upper(j) - theta.lower(j)) / (resolution - 1);

  long total = 1;
  for (int j = 0; j < d; ++j) total *= resolution;

  const long outer = resolution;  // parallel over the first axis
  const long inner = total / resolution;
  std::vector<double> row_best(static_cast<size_t>(outer),
                               -std::numeric_limits<double>::infinity());
  std::vector<long> row_arg(static_cast<size_t>(outer), 0);
  std::vector<char> row_flat(static_cast<size_t>(outer), 1);

#pragma omp parallel for schedule(dynamic)
  for (long i0 = 0; i0 < outer; ++i0) {
    ThetaVector local = theta;
    double best = -std::numeric_limits<double>::infinity();
    double first = 0.0;
    long arg = 0;
    for (long rest = 0; rest < inner; ++rest) {
      long idx = rest;
      local.value(0) = theta.lower(0) + cells[0] * static_cast<double>(i0);
      for (int j = 1; j < d; ++j) {
        local.value(j) = theta.lower(j) + cells[static_cast<size_t>(j)] *
                                              static_cast<double>(idx % resolution);
        idx /= resolution;
      }
      const double ll = log_likelihood(panel, local);
      if (rest == 0)
        first = ll;
      else if (ll != first)
        row_flat[static_cast<size_t>(i0)] = 0;
      if (ll > best) {
        best = ll;
        arg = rest;
      }
    }
    row_best[static_cast<size_t>(i0)] = best;
    row_arg[static_cast<size_t>(i0)] = arg;
  }

  double best = row_best[0];
  long best_i0 = 0;
  bool flat = true;
  for (long i0 = 0; i0 < outer; ++i0) {
    if (!row_flat[static_cast<size_t>(i0)] || row_best[static_cast<size_t>(i0)] != row_best[0])
      flat = false;
    if (row_best[static_cast<size_t>(i0)] > best) {
      best = row_best[static_cast<size_t>(i0)];
      best_i0 = i0;
    }
  }

  GridSearchResult out;
  out.theta = theta;
  out.theta.value(0) = theta.lower(0) + cells[0] * static_cast<double>(best_i0);
  long idx = row_arg[static_cast<size_t>(best_i0)];
  for (int j = 1; j < d; ++j) {
    out.theta.value(j) =
        theta.lower(j) + cells[static_cast<size_t>(j)] * static_cast<double>(idx % resolution);
    idx /= resolution;
  }
  out.loglik = best;
  // Flat means every probed value tied; then the all-lower corner is the
  // canonical answer (it is row 0 / rest 0 and strict improvement never fired).
  if (flat) {
    for (int j = 0; j < d; ++j) out.theta.value(j) = theta.lower(j);
    out.flat = true;
  }
  return out;
}

double maximize_scalar(const std::function<double(double)>& f, double lo, double hi, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

CoordinatewiseResult maximize_coordinatewise(const std::function<double(const VectorXd&)>& f,
                                             VectorXd init, const VectorXd& lo, const VectorXd& hi,
                                             double tol, int max_sweeps) {
  CoordinatewiseResult out;
  out.argmax = std::move(init);
  const int d = static_cast<int>(out.argmax.size());
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    const VectorXd before = out.argmax;
    for (int j = 0; j < d; ++j) {
      VectorXd probe = out.argmax;
      const double best = maximize_scalar(
          [&](double v) {
            probe(j) = v;
            return f(probe);
          },
          lo(j), hi(j), 1e-9 * std::max(1.0, hi(j) - lo(j)));
      probe(j) = best;
      if (f(probe) >= f(out.argmax)) out.argmax(j) = best;
    }
    out.sweeps = sweep;
    if ((out.argmax - before).norm() <= tol) {
      out.converged = true;
      break;
    }
  }
  out.value = f(out.argmax);
  return out;
}

}  // namespace sdecov
