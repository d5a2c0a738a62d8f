#include "sdecov/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sdecov::stats {

double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double q, r;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > phigh) {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  q = p - 0.5;
  r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double t = d * (sn + 0.12 + 0.11 / sn);
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
    sum += term;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

KsResult ks_test_standard_normal(std::vector<double> sample) {
  if (sample.empty()) throw std::invalid_argument("ks_test: empty sample");
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = normal_cdf(sample[i]);
    d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
  }
  return {d, ks_pvalue(d, sample.size())};
}

std::vector<double> autocorrelations(const std::vector<double>& x, int max_lag) {
  const auto n = static_cast<long>(x.size());
  const double m = mean(x);
  double c0 = 0.0;
  for (double v : x) c0 += (v - m) * (v - m);
  std::vector<double> acf(static_cast<size_t>(max_lag), 0.0);
  if (c0 <= 0.0) return acf;
  for (int lag = 1; lag <= max_lag && lag < n; ++lag) {
    double c = 0.0;
    for (long t = 0; t + lag < n; ++t) c += (x[static_cast<size_t>(t)] - m) *
                                            (x[static_cast<size_t>(t + lag)] - m);
    acf[static_cast<size_t>(lag - 1)] = c / c0;
  }
  return acf;
}

EssResult effective_sample_size(const std::vector<double>& x, int max_lag) {
  EssResult out;
  const auto n = static_cast<double>(x.size());
  if (x.size() < 4 || variance(x) <= 0.0) {
    out.degenerate = true;
    return out;
  }
  const std::vector<double> acf = autocorrelations(x, max_lag);
  // Geyer: sum consecutive pairs Gamma_m = rho_{2m} + rho_{2m+1} (rho_0 = 1)
  // while positive.
  double tau = 0.0;
  for (int m = 0;; ++m) {
    const int l1 = 2 * m, l2 = 2 * m + 1;
    const double r1 = l1 == 0 ? 1.0 : (l1 - 1 < max_lag ? acf[static_cast<size_t>(l1 - 1)] : 0.0);
    const double r2 = l2 - 1 < max_lag ? acf[static_cast<size_t>(l2 - 1)] : 0.0;
    const double gamma = r1 + r2;
    if (gamma <= 0.0 || l2 > max_lag) break;
    tau += 2.0 * gamma;
  }
  tau -= 1.0;
  if (tau < 1e-12) tau = 1e-12;
  out.ess = n / tau;
  return out;
}

Histogram histogram(const std::vector<double>& values, int bins) {
  if (values.empty()) throw std::invalid_argument("histogram: empty sample");
  Histogram h;
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (lo == hi) hi = lo + 1.0;  // degenerate sample: one wide bin range
  const double w = (hi - lo) / bins;
  h.bin_left.resize(static_cast<size_t>(bins));
  h.bin_right.resize(static_cast<size_t>(bins));
  h.count.assign(static_cast<size_t>(bins), 0);
  for (int b = 0; b < bins; ++b) {
    h.bin_left[static_cast<size_t>(b)] = lo + w * b;
    h.bin_right[static_cast<size_t>(b)] = lo + w * (b + 1);
  }
  for (double v : values) {
    auto b = static_cast<long>((v - lo) / w);
    b = std::clamp(b, 0L, static_cast<long>(bins - 1));
    ++h.count[static_cast<size_t>(b)];
  }
  return h;
}

double mardia_skewness(const Eigen::MatrixXd& sample) {
  const auto n = sample.rows();
  const Eigen::RowVectorXd mu = sample.colwise().mean();
  const Eigen::MatrixXd centered = sample.rowwise() - mu;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  const Eigen::MatrixXd g = centered * cov.inverse() * centered.transpose();  // n x n
  return g.array().cube().sum() / static_cast<double>(n * n);
}

double mardia_kurtosis(const Eigen::MatrixXd& sample) {
  const auto n = sample.rows();
  const Eigen::RowVectorXd mu = sample.colwise().mean();
  const Eigen::MatrixXd centered = sample.rowwise() - mu;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);
  const Eigen::MatrixXd t = centered * cov.inverse();
  return (t.array() * centered.array()).rowwise().sum().square().sum() / static_cast<double>(n);
}

}  // namespace sdecov::stats
