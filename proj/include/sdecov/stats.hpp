#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sdecov::stats {

double mean(const std::vector<double>& x);
double variance(const std::vector<double>& x);  // denominator n-1

double normal_cdf(double x);
double normal_pdf(double x);

/// Inverse standard normal CDF (Acklam's rational approximation, |err| < 1.2e-9).
double normal_quantile(double p);

/// One-sample Kolmogorov-Smirnov statistic against the standard normal.
struct KsResult {
  double statistic = 0.0;
  double p_value = 0.0;
};

KsResult ks_test_standard_normal(std::vector<double> sample);

/// Asymptotic KS p-value with Stephens' small-sample correction.
double ks_pvalue(double d, std::size_t n);

/// Sample autocorrelations at lags 1..max_lag.
std::vector<double> autocorrelations(const std::vector<double>& x, int max_lag);

/// Effective sample size via Geyer's initial positive sequence of
/// autocorrelation pairs.
struct EssResult {
  double ess = 0.0;
  bool degenerate = false;
};

EssResult effective_sample_size(const std::vector<double>& x, int max_lag = 50);

struct Histogram {
  std::vector<double> bin_left;
  std::vector<double> bin_right;
  std::vector<long> count;
};

Histogram histogram(const std::vector<double>& values, int bins = 40);

/// Mardia's multivariate skewness b_{1,p} and kurtosis b_{2,p}; rows are
/// observations.
double mardia_skewness(const Eigen::MatrixXd& sample);
double mardia_kurtosis(const Eigen::MatrixXd& sample);

}  // namespace sdecov::stats
