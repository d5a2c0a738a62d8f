#include <doctest.h>

#include <cmath>

#include "sdecov/likelihood.hpp"
#include "support/oracles.hpp"

using namespace sdecov;

namespace {

Panel five_step_panel(std::uint64_t seed) { return oracle::make_product_panel(seed, 1, 5); }

}  // namespace

TEST_CASE("girsanov statistics") {
  const Panel panel = five_step_panel(101);
  const ModelSpec& spec = panel.spec;

  SUBCASE("phi identically zero gives (U, V) = (0, 0)") {
    const ThetaVector theta = spec.make_theta((VectorXd(4) << 1.0, 2.0, 0.0, 0.0).finished());
    const GirsanovStats s = girsanov_stats(panel.subjects[0], spec.drift, spec.diffusions[0], theta);
    CHECK(s.U == 0.0);
    CHECK(s.V == 0.0);
  }

  SUBCASE("constant path gives U = 0 and the direct V sum") {
    Subject flat = panel.subjects[0];
    flat.path.x.setConstant(0.7);
    const ThetaVector theta = spec.make_theta((VectorXd(4) << 1.0, 0.5, 0.4, -0.3).finished());
    const GirsanovStats s = girsanov_stats(flat, spec.drift, spec.diffusions[0], theta);
    CHECK(s.U == 0.0);
    double v = 0.0;
    const double b = 1.0 + 0.5 * 0.7;
    for (int k = 0; k < flat.path.grid.n_steps; ++k) {
      const double phi = 0.4 - 0.3 * flat.features(1, k);
      v += phi * phi * b * b * flat.path.grid.step();
    }
    CHECK(s.V == doctest::Approx(v).epsilon(1e-14));
  }

  SUBCASE("random path equals the naive double-loop oracle to 1e-12 relative") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      const Panel p = five_step_panel(seed);
      const Subject& s = p.subjects[0];
      const VectorXd th = (VectorXd(4) << 0.8, -0.6, 1.1, 0.4).finished();
      const GirsanovStats got =
          girsanov_stats(s.path, s.cov, p.spec.drift, p.spec.diffusions[0], p.spec.make_theta(th));
      std::vector<double> x(s.path.x.data(), s.path.x.data() + s.path.x.size());
      std::vector<double> z(s.cov.z.row(0).begin(), s.cov.z.row(0).end());
      const auto want =
          oracle::naive_product_uv(x, z, s.path.grid.step(), 0.8, -0.6, 1.1, 0.4, 1.0);
      CHECK(got.U == doctest::Approx(want.U).epsilon(1e-12));
      CHECK(got.V == doctest::Approx(want.V).epsilon(1e-12));
    }
  }

  SUBCASE("V is nonnegative for arbitrary theta") {
    rng::CounterRng r(5150);
    for (int t = 0; t < 200; ++t) {
      VectorXd th(4);
      for (int j = 0; j < 4; ++j) th(j) = 10.0 * r.normal();
      const GirsanovStats s =
          girsanov_stats(panel.subjects[0], spec.drift, spec.diffusions[0], spec.make_theta(th));
      CHECK(s.V >= 0.0);
    }
  }
}

TEST_CASE("log-likelihood") {
  const Panel panel = oracle::make_product_panel(77, 6, 40);
  const ModelSpec& spec = panel.spec;

  SUBCASE("null drift gives exactly zero") {
    const ThetaVector theta = spec.make_theta((VectorXd(4) << 3.0, 1.0, 0.0, 0.0).finished());
    CHECK(log_likelihood(panel, theta) == 0.0);
  }

  SUBCASE("depends only on the coefficient products") {
    // (beta, xi) layout: theta = (t3, t4, t1, t2) in the display's ordering
    const ThetaVector a = spec.make_theta((VectorXd(4) << 2.0, -2.0, 1.0, -1.0).finished());
    const ThetaVector b = spec.make_theta((VectorXd(4) << 1.0, -1.0, 2.0, -2.0).finished());
    const double la = log_likelihood(panel, a);
    const double lb = log_likelihood(panel, b);
    CHECK(la == doctest::Approx(lb).epsilon(1e-10));
  }

  SUBCASE("scaling invariance holds for dyadic and sign factors") {
    const ThetaVector base = spec.make_theta((VectorXd(4) << 2.0, -2.0, 1.0, -1.0).finished());
    const double l0 = log_likelihood(panel, base);
    for (double c : {-1.0, 0.5, 2.0}) {
      VectorXd v(4);
      v << base.value(0) / c, base.value(1) / c, base.value(2) * c, base.value(3) * c;
      CHECK(std::abs(log_likelihood(panel, spec.make_theta(v)) - l0) < 1e-10);
    }
  }

  SUBCASE("recomposes from per-subject statistics") {
    const ThetaVector theta = spec.make_theta((VectorXd(4) << 1.5, -0.5, 0.7, 0.3).finished());
    double sum = 0.0;
    for (const GirsanovStats& s : girsanov_stats(panel, theta)) sum += s.U - s.V / 2.0;
    CHECK(log_likelihood(panel, theta) == doctest::Approx(sum).epsilon(1e-14));
  }
}

TEST_CASE("score") {
  const Panel panel = oracle::make_product_panel(303, 5, 30);
  const ModelSpec& spec = panel.spec;

  SUBCASE("at the origin the xi0 derivative is the pure U-weight sum") {
    const ThetaVector theta = spec.make_theta((VectorXd(4) << 1.0, 0.5, 0.0, 0.0).finished());
    const ScoreResult s = score(panel, theta);
    double want = 0.0;
    for (const Subject& sub : panel.subjects)
      for (int k = 0; k < sub.path.grid.n_steps; ++k)
        want += (1.0 + 0.5 * sub.path.x(k)) * (sub.path.x(k + 1) - sub.path.x(k));
    CHECK(s.gradient(2) == doctest::Approx(want).epsilon(1e-12));
    CHECK(s.analytic[2]);
  }

  SUBCASE("analytic branch matches central finite differences") {
    rng::CounterRng r(8181);
    for (int t = 0; t < 100; ++t) {
      const Panel p = oracle::make_product_panel(rng::derive(40, static_cast<std::uint64_t>(t)),
                                                 3, 25);
      VectorXd th(4);
      for (int j = 0; j < 4; ++j) th(j) = r.normal();
      const ThetaVector theta = p.spec.make_theta(th);
      const VectorXd grad = score(p, theta).gradient;
      for (int j = 0; j < 4; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(th(j)));
        const double fd = (log_likelihood(p, theta.with_coordinate(j, th(j) + h)) -
                           log_likelihood(p, theta.with_coordinate(j, th(j) - h))) /
                          (2.0 * h);
        const double scale = std::max({1.0, std::abs(fd), std::abs(grad(j))});
        CHECK(std::abs(grad(j) - fd) / scale < 1e-5);
      }
    }
  }

  SUBCASE("non-affine beta coordinates use the finite-difference branch") {
    ModelSpec tanh_spec = make_product_model(1.0);
    tanh_spec.drift.family = BFamily::TanhAffine;
    tanh_spec.finalize();
    Panel p = panel;
    p.spec = tanh_spec;
    const ThetaVector theta = tanh_spec.make_theta((VectorXd(4) << 0.3, 0.4, 0.8, -0.2).finished());
    const ScoreResult s = score(p, theta);
    CHECK_FALSE(s.analytic[0]);
    CHECK_FALSE(s.analytic[1]);
    CHECK(s.analytic[2]);
    CHECK(s.analytic[3]);
    for (int j = 0; j < 4; ++j) {
      const double h = 1e-5;
      const double fd = (log_likelihood(p, theta.with_coordinate(j, theta.value(j) + h)) -
                         log_likelihood(p, theta.with_coordinate(j, theta.value(j) - h))) /
                        (2.0 * h);
      CHECK(s.gradient(j) == doctest::Approx(fd).epsilon(1e-4));
    }
  }

  SUBCASE("boundary warning fires on the box edge") {
    ThetaVector theta = spec.make_theta((VectorXd(4) << 1.0, 1.0, 1.0, 1.0).finished());
    theta.value(0) = theta.upper(0);
    CHECK(score(panel, theta).boundary_warning);
  }
}

TEST_CASE("observed information") {
  SUBCASE("single-parameter reduction matches the symbolic second derivative") {
    // drift xi0 * (-x): logL = xi0 * S1 - xi0^2 * S2 / 2, so -l'' = S2 exactly
    ModelSpec spec = make_ou_model(1.0);
    const TimeGrid grid{1.0, 60};
    CovariatePath cov;
    cov.grid = grid;
    cov.z.resize(0, grid.knots());
    const ThetaVector truth = spec.make_theta((VectorXd(1) << 1.0).finished());
    const SubjectPath path = simulate_path(spec.drift, spec.diffusions[0], truth, cov, 1.0, 4242);
    const Panel panel = Panel::assemble(spec, {path}, {cov});

    double s2 = 0.0;
    for (int k = 0; k < grid.n_steps; ++k) s2 += path.x(k) * path.x(k) * grid.step();

    const InformationMatrix info =
        observed_information(panel, spec.make_theta((VectorXd(1) << 0.9).finished()));
    REQUIRE_FALSE(info.fallback);
    CHECK(info.matrix(0, 0) == doctest::Approx(s2).epsilon(1e-4));
  }

  SUBCASE("product model information is singular and flagged") {
    const Panel panel = oracle::make_product_panel(515, 10, 80);
    const ThetaVector theta_hat =
        panel.spec.make_theta((VectorXd(4) << 2.0, -2.0, 1.0, -1.0).finished());
    const InformationMatrix info = observed_information(panel, theta_hat);
    CHECK(info.fallback);
    CHECK(info.matrix.isIdentity(0.0));
  }

  SUBCASE("zero-information panel falls back") {
    ModelSpec spec = make_identifiable_model(1.0, 0);
    const TimeGrid grid{1.0, 10};
    CovariatePath cov;
    cov.grid = grid;
    cov.z.resize(0, grid.knots());
    SubjectPath path;
    path.grid = grid;
    path.x0 = 0.0;
    path.x = VectorXd::Zero(grid.knots());  // b(x) = x is 0 along the path
    const Panel panel = Panel::assemble(spec, {path}, {cov});
    const InformationMatrix info =
        observed_information(panel, spec.make_theta((VectorXd(1) << 0.5).finished()));
    CHECK(info.fallback);
  }
}

TEST_CASE("discretized likelihood ratio converges to the exact transition ratio") {
  // OU data theta = 2 from x0 = 4; compare theta 1 vs 4. The seed-averaged
  // signed error at steps 1/50, 1/100, 1/200 must shrink by [1.5, 3] per
  // halving.
  const double theta_data = 2.0, th = 1.0, thp = 4.0, x0 = 4.0;
  const int seeds = 200;
  std::vector<double> err;
  for (int m : {50, 100, 200}) {
    const double step = 1.0 / m;
    double acc = 0.0;
    for (int s = 0; s < seeds; ++s) {
      const auto x = oracle::ou_exact_path(x0, step, m, theta_data,
                                           rng::derive(2024, static_cast<std::uint64_t>(s),
                                                       static_cast<std::uint64_t>(m)));
      // discretized Girsanov ratio for drift -theta x, sigma 1
      double s1 = 0.0, s2 = 0.0;
      for (int k = 0; k < m; ++k) {
        s1 += x[static_cast<size_t>(k)] *
              (x[static_cast<size_t>(k) + 1] - x[static_cast<size_t>(k)]);
        s2 += x[static_cast<size_t>(k)] * x[static_cast<size_t>(k)] * step;
      }
      const double girsanov = (-th * s1 - 0.5 * th * th * s2) - (-thp * s1 - 0.5 * thp * thp * s2);
      const double exact =
          oracle::ou_exact_loglik(x, step, th) - oracle::ou_exact_loglik(x, step, thp);
      acc += girsanov - exact;
    }
    err.push_back(std::abs(acc / seeds));
  }
  const double r1 = err[0] / err[1];
  const double r2 = err[1] / err[2];
  CHECK(r1 >= 1.5);
  CHECK(r1 <= 3.0);
  CHECK(r2 >= 1.5);
  CHECK(r2 <= 3.0);
}

TEST_CASE("girsanov sums match direct formulas on the OU reduction") {
  ModelSpec spec = make_ou_model(1.0);
  const TimeGrid grid{1.0, 40};
  CovariatePath cov;
  cov.grid = grid;
  cov.z.resize(0, grid.knots());
  const ThetaVector truth = spec.make_theta((VectorXd(1) << 1.5).finished());
  const SubjectPath path = simulate_path(spec.drift, spec.diffusions[0], truth, cov, 2.0, 88);

  double s1 = 0.0, s2 = 0.0;
  for (int k = 0; k < grid.n_steps; ++k) {
    s1 += path.x(k) * (path.x(k + 1) - path.x(k));
    s2 += path.x(k) * path.x(k) * grid.step();
  }
  const GirsanovStats s = girsanov_stats(path, cov, spec.drift, spec.diffusions[0], truth);
  CHECK(s.U == doctest::Approx(-1.5 * s1).epsilon(1e-13));
  CHECK(s.V == doctest::Approx(1.5 * 1.5 * s2).epsilon(1e-13));
}
