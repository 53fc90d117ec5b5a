#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "shapbo/core.hpp"
#include "shapbo/gpr.hpp"

using namespace shapbo;

namespace {

SearchDomain unit_box(int d) {
  return SearchDomain(std::vector<std::string>(d, "x"),
                      Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d));
}

Dataset dataset_1d(const std::vector<double>& xs, const std::vector<double>& ys,
                   double lo = 0.0, double hi = 1.0) {
  SearchDomain domain({"x"}, Eigen::VectorXd::Constant(1, lo),
                      Eigen::VectorXd::Constant(1, hi));
  Dataset data(domain);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    Eigen::VectorXd x(1);
    x << xs[i];
    data.add({x, ys[i]});
  }
  return data;
}

/// Direct dense-solve log marginal likelihood: explicit inverse and
/// determinant, no Cholesky. Independent of the fit path.
double lml_dense_oracle(const GprModel& m) {
  const auto n = m.train_targets.size();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      k(i, j) = squared_exponential(m.train_inputs.row(i).transpose(),
                                    m.train_inputs.row(j).transpose(), m.params);
    }
  }
  k.diagonal().array() += m.params.noise_variance + m.jitter;
  const Eigen::MatrixXd k_inv = k.inverse();
  const double quad = m.train_targets.dot(k_inv * m.train_targets);
  return -0.5 * quad - 0.5 * std::log(k.determinant()) -
         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

/// Hand-built single-point model with standardization disabled: prior mean 0,
/// prior variance sv. Lets acquisition behavior be checked without a fit.
GprModel single_point_model(double sv, double lengthscale) {
  KernelParams params{lengthscale, sv, 0.0};
  Eigen::MatrixXd inputs(1, 1);
  inputs << 0.5;
  Eigen::VectorXd targets(1);
  targets << 0.0;
  const double jitter = 1e-9;
  Eigen::MatrixXd chol(1, 1);
  chol << std::sqrt(sv + jitter);
  Eigen::VectorXd alpha(1);
  alpha << 0.0;
  return GprModel{params, inputs, targets, chol, alpha, 0.0, 1.0, jitter, 0.0,
                  unit_box(1)};
}

}  // namespace

TEST_CASE("squared exponential kernel values") {
  KernelParams params{1.0, 1.0, 0.0};
  Eigen::VectorXd a(2), b(2);
  a << 0.3, 0.4;
  b = a;
  CHECK(squared_exponential(a, b, params) == doctest::Approx(1.0));

  KernelParams scaled{1.0, 2.5, 0.0};
  CHECK(squared_exponential(a, a, scaled) == doctest::Approx(2.5));

  b << 0.3 + 1.0, 0.4;  // unit distance
  CHECK(std::abs(squared_exponential(a, b, params) - 0.606531) < 1e-6);
  CHECK(std::abs(squared_exponential(a, b, params) - std::exp(-0.5)) < 1e-12);

  // Monotone decay with distance.
  double previous = 1.0;
  for (double d = 0.25; d <= 5.0; d += 0.25) {
    b << 0.3 + d, 0.4;
    const double value = squared_exponential(a, b, params);
    CHECK(value < previous);
    previous = value;
  }
  CHECK(previous < 1e-5);

  CHECK_THROWS_AS(squared_exponential(a, Eigen::VectorXd::Zero(3), params),
                  std::invalid_argument);
}

TEST_CASE("fit interpolates noise-free collinear data") {
  auto data = dataset_1d({0.1, 0.5, 0.9}, {1.2, 2.0, 2.8});
  RngStream rng(3);
  GprModel model = fit_gpr(data, rng);
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto [mean, variance] = predict(model, data[i].x);
    CHECK(std::abs(mean - data[i].y) < 1e-6);
    CHECK(variance >= 0.0);
    // Variance at a noise-free training input collapses.
    CHECK(variance <= 1e-8 * model.params.signal_variance * model.y_std * model.y_std);
  }
}

TEST_CASE("fit on constant targets reverts to the constant") {
  auto data = dataset_1d({0.1, 0.4, 0.7, 0.95}, {3.0, 3.0, 3.0, 3.0});
  RngStream rng(5);
  GprModel model = fit_gpr(data, rng);
  for (double x : {0.0, 0.33, 0.8, 1.0}) {
    Eigen::VectorXd q(1);
    q << x;
    auto [mean, variance] = predict(model, q);
    CHECK(std::abs(mean - 3.0) < 1e-6);
    CHECK(variance >= 0.0);
  }
}

TEST_CASE("log marginal likelihood matches the dense-solve oracle") {
  auto data = dataset_1d({0.05, 0.3, 0.55, 0.7, 0.92}, {0.4, 1.1, 0.2, -0.5, 0.9});
  RngStream rng(7);
  GprModel model = fit_gpr(data, rng);
  CHECK(std::abs(model.log_marginal - lml_dense_oracle(model)) < 1e-8);
}

TEST_CASE("fitted likelihood is at least every multistart initialization") {
  auto data = dataset_1d({0.1, 0.35, 0.6, 0.8}, {0.0, 1.0, -0.4, 0.6});
  RngStream fit_rng(11);
  RngStream replay(11);  // identical stream reproduces the start draws
  GprModel model = fit_gpr(data, fit_rng);
  for (int start = 0; start < 8; ++start) {
    GprModel probe = model;
    probe.params.lengthscale = std::pow(10.0, replay.uniform(-4.0, 2.0));
    probe.params.signal_variance = std::pow(10.0, replay.uniform(-6.0, 4.0));
    probe.params.noise_variance = std::pow(10.0, replay.uniform(-12.0, 0.0));
    probe.jitter = 1e-9;
    CHECK(model.log_marginal >= lml_dense_oracle(probe) - 1e-9);
  }
}

TEST_CASE("fit is deterministic given the seed") {
  auto data = dataset_1d({0.2, 0.5, 0.85}, {1.0, -0.3, 0.8});
  RngStream r1(13), r2(13);
  GprModel a = fit_gpr(data, r1);
  GprModel b = fit_gpr(data, r2);
  CHECK(a.params.lengthscale == b.params.lengthscale);
  CHECK(a.params.signal_variance == b.params.signal_variance);
  CHECK(a.params.noise_variance == b.params.noise_variance);
  CHECK(a.log_marginal == b.log_marginal);
}

TEST_CASE("fit rejects degenerate datasets") {
  auto data = dataset_1d({0.4}, {1.0});
  RngStream rng(1);
  CHECK_THROWS_AS(fit_gpr(data, rng), std::invalid_argument);
}

TEST_CASE("prediction reverts to the prior far from the data") {
  // Hand-built model: three tight points, short lengthscale, no fit involved.
  KernelParams params{0.03, 2.0, 0.0};
  Eigen::MatrixXd inputs(3, 1);
  inputs << 0.0, 0.05, 0.1;
  Eigen::VectorXd targets(3);
  targets << -1.0, 0.0, 1.0;
  Eigen::MatrixXd k(3, 3);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      k(i, j) = squared_exponential(inputs.row(i).transpose(),
                                    inputs.row(j).transpose(), params);
    }
  }
  const double jitter = 1e-9;
  k.diagonal().array() += jitter;
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  REQUIRE(llt.info() == Eigen::Success);
  GprModel model{params,  inputs, targets, Eigen::MatrixXd(llt.matrixL()),
                 llt.solve(targets), 5.0,  2.0,  jitter, 0.0, unit_box(1)};

  Eigen::VectorXd far(1);
  far << 0.9;
  auto [mean, variance] = predict(model, far);
  CHECK(std::abs(mean - model.y_mean) < 0.01 * std::abs(model.y_mean));
  const double prior_variance = params.signal_variance * model.y_std * model.y_std;
  CHECK(std::abs(variance - prior_variance) < 0.01 * prior_variance);
}

TEST_CASE("predictive mean is symmetric for symmetric data") {
  SearchDomain domain({"x"}, Eigen::VectorXd::Constant(1, -1.0),
                      Eigen::VectorXd::Constant(1, 1.0));
  Dataset data(domain);
  for (double x : {-0.8, -0.4, 0.4, 0.8}) {
    Eigen::VectorXd v(1);
    v << x;
    data.add({v, x * x});  // even function
  }
  RngStream rng(17);
  GprModel model = fit_gpr(data, rng);
  for (double d : {0.1, 0.3, 0.55, 0.9}) {
    Eigen::VectorXd left(1), right(1);
    left << -d;
    right << d;
    CHECK(std::abs(predict(model, left).first - predict(model, right).first) < 1e-9);
  }
}

TEST_CASE("expected improvement closed forms") {
  CHECK(std::abs(expected_improvement(1.0, 1.0, 0.0) - 1.083316) < 1e-4);
  CHECK(expected_improvement(0.5, 0.0, 1.0) == 0.0);
  CHECK(expected_improvement(1.5, 0.0, 1.0) == doctest::Approx(0.5));
  // At mu == f_best the improvement term vanishes, leaving sigma * pdf(0).
  CHECK(std::abs(expected_improvement(2.0, 1.0, 2.0) - 0.398942) < 1e-4);
  CHECK_THROWS_AS(expected_improvement(0.0, -1.0, 0.0), std::invalid_argument);
}

TEST_CASE("expected improvement monotonicity") {
  // Non-decreasing in mu at fixed sigma and f_best.
  double previous = expected_improvement(-3.0, 0.7, 0.0);
  for (double mu = -2.75; mu <= 3.0; mu += 0.25) {
    const double value = expected_improvement(mu, 0.7, 0.0);
    CHECK(value >= previous);
    previous = value;
  }
  // Non-decreasing in sigma when mu <= f_best.
  previous = 0.0;
  for (double sigma = 0.1; sigma <= 3.0; sigma += 0.1) {
    const double value = expected_improvement(-0.5, sigma * sigma, 0.0);
    CHECK(value >= previous);
    previous = value;
  }
}

TEST_CASE("acquisition result stays inside the current domain") {
  RngStream meta(23);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 1 + static_cast<int>(meta.next_u64() % 3);
    SearchDomain full = unit_box(dim);
    Dataset data(full);
    for (int i = 0; i < 5; ++i) {
      Eigen::VectorXd x(dim);
      for (int j = 0; j < dim; ++j) x[j] = meta.uniform();
      data.add({x, meta.uniform(-1.0, 1.0)});
    }
    RngStream fit_rng(meta.next_u64());
    GprModel model = fit_gpr(data, fit_rng);

    // Random subdomain of the original box.
    Eigen::VectorXd lo(dim), hi(dim);
    for (int j = 0; j < dim; ++j) {
      const double a = meta.uniform(0.0, 0.45);
      lo[j] = a;
      hi[j] = a + meta.uniform(0.1, 0.55);
    }
    SearchDomain current(full.names(), lo, hi);
    RngStream acq_rng(meta.next_u64());
    Eigen::VectorXd result =
        argmax_acquisition(model, current, data.best().y, acq_rng);
    CHECK(contains(current, result));
  }
}

TEST_CASE("polish never loses to the raw candidate scan") {
  auto data = dataset_1d({0.15, 0.4, 0.75}, {0.2, 0.9, -0.5});
  RngStream fit_rng(29);
  GprModel model = fit_gpr(data, fit_rng);
  const double f_best = data.best().y;
  SearchDomain domain = unit_box(1);

  RngStream acq_rng(31);
  RngStream replay = acq_rng;  // same stream regenerates the candidates
  Eigen::VectorXd result = argmax_acquisition(model, domain, f_best, acq_rng);
  auto ei_at = [&](double x) {
    Eigen::VectorXd q(1);
    q << x;
    auto [mean, variance] = predict(model, q);
    return expected_improvement(mean, variance, f_best);
  };
  double raw_max = 0.0;
  for (int i = 0; i < 2048; ++i) {
    raw_max = std::max(raw_max, ei_at(replay.uniform(0.0, 1.0)));
  }
  CHECK(ei_at(result[0]) >= raw_max - 1e-15);
}

TEST_CASE("acquisition drives toward the boundary for a single centered point") {
  GprModel model = single_point_model(1.0, 0.2);
  SearchDomain domain = unit_box(1);
  RngStream rng(37);
  Eigen::VectorXd result = argmax_acquisition(model, domain, 0.0, rng);

  // Exhaustive 1D oracle at 1e-3 resolution.
  auto ei_at = [&](double x) {
    Eigen::VectorXd q(1);
    q << x;
    auto [mean, variance] = predict(model, q);
    return expected_improvement(mean, variance, 0.0);
  };
  double oracle_best = -1.0, oracle_arg = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = static_cast<double>(i) / 1000.0;
    const double value = ei_at(x);
    if (value > oracle_best) {
      oracle_best = value;
      oracle_arg = x;
    }
  }
  CHECK(std::min(oracle_arg, 1.0 - oracle_arg) == doctest::Approx(0.0));
  CHECK(std::min(result[0], 1.0 - result[0]) < 1e-3);
  CHECK(ei_at(result[0]) >= oracle_best - 1e-9);
}
