#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "doctest.h"
#include "specloop/gp.hpp"

using namespace specloop;

namespace {

// Draw y ~ N(0, K + xi^2 I) by Cholesky of the exact covariance.
std::vector<double> sample_gp(std::span<const double> xs, const GpHyper& h, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = kernel(xs[i], xs[j], h) + (i == j ? h.xi * h.xi + 1e-10 : 0.0);
  const Eigen::MatrixXd L = K.llt().matrixL();
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd e(n);
  for (Eigen::Index i = 0; i < n; ++i) e(i) = z(rng);
  const Eigen::VectorXd y = L * e;
  return {y.data(), y.data() + n};
}

}  // namespace

TEST_CASE("kernel examples and symmetry") {
  const GpHyper h{2.0, 0.5, 0.1};
  CHECK(kernel(1.0, 1.0, h) == 2.0);
  CHECK(kernel(1.0, 1.5, h) == doctest::Approx(2.0 / std::numbers::e).epsilon(1e-15));
  CHECK(kernel(0.0, 1e3, h) == 0.0);
  Rng rng(1);
  std::uniform_real_distribution<double> u(-10, 10);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng), b = u(rng);
    CHECK(kernel(a, b, h) == kernel(b, a, h));
  }
  CHECK_THROWS_AS((GpHyper{0.0, 1.0, 1.0}.validate()), ArgumentError);
}

TEST_CASE("posterior against a dense-solve oracle") {
  const std::vector<double> xs{0.0, 0.7, 1.1, 2.0, 3.5};
  const std::vector<double> ys{1.0, 0.3, -0.2, 0.8, 1.5};
  const GpHyper h{1.3, 0.8, 0.2};
  const GpPosterior post(xs, ys, h);
  double mu0 = 0.0;
  for (double y : ys) mu0 += y / 5.0;
  Eigen::MatrixXd K(5, 5);
  Eigen::VectorXd r(5);
  for (int i = 0; i < 5; ++i) {
    r(i) = ys[static_cast<std::size_t>(i)] - mu0;
    for (int j = 0; j < 5; ++j)
      K(i, j) = kernel(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)], h) +
                (i == j ? h.xi * h.xi + 1e-8 * h.theta1 : 0.0);
  }
  const Eigen::MatrixXd Kinv = K.fullPivLu().inverse();
  for (double x : {-1.0, 0.35, 1.5, 2.9, 6.0}) {
    Eigen::VectorXd k(5);
    for (int i = 0; i < 5; ++i) k(i) = kernel(xs[static_cast<std::size_t>(i)], x, h);
    const double mu = mu0 + k.dot(Kinv * r);
    const double var = h.theta1 - k.dot(Kinv * k);
    const auto [m, v] = post.predict(x);
    CHECK(std::abs(m - mu) < 1e-8);
    CHECK(std::abs(v - var) < 1e-8);
    CHECK(v <= h.theta1 + 1e-9);
    CHECK(v >= 0.0);
  }
  CHECK(post.mu0() == doctest::Approx(mu0));
}

TEST_CASE("interpolation and prior reversion") {
  const std::vector<double> x1{0.0}, y1{1.0};
  const auto [m, v] = gp_posterior(x1, y1, GpHyper{1.0, 1.0, 1e-6}, 0.0);
  CHECK(m == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(v < 1e-7);

  const std::vector<double> xs{0.0, 0.5, 1.0, 1.5};
  const std::vector<double> ys{0.2, 1.4, -0.3, 0.9};
  const GpHyper h{1.0, 0.4, 1e-6};
  const GpPosterior post(xs, ys, h);
  for (std::size_t i = 0; i < xs.size(); ++i) CHECK(std::abs(post.predict(xs[i]).first - ys[i]) < 1e-4);
  const auto [mf, vf] = post.predict(100.0);
  CHECK(mf == doctest::Approx(post.mu0()).epsilon(1e-12));
  CHECK(vf == doctest::Approx(h.theta1).epsilon(1e-12));
}

TEST_CASE("log marginal likelihood gradient matches finite differences") {
  Rng rng(4);
  std::vector<double> xs;
  for (int i = 0; i < 30; ++i) xs.push_back(0.3 * i);
  const GpHyper truth{1.0, 0.7, 0.2};
  const auto ys = sample_gp(xs, truth, rng);
  const GpHyper h{0.8, 0.9, 0.3};
  std::array<double, 3> g{};
  gp_log_marginal_likelihood(xs, ys, 0.1, h, &g);
  const double eps = 1e-6;
  for (int p = 0; p < 3; ++p) {
    std::array<double, 3> lp{std::log(h.theta1), std::log(h.theta2), std::log(h.xi)};
    auto at = [&](double d) {
      auto q = lp;
      q[static_cast<std::size_t>(p)] += d;
      return gp_log_marginal_likelihood(xs, ys, 0.1, {std::exp(q[0]), std::exp(q[1]), std::exp(q[2])});
    };
    const double fd = (at(eps) - at(-eps)) / (2.0 * eps);
    CHECK(g[static_cast<std::size_t>(p)] == doctest::Approx(fd).epsilon(1e-5));
  }
  // Dense oracle for the value itself.
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd K(n, n);
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i) = ys[static_cast<std::size_t>(i)] - 0.1;
    for (Eigen::Index j = 0; j < n; ++j)
      K(i, j) = kernel(xs[static_cast<std::size_t>(i)], xs[static_cast<std::size_t>(j)], h) +
                (i == j ? h.xi * h.xi + 1e-8 * h.theta1 : 0.0);
  }
  const double oracle = -0.5 * r.dot(K.fullPivLu().solve(r)) - 0.5 * std::log(K.determinant()) -
                        0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  CHECK(gp_log_marginal_likelihood(xs, ys, 0.1, h) == doctest::Approx(oracle).epsilon(1e-10));
}

TEST_CASE("gp_fit recovers known hyperparameters") {
  Rng rng(2024);
  std::vector<double> xs;
  for (int i = 0; i < 200; ++i) xs.push_back(10.0 * i / 199.0);
  const GpHyper truth{1.0, 0.5, 0.1};
  const auto ys = sample_gp(xs, truth, rng);
  const GpFit fit = gp_fit(xs, ys, 7);
  CHECK_FALSE(fit.degenerate);
  CHECK(std::abs(std::log(fit.hyper.theta1) - std::log(truth.theta1)) < 0.5);
  CHECK(std::abs(std::log(fit.hyper.theta2) - std::log(truth.theta2)) < 0.5);
  CHECK(std::abs(std::log(fit.hyper.xi) - std::log(truth.xi)) < 0.5);
  const GpFit again = gp_fit(xs, ys, 7);
  CHECK(again.hyper.theta1 == fit.hyper.theta1);
  CHECK(again.hyper.theta2 == fit.hyper.theta2);
  CHECK(again.hyper.xi == fit.hyper.xi);
  // The optimum beats the truth in marginal likelihood.
  CHECK(fit.log_marginal_likelihood >= gp_log_marginal_likelihood(xs, ys, fit.mu0, truth) - 1e-6);
}

TEST_CASE("gp_fit on pure noise and degenerate data") {
  Rng rng(8);
  std::normal_distribution<double> z(3.0, 0.5);
  std::vector<double> xs, ys;
  for (int i = 0; i < 100; ++i) {
    xs.push_back(0.1 * i);
    ys.push_back(z(rng));
  }
  const GpFit fit = gp_fit(xs, ys, 1);
  // White noise goes either into xi or into a kernel narrower than the spacing.
  CHECK((fit.hyper.theta1 < 0.1 * fit.hyper.xi * fit.hyper.xi || fit.hyper.theta2 < 0.2));
  CHECK(fit.hyper.theta1 + fit.hyper.xi * fit.hyper.xi == doctest::Approx(0.25).epsilon(0.3));

  const std::vector<double> flat(100, 2.0);
  const GpFit deg = gp_fit(xs, flat, 1);
  CHECK(deg.degenerate);
  CHECK(deg.hyper.theta1 < 1e-9);
  CHECK_THROWS_AS(gp_fit(std::vector<double>{1.0, 1.0}, std::vector<double>{0.0, 1.0}, 1), ArgumentError);
}

TEST_CASE("gp_select ordering") {
  const std::vector<double> grid{1, 2, 3, 4, 5};
  CHECK(gp_select(std::vector<double>{1, 2, 3, 4, 5}, grid, 2) == std::vector<double>{5, 4});
  CHECK(gp_select(std::vector<double>(5, 0.3), grid, 3) == std::vector<double>{1, 2, 3});
  CHECK_THROWS_AS(gp_select(std::vector<double>(5, 0.3), grid, 6), ArgumentError);
}
