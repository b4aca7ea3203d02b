#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "specloop/peaks.hpp"

using namespace specloop;

TEST_CASE("make_peak_model dimensions and default priors") {
  CHECK(make_peak_model(3).dim() == 10);
  CHECK(make_peak_model(1).dim() == 4);
  CHECK(make_peak_model(2).id == "M2");
  CHECK_THROWS_AS(make_peak_model(0), ArgumentError);
  const ModelSpec m = make_peak_model(1);
  CHECK(m.prior[0].kind == PriorKind::Gamma);
  CHECK(m.prior[0].p1 == 2.0);
  CHECK(m.prior[0].p2 == 1.0);
  CHECK(m.prior[1].kind == PriorKind::Uniform);
  CHECK(m.prior[1].p1 == 157.0);
  CHECK(m.prior[1].p2 == 167.0);
  CHECK(m.prior[2].kind == PriorKind::GammaOnInverseSquare);
  CHECK(m.prior[2].p1 == 10.0);
  CHECK(m.prior[2].p2 == 2.5);
  CHECK(m.prior[3].kind == PriorKind::Normal);
  CHECK(m.prior[3].p1 == 0.1);
  CHECK(m.prior[3].p2 == 0.01);
}

TEST_CASE("eval_peaks examples") {
  const PeakParams unit{{1.0}, {0.0}, {1.0}, 0.0};
  CHECK(eval_peaks(unit, 0.0) == 1.0);
  const PeakParams truth = deconvolution_truth();
  // Oracle value computed independently from the stated truth.
  CHECK(eval_peaks(truth, 161.852) == doctest::Approx(1.6238586257669716).epsilon(1e-12));
  CHECK(std::abs(eval_peaks(truth, 161.852) - 1.6239) < 0.0005);
  CHECK(eval_peaks(truth, 1000.0) == truth.B);
  CHECK(eval_peaks(truth, -1000.0) == truth.B);
}

TEST_CASE("batch and point evaluation agree") {
  const PeakParams truth = deconvolution_truth();
  const auto theta = truth.to_theta();
  std::vector<double> xs, out(400);
  for (int i = 0; i < 400; ++i) xs.push_back(157.0 + 0.025 * i);
  eval_peaks(theta, xs, out);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    CHECK(out[i] >= truth.B);
    CHECK(out[i] == doctest::Approx(eval_peaks(truth, xs[i])).epsilon(1e-13));
  }
}

TEST_CASE("permutation symmetry") {
  const PeakParams truth = deconvolution_truth();
  std::vector<int> perm{0, 1, 2};
  do {
    PeakParams p;
    for (int k : perm) {
      p.a.push_back(truth.a[static_cast<std::size_t>(k)]);
      p.mu.push_back(truth.mu[static_cast<std::size_t>(k)]);
      p.sigma.push_back(truth.sigma[static_cast<std::size_t>(k)]);
    }
    p.B = truth.B;
    for (double x = 157.0; x < 167.0; x += 0.13)
      CHECK(std::abs(eval_peaks(p, x) - eval_peaks(truth, x)) <= 1e-12 * eval_peaks(truth, x));
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("monotone tail and width convention") {
  const PeakParams truth = deconvolution_truth();
  const double max_mu = *std::max_element(truth.mu.begin(), truth.mu.end());
  const double max_sigma = *std::max_element(truth.sigma.begin(), truth.sigma.end());
  const double max_a = *std::max_element(truth.a.begin(), truth.a.end());
  for (double x = max_mu + 10.0 * max_sigma; x < max_mu + 20.0; x += 0.1)
    CHECK(eval_peaks(truth, x) - truth.B < 1e-10 * max_a);
  const PeakParams one{{2.0}, {5.0}, {0.4}, 0.0};
  CHECK(eval_peaks(one, 5.0 + 0.4 * std::sqrt(std::log(2.0))) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("theta round trip and canonicalization") {
  const PeakParams truth = deconvolution_truth();
  const auto theta = truth.to_theta();
  REQUIRE(theta.size() == 10);
  CHECK(theta[1] == truth.mu[0]);
  CHECK(theta[9] == truth.B);
  const PeakParams back = PeakParams::from_theta(theta);
  CHECK(back.mu == truth.mu);
  std::vector<double> shuffled{truth.a[2], truth.mu[2], truth.sigma[2], truth.a[0], truth.mu[0], truth.sigma[0],
                               truth.a[1], truth.mu[1], truth.sigma[1], truth.B};
  canonicalize_peaks(shuffled);
  CHECK(shuffled == theta);
  CHECK_THROWS_AS(PeakParams::from_theta(std::vector<double>{1.0, 2.0}), ArgumentError);
  CHECK_THROWS_AS((PeakParams{{1.0}, {0.0}, {-1.0}, 0.0}.validate()), ArgumentError);
}
