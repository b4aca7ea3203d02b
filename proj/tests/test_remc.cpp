#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "specloop/remc.hpp"
#include "support.hpp"

using namespace specloop;
using testsupport::batch_se;
using testsupport::column;
using testsupport::mean;
using testsupport::variance;

namespace {

SamplerConfig small_config(std::uint64_t seed) {
  SamplerConfig c;
  c.ladder = beta_ladder(12, 1e-3);
  c.sweeps_burnin = 1000;
  c.sweeps_sample = 10000;
  c.seed = seed;
  return c;
}

// f(x) = theta0 for x < 0, theta1 otherwise.
ModelSpec two_rate_model() {
  ModelSpec m;
  m.id = "two";
  m.param_names = {"l0", "l1"};
  m.prior = {PriorDescriptor::gamma(2.0, 1.0), PriorDescriptor::gamma(2.0, 1.0)};
  m.forward = [](std::span<const double> th, std::span<const double> xs, std::span<double> out) {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = xs[i] < 0.0 ? th[0] : th[1];
  };
  return m;
}

}  // namespace

TEST_CASE("beta_ladder examples") {
  const auto l4 = beta_ladder(4, 0.01);
  REQUIRE(l4.size() == 4);
  CHECK(l4.betas[0] == 0.0);
  CHECK(l4.betas[1] == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(l4.betas[2] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(l4.betas[3] == 1.0);
  const auto l2 = beta_ladder(2, 0.5);
  CHECK(l2.betas == std::vector<double>{0.0, 1.0});
  const auto l32 = beta_ladder(32, 1e-4);
  const double ratio = std::pow(1e4, 1.0 / 30.0);
  for (std::size_t i = 2; i < 32; ++i) CHECK(l32.betas[i] / l32.betas[i - 1] == doctest::Approx(ratio).epsilon(1e-12));
  CHECK_THROWS_AS(beta_ladder(1, 0.1), ArgumentError);
  CHECK_THROWS_AS(beta_ladder(4, 0.0), ArgumentError);
  CHECK_THROWS_AS(beta_ladder(4, 1.0), ArgumentError);
}

TEST_CASE("mh_sweep acceptance rules") {
  ModelSpec m;
  m.id = "u";
  m.param_names = {"t"};
  m.prior = {PriorDescriptor::uniform(0.0, 1.0)};
  m.forward = [](std::span<const double> th, std::span<const double> xs, std::span<double> out) {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = th[0];
  };
  const LogLikelihoodFn flat = [](std::span<const double>) { return 0.0; };
  Rng rng(1);
  // Huge steps leave the support almost always; those proposals must be rejected.
  ReplicaState s = ReplicaState::from_theta(m, {0.5}, flat);
  const std::vector<double> huge{1e6};
  for (int i = 0; i < 200; ++i) {
    mh_sweep(s, 1.0, m, flat, huge, rng);
    CHECK(s.theta[0] >= 0.0);
    CHECK(s.theta[0] <= 1.0);
  }
  // Inside the support with a flat likelihood every proposal has ratio 1.
  const std::vector<double> tiny{1e-9};
  std::size_t accepted = 0;
  for (int i = 0; i < 500; ++i) accepted += mh_sweep(s, 1.0, m, flat, tiny, rng).count();
  CHECK(accepted == 500);
}

TEST_CASE("beta = 0 rung draws from the prior") {
  const ModelSpec m = testsupport::flat_rate_model(2.0, 1.0);
  const Dataset d = testsupport::conjugate_data();
  const PoissonObjective obj(d);
  const LogLikelihoodFn ll = [&](std::span<const double> th) { return obj(m, th); };
  Rng rng(3);
  ReplicaState s = ReplicaState::from_theta(m, {1.0}, ll);
  const std::vector<double> step{0.5};
  std::vector<double> v;
  for (int i = 0; i < 20000; ++i) {
    mh_sweep(s, 0.0, m, ll, step, rng);
    v.push_back(s.theta[0]);
  }
  CHECK(std::abs(mean(v) - 2.0) < 4.0 * std::sqrt(2.0 / 20000.0));
  // Variance of Gamma(2,1) is 2; the sample variance has sd ~ sqrt((mu4 - s^4) / n).
  CHECK(std::abs(variance(v) - 2.0) < 4.0 * std::sqrt((24.0 - 4.0) / 20000.0));
}

TEST_CASE("exchange acceptance formula") {
  CHECK(exchange_acceptance(0.1, -5.0, 0.5, -5.0) == 1.0);
  CHECK(exchange_acceptance(0.5, -1.0, 0.5, -9.0) == 1.0);
  CHECK(exchange_acceptance(0.2, -10.0, 1.0, -4.0) == doctest::Approx(std::exp(0.8 * -6.0)));
  CHECK(exchange_acceptance(0.2, -4.0, 1.0, -10.0) == 1.0);
  CHECK(exchange_acceptance(0.0, kLogZero, 0.5, -3.0) == 0.0);
}

TEST_CASE("two-replica exchange matches the analytic probability") {
  const std::vector<double> betas{0.3, 1.0};
  const double ll_lo = -3.0, ll_hi = -2.0;  // accept prob exp(0.7 * -1)
  const double p = exchange_acceptance(betas[0], ll_lo, betas[1], ll_hi);
  Rng rng(8);
  int accepted = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    std::vector<ReplicaState> states(2);
    states[0].loglike = ll_lo;
    states[1].loglike = ll_hi;
    const auto out = exchange_sweep(states, betas, 0, rng);
    REQUIRE(out.size() == 1);
    accepted += out[0];
    if (out[0] == 1) CHECK(states[0].loglike == ll_hi);
  }
  const double sd = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(static_cast<double>(accepted) / n - p) < 3.0 * sd);

  std::vector<ReplicaState> three(3);
  CHECK(exchange_sweep(three, std::vector<double>{0.0, 0.5, 1.0}, 1, rng) == std::vector<int>{-1, 1});
}

TEST_CASE("conjugate toy with default settings") {
  const ModelSpec m = testsupport::flat_rate_model(2.0, 1.0);
  const Dataset d = testsupport::conjugate_data();
  SamplerConfig c;
  c.seed = 2024;
  const auto s = run_remc(m, d, c);
  const auto lam = column(s.theta_draws, 0);
  REQUIRE(lam.size() == c.sweeps_sample);
  const double se = batch_se(lam);
  CHECK(std::abs(mean(lam) - 2.5) < 4.0 * se);
  CHECK(log_evidence(s, c.ladder) == doctest::Approx(std::log(0.125)).epsilon(0.05 / 2.0794));
  CHECK(std::abs(log_evidence(s, c.ladder) - std::log(0.125)) < 0.05);
  const auto map = map_estimate(s, m, d);
  CHECK(std::abs(map[0] - 2.0) < std::sqrt(1.25));
  for (double a : s.acc_stats.metropolis) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
  for (double a : s.acc_stats.exchange) {
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
  CHECK_FALSE(s.acc_stats.stuck);
}

TEST_CASE("determinism") {
  const ModelSpec m = testsupport::flat_rate_model();
  const Dataset d = testsupport::conjugate_data();
  SamplerConfig c = small_config(77);
  c.sweeps_sample = 500;
  const auto a = run_remc(m, d, c);
  const auto b = run_remc(m, d, c);
  CHECK(a.theta_draws == b.theta_draws);
  CHECK(a.loglike_traces == b.loglike_traces);
  CHECK(a.final_step_scales == b.final_step_scales);
  c.seed = 78;
  CHECK(run_remc(m, d, c).theta_draws != a.theta_draws);
}

TEST_CASE("zero data reproduces the prior and log Z = 0") {
  const ModelSpec m = testsupport::flat_rate_model(2.0, 1.0);
  const auto s = run_remc(m, Dataset{}, small_config(5));
  const auto lam = column(s.theta_draws, 0);
  CHECK(std::abs(mean(lam) - 2.0) < 4.0 * batch_se(lam));
  CHECK(log_evidence(s, beta_ladder(12, 1e-3)) == 0.0);
}

TEST_CASE("stationarity on a two-parameter posterior, with and without exchange") {
  const ModelSpec m = two_rate_model();
  Dataset d;
  d.append({-1.0, 400, 1.0});
  d.append({1.0, 900, 1.0});
  // Posterior Gamma(2 + y, 2): means 201, 451; variances 100.5, 225.5.
  const double means[2] = {201.0, 451.0};
  const double vars[2] = {100.5, 225.5};
  SamplerConfig c = small_config(31);
  const auto with = run_remc(m, d, c);
  c.exchange = false;
  const auto without = run_remc(m, d, c);
  for (std::size_t p = 0; p < 2; ++p) {
    const auto a = column(with.theta_draws, p);
    const auto b = column(without.theta_draws, p);
    CHECK(std::abs(mean(a) - means[p]) < 4.0 * batch_se(a));
    CHECK(std::abs(mean(b) - means[p]) < 4.0 * batch_se(b));
    CHECK(std::abs(mean(a) - mean(b)) < 4.0 * std::hypot(batch_se(a), batch_se(b)));
    CHECK(variance(a) == doctest::Approx(vars[p]).epsilon(0.15));
  }
}

TEST_CASE("evidence converges with more samples") {
  const ModelSpec m = testsupport::flat_rate_model(2.0, 1.0);
  const Dataset d = testsupport::conjugate_data();
  SamplerConfig c = small_config(12);
  c.ladder = beta_ladder(32, 1e-4);
  c.sweeps_sample = 20000;
  const double full = log_evidence(run_remc(m, d, c), c.ladder);
  CHECK(std::abs(full - std::log(0.125)) < 0.05);
  c.sweeps_sample = 10000;
  const double half = log_evidence(run_remc(m, d, c), c.ladder);
  CHECK(std::abs(full - half) < 0.1);
}

TEST_CASE("map_estimate and log_evidence errors") {
  const ModelSpec m = testsupport::flat_rate_model();
  PosteriorSamples empty;
  CHECK_THROWS_AS(map_estimate(empty, m, Dataset{}), StateError);
  CHECK_THROWS_AS(log_evidence(empty, beta_ladder(4, 0.01)), StateError);
  PosteriorSamples one;
  one.theta_draws = {{1.7}};
  CHECK(map_estimate(one, m, testsupport::conjugate_data()) == std::vector<double>{1.7});
}

TEST_CASE("map_estimate ignores constant prior offsets") {
  const Dataset d = testsupport::conjugate_data();
  const auto s = run_remc(testsupport::flat_rate_model(2.0, 1.0), d, small_config(4));
  // Gamma(2, 1) and Gamma(2, 1) scaled by a constant share the argmax; a
  // uniform prior over a wide range shifts log-prior by a constant relative to flat.
  ModelSpec wide = testsupport::flat_rate_model();
  wide.prior = {PriorDescriptor::uniform(0.0, 100.0)};
  ModelSpec wider = wide;
  wider.prior = {PriorDescriptor::uniform(0.0, 1000.0)};
  CHECK(map_estimate(s, wide, d) == map_estimate(s, wider, d));
}

TEST_CASE("model_posterior examples") {
  const std::vector<double> u2{0.5, 0.5};
  auto p = model_posterior(std::vector<double>{-3.0, -3.0}, u2);
  CHECK(p.probability[0] == doctest::Approx(0.5));
  p = model_posterior(std::vector<double>{std::log(9.0), 0.0}, u2);
  CHECK(p.probability[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(p.probability[1] == doctest::Approx(0.1).epsilon(1e-12));
  const auto q = model_posterior(std::vector<double>{std::log(9.0) + 1000.0, 1000.0}, u2);
  CHECK(q.probability[0] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(std::abs(q.probability[0] + q.probability[1] - 1.0) < 1e-12);
  CHECK(q.best() == 0);
  CHECK(q.second() == 1);
  CHECK_THROWS_AS(model_posterior(std::vector<double>{}, std::vector<double>{}), ArgumentError);
  CHECK_THROWS_AS(model_posterior(std::vector<double>{0.0, 0.0}, std::vector<double>{0.5, 0.6}), ArgumentError);
}

TEST_CASE("posterior dump") {
  const ModelSpec m = testsupport::flat_rate_model();
  SamplerConfig c = small_config(1);
  c.sweeps_sample = 20;
  const auto s = run_remc(m, testsupport::conjugate_data(), c);
  const auto dir = std::filesystem::temp_directory_path() / "specloop_dump_test";
  std::filesystem::create_directories(dir);
  write_posterior_dump((dir / "p.csv").string(), (dir / "p.json").string(), s, c);
  std::ifstream is(dir / "p.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header == "replica_beta,draw_index,param_0");
  std::size_t rows = 0;
  for (std::string line; std::getline(is, line);) ++rows;
  CHECK(rows == 20);
  CHECK(std::filesystem::exists(dir / "p.json"));
  std::filesystem::remove_all(dir);
}
