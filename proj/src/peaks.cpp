#include "specloop/peaks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace specloop {

namespace {
// exp(-kCutoff) is below 1e-21; contributions past it are dropped.
constexpr double kCutoff = 50.0;
}

void PeakParams::validate() const {
  if (a.empty()) throw ArgumentError("PeakParams: K must be >= 1");
  if (mu.size() != a.size() || sigma.size() != a.size())
    throw ArgumentError("PeakParams: a, mu and sigma must have equal length");
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (!(a[k] > 0.0)) throw ArgumentError("PeakParams: intensities must be > 0");
    if (!(sigma[k] > 0.0)) throw ArgumentError("PeakParams: widths must be > 0");
  }
  if (!(B >= 0.0)) throw ArgumentError("PeakParams: background must be >= 0");
}

std::vector<double> PeakParams::to_theta() const {
  std::vector<double> theta;
  theta.reserve(3 * K() + 1);
  for (std::size_t k = 0; k < K(); ++k) {
    theta.push_back(a[k]);
    theta.push_back(mu[k]);
    theta.push_back(sigma[k]);
  }
  theta.push_back(B);
  return theta;
}

PeakParams PeakParams::from_theta(std::span<const double> theta) {
  if (theta.size() < 4 || (theta.size() - 1) % 3 != 0)
    throw ArgumentError("peak parameter vector must have 3K+1 entries");
  PeakParams p;
  const std::size_t K = (theta.size() - 1) / 3;
  for (std::size_t k = 0; k < K; ++k) {
    p.a.push_back(theta[3 * k]);
    p.mu.push_back(theta[3 * k + 1]);
    p.sigma.push_back(theta[3 * k + 2]);
  }
  p.B = theta.back();
  return p;
}

void eval_peaks(std::span<const double> theta, std::span<const double> xs, std::span<double> out) {
  const std::size_t K = (theta.size() - 1) / 3;
  const double B = theta.back();
  std::fill(out.begin(), out.end(), B);
  for (std::size_t k = 0; k < K; ++k) {
    const double a = theta[3 * k];
    const double mu = theta[3 * k + 1];
    const double s = theta[3 * k + 2];
    const double inv_s2 = 1.0 / (s * s);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = xs[i] - mu;
      const double e = d * d * inv_s2;
      if (e < kCutoff) out[i] += a * std::exp(-e);
    }
  }
}

double eval_peaks(const PeakParams& params, double x) {
  double sum = params.B;
  for (std::size_t k = 0; k < params.K(); ++k) {
    const double d = (x - params.mu[k]) / params.sigma[k];
    const double e = d * d;
    if (e < kCutoff) sum += params.a[k] * std::exp(-e);
  }
  return sum;
}

ModelSpec make_peak_model(int K, const PeakPriors& priors) {
  if (K < 1) throw ArgumentError("make_peak_model: K must be >= 1");
  ModelSpec m;
  m.id = "M" + std::to_string(K);
  for (int k = 1; k <= K; ++k) {
    const auto s = std::to_string(k);
    m.param_names.insert(m.param_names.end(), {"a" + s, "mu" + s, "sigma" + s});
    m.prior.push_back(PriorDescriptor::gamma(priors.eta_a, priors.lambda_a));
    m.prior.push_back(PriorDescriptor::uniform(priors.mu_lo, priors.mu_hi));
    m.prior.push_back(PriorDescriptor::gamma_on_inverse_square(priors.eta_sigma, priors.lambda_sigma));
  }
  m.param_names.push_back("B");
  m.prior.push_back(PriorDescriptor::normal(priors.nu_B, priors.xi_B));
  m.forward = [](std::span<const double> theta, std::span<const double> xs, std::span<double> out) {
    eval_peaks(theta, xs, out);
  };
  return m;
}

void canonicalize_peaks(std::span<double> theta) {
  const std::size_t K = (theta.size() - 1) / 3;
  std::vector<std::array<double, 3>> triples(K);
  for (std::size_t k = 0; k < K; ++k) triples[k] = {theta[3 * k], theta[3 * k + 1], theta[3 * k + 2]};
  std::stable_sort(triples.begin(), triples.end(),
                   [](const auto& l, const auto& r) { return l[1] < r[1]; });
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t j = 0; j < 3; ++j) theta[3 * k + j] = triples[k][j];
}

PeakParams deconvolution_truth() {
  return PeakParams{{0.587, 1.522, 1.183}, {161.032, 161.852, 162.677}, {0.341, 0.275, 0.260}, 0.1};
}

}  // namespace specloop
