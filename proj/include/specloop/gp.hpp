#pragma once

// Gaussian-process regression baseline: squared-exponential kernel
//   k(x, x') = theta1 exp(-((x - x') / theta2)^2),
// constant mean equal to the target average, Gaussian noise sd xi.
// Hyperparameters maximize the log marginal likelihood; the next points are
// those with the largest posterior variance.

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "specloop/probmodel.hpp"

namespace specloop {

struct GpHyper {
  double theta1 = 1.0;  // amplitude (rate^2)
  double theta2 = 1.0;  // length scale (eV)
  double xi = 0.1;      // noise sd (rate)

  void validate() const;
};

double kernel(double x, double x2, const GpHyper& hyper);

/// Log marginal likelihood of ys given xs under hyper and constant mean mu0.
/// If `grad` is non-null it receives the gradient with respect to
/// (log theta1, log theta2, log xi).
double gp_log_marginal_likelihood(std::span<const double> xs, std::span<const double> ys, double mu0,
                                  const GpHyper& hyper, std::array<double, 3>* grad = nullptr);

struct GpFit {
  GpHyper hyper;
  double mu0 = 0.0;
  double log_marginal_likelihood = 0.0;
  bool degenerate = false;  // all targets equal; hyper is a fixed default
};

GpFit gp_fit(std::span<const double> xs, std::span<const double> ys, std::uint64_t seed, int restarts = 8);
GpFit gp_fit(std::span<const AggregatedPoint> data, std::uint64_t seed, int restarts = 8);

/// Factorized posterior for fixed hyperparameters.
class GpPosterior {
 public:
  GpPosterior(std::span<const double> xs, std::span<const double> ys, const GpHyper& hyper);
  GpPosterior(std::span<const double> xs, std::span<const double> ys, const GpHyper& hyper, double mu0);

  /// Posterior mean and variance at x; the variance is clamped at 0.
  [[nodiscard]] std::pair<double, double> predict(double x) const;

  [[nodiscard]] double mu0() const { return mu0_; }
  [[nodiscard]] const GpHyper& hyper() const { return hyper_; }

 private:
  std::vector<double> xs_;
  GpHyper hyper_;
  double mu0_ = 0.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

std::pair<double, double> gp_posterior(std::span<const double> xs, std::span<const double> ys,
                                       const GpHyper& hyper, double x);

/// Top-n grid points by variance, descending, ties to smaller x, no repeats.
std::vector<double> gp_select(std::span<const double> variances, std::span<const double> grid, std::size_t n);

}  // namespace specloop
