#pragma once

// Gaussian-peak-mixture forward model used for spectral deconvolution:
//   f(x) = sum_k a_k exp(-(x - mu_k)^2 / sigma_k^2) + B
// Parameter vectors are laid out as [a_1, mu_1, sigma_1, ..., a_K, mu_K, sigma_K, B].

#include <span>
#include <vector>

#include "specloop/probmodel.hpp"

namespace specloop {

struct PeakParams {
  std::vector<double> a;
  std::vector<double> mu;
  std::vector<double> sigma;
  double B = 0.0;

  [[nodiscard]] std::size_t K() const { return a.size(); }
  void validate() const;
  [[nodiscard]] std::vector<double> to_theta() const;
  static PeakParams from_theta(std::span<const double> theta);
};

struct PeakPriors {
  double eta_a = 2.0;      // Gamma shape for intensities
  double lambda_a = 1.0;   // Gamma rate for intensities
  double mu_lo = 157.0;
  double mu_hi = 167.0;
  double eta_sigma = 10.0;     // Gamma shape on 1/sigma^2
  double lambda_sigma = 2.5;   // Gamma rate on 1/sigma^2
  double nu_B = 0.1;
  double xi_B = 0.01;
};

/// Model "M<K>" with dim 3K+1.
ModelSpec make_peak_model(int K, const PeakPriors& priors = {});

double eval_peaks(const PeakParams& params, double x);
void eval_peaks(std::span<const double> theta, std::span<const double> xs, std::span<double> out);

/// Reorders the (a, mu, sigma) triples so that mu is ascending. Label
/// switching makes raw posterior draws exchangeable across peaks.
void canonicalize_peaks(std::span<double> theta);

/// Ground truth used for the deconvolution experiments (three peaks).
PeakParams deconvolution_truth();

}  // namespace specloop
