#pragma once

#include <cmath>
#include <vector>

#include "specloop/probmodel.hpp"
#include "specloop/remc.hpp"

namespace testsupport {

// Flat-rate model f(x; lambda) = lambda with a Gamma(shape, rate) prior.
inline specloop::ModelSpec flat_rate_model(double shape = 2.0, double rate = 1.0) {
  specloop::ModelSpec m;
  m.id = "flat";
  m.param_names = {"lambda"};
  m.prior = {specloop::PriorDescriptor::gamma(shape, rate)};
  m.forward = [](std::span<const double> theta, std::span<const double> xs, std::span<double> out) {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = theta[0];
  };
  return m;
}

// The single-record conjugate toy: y = 3, T = 1.
inline specloop::Dataset conjugate_data() {
  specloop::Dataset d;
  d.append({0.0, 3, 1.0});
  return d;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Standard error of the mean from batch means (robust to autocorrelation).
inline double batch_se(const std::vector<double>& v, std::size_t batches = 50) {
  const std::size_t len = v.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += v[i];
    means.push_back(s / static_cast<double>(len));
  }
  return std::sqrt(variance(means) / static_cast<double>(batches));
}

inline std::vector<double> column(const std::vector<std::vector<double>>& draws, std::size_t p) {
  std::vector<double> out;
  for (const auto& d : draws) out.push_back(d[p]);
  return out;
}

}  // namespace testsupport
