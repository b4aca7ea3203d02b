#include "specloop/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace specloop {

double poisson_kl(double f_hat, double f, double T) {
  if (!(f_hat >= 0.0) || !(f >= 0.0) || !(T > 0.0)) throw ArgumentError("poisson_kl: invalid arguments");
  if (f == 0.0) return f_hat == 0.0 ? 0.0 : kInfinity;
  if (f_hat == 0.0) return T * f;
  if (f_hat == f) return 0.0;
  // f - f_hat + f_hat ln(f_hat/f) = f_hat (d - ln(1 + d)) with d = f/f_hat - 1.
  const double d = (f - f_hat) / f_hat;
  double h = 0.0;
  if (std::abs(d) < 1e-3) {
    h = d * d * (0.5 + d * (-1.0 / 3.0 + d * (0.25 + d * (-0.2 + d / 6.0))));
  } else {
    h = d - std::log1p(d);
  }
  return T * f_hat * std::max(h, 0.0);
}

std::vector<double> uncertainty_scores(const PosteriorSamples& samples, std::span<const double> f_hat,
                                       const ModelSpec& model, std::span<const double> grid, double T,
                                       std::size_t draw_stride, ScoreDiagnostics* diagnostics) {
  if (samples.theta_draws.empty()) throw StateError("uncertainty_scores: no posterior draws");
  if (f_hat.size() != grid.size()) throw ArgumentError("uncertainty_scores: f_hat must match the grid");
  if (draw_stride == 0) draw_stride = 1;
  std::vector<double> sum(grid.size(), 0.0);
  std::vector<double> rates(grid.size());
  std::size_t used = 0;
  std::size_t infinite = 0;
  for (std::size_t d = 0; d < samples.theta_draws.size(); d += draw_stride) {
    model.forward(samples.theta_draws[d], grid, rates);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double kl = poisson_kl(f_hat[i], rates[i], 1.0);
      if (std::isinf(kl)) ++infinite;
      sum[i] += kl;
    }
    ++used;
  }
  // Scaling by T after averaging keeps the ranking independent of T.
  for (double& s : sum) s = T * (s / static_cast<double>(used));
  if (diagnostics) diagnostics->infinite_contributions = infinite;
  return sum;
}

std::vector<std::size_t> top_indices(std::span<const double> scores, std::size_t count) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  count = std::min(count, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                    [&](std::size_t l, std::size_t r) {
                      if (scores[l] != scores[r]) return scores[l] > scores[r];
                      return l < r;
                    });
  idx.resize(count);
  return idx;
}

std::vector<double> select_points(const AcquisitionScores& scores, std::size_t n) {
  if (n % 2 != 0) throw ArgumentError("select_points: n must be even");
  const auto& second = scores.g_second.empty() ? scores.g_best : scores.g_second;
  if (scores.g_best.size() != scores.grid.size() || second.size() != scores.grid.size())
    throw ArgumentError("select_points: score vectors must match the grid");
  if (n / 2 > scores.grid.size()) throw ArgumentError("select_points: n exceeds twice the grid size");
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i : top_indices(scores.g_best, n / 2)) out.push_back(scores.grid[i]);
  for (std::size_t i : top_indices(second, n / 2)) out.push_back(scores.grid[i]);
  return out;
}

void write_scores_csv(std::ostream& os, const AcquisitionScores& scores) {
  os << "x,g_best,g_second\n";
  for (std::size_t i = 0; i < scores.grid.size(); ++i) {
    os << format_double(scores.grid[i]) << ',' << format_double(scores.g_best[i]) << ',';
    if (!scores.g_second.empty()) os << format_double(scores.g_second[i]);
    os << '\n';
  }
}

}  // namespace specloop
