#pragma once

// Posterior-expected Kullback-Leibler uncertainty scores and next-point
// selection. For a Poisson observation with exposure T,
//   KL(Poisson(f_hat T) || Poisson(f T)) = T (f - f_hat + f_hat ln(f_hat / f)),
// so T scales every score equally and never changes the ranking.

#include <iosfwd>
#include <span>
#include <vector>

#include "specloop/probmodel.hpp"
#include "specloop/remc.hpp"

namespace specloop {

double poisson_kl(double f_hat, double f, double T = 1.0);

struct AcquisitionScores {
  std::vector<double> grid;
  std::vector<double> g_best;    // G(x; best model)
  std::vector<double> g_second;  // G(x; second-best model); empty if not applicable
};

struct ScoreDiagnostics {
  std::size_t infinite_contributions = 0;  // draws with f = 0 against f_hat > 0
};

/// Monte Carlo average over retained draws of poisson_kl(f_hat(x), f_M(x; theta), T).
/// `draw_stride` > 1 uses every stride-th draw.
std::vector<double> uncertainty_scores(const PosteriorSamples& samples, std::span<const double> f_hat,
                                       const ModelSpec& model, std::span<const double> grid, double T = 1.0,
                                       std::size_t draw_stride = 1, ScoreDiagnostics* diagnostics = nullptr);

/// First n/2 points by g_best, next n/2 by g_second (each half descending,
/// ties to smaller x). The halves may overlap.
std::vector<double> select_points(const AcquisitionScores& scores, std::size_t n);

/// Indices of the top `count` scores, descending, ties to the smaller index.
std::vector<std::size_t> top_indices(std::span<const double> scores, std::size_t count);

/// CSV `x,g_best,g_second`; g_second is left empty when absent.
void write_scores_csv(std::ostream& os, const AcquisitionScores& scores);

}  // namespace specloop
