#pragma once

// Datasets, the Poisson photon-counting observation model, parameter priors,
// and per-point aggregation of repeated measurements.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "specloop/common.hpp"

namespace specloop {

struct MeasurementRecord {
  double x = 0.0;          // energy coordinate (eV)
  std::int64_t y = 0;      // photon count
  double exposure = 1.0;   // measurement time T
};

/// Append-only list of raw measurement records.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<MeasurementRecord> records);

  void append(const MeasurementRecord& record);
  void append(std::span<const MeasurementRecord> records);

  [[nodiscard]] const std::vector<MeasurementRecord>& records() const { return records_; }
  [[nodiscard]] std::size_t size() const { return records_.size(); }
  [[nodiscard]] bool empty() const { return records_.empty(); }
  [[nodiscard]] double total_exposure() const;
  [[nodiscard]] std::int64_t total_counts() const;

 private:
  std::vector<MeasurementRecord> records_;
};

/// Writes `x,y,exposure` CSV; x and exposure round-trip exactly.
void write_dataset_csv(std::ostream& os, const Dataset& data);
Dataset read_dataset_csv(std::istream& is);

struct AggregatedPoint {
  double x = 0.0;
  double t = 0.0;            // total exposure at x
  double y_bar = 0.0;        // counts per unit time
  std::int64_t counts = 0;   // total counts at x
};

/// One entry per grid point that was measured at least once, in grid order.
std::vector<AggregatedPoint> aggregate(const Dataset& data, std::span<const double> grid);

/// Index of the grid point equal to x (to within rounding), or -1.
std::ptrdiff_t grid_index(std::span<const double> grid, double x);

enum class PriorKind { Gamma, Uniform, Normal, GammaOnInverseSquare };

/// One-dimensional prior. GammaOnInverseSquare is a Gamma(shape, rate) density
/// on u = 1/v^2 where v is the parameter value; the density is taken in u,
/// with no Jacobian, and the sampler moves in u directly.
struct PriorDescriptor {
  PriorKind kind = PriorKind::Uniform;
  double p1 = 0.0;  // shape | lo | mean
  double p2 = 1.0;  // rate  | hi | sd

  static PriorDescriptor gamma(double shape, double rate);
  static PriorDescriptor uniform(double lo, double hi);
  static PriorDescriptor normal(double mean, double sd);
  static PriorDescriptor gamma_on_inverse_square(double shape, double rate);

  void validate() const;
  [[nodiscard]] bool in_support(double value) const;
  [[nodiscard]] double log_density(double value) const;
  double sample(Rng& rng) const;

  // Coordinates the random-walk sampler operates in.
  [[nodiscard]] double to_sampling(double value) const;
  [[nodiscard]] double from_sampling(double s) const;
  /// Log density in sampling coordinates (identical to log_density for all
  /// kinds; for GammaOnInverseSquare it takes u directly).
  [[nodiscard]] double log_density_sampling(double s) const;
  /// Rough scale of the prior in sampling coordinates; seeds proposal widths.
  [[nodiscard]] double sampling_scale() const;
};

std::string to_string(PriorKind kind);

/// Batch forward model: writes f_M(xs[i]; theta) into out[i].
using ForwardFn =
    std::function<void(std::span<const double> theta, std::span<const double> xs, std::span<double> out)>;

struct ModelSpec {
  std::string id;
  std::vector<std::string> param_names;
  std::vector<PriorDescriptor> prior;
  ForwardFn forward;

  [[nodiscard]] std::size_t dim() const { return prior.size(); }
  [[nodiscard]] double rate(std::span<const double> theta, double x) const;
};

double log_poisson_pmf(std::int64_t y, double mean);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

double log_likelihood(const ModelSpec& model, std::span<const double> theta, const Dataset& data);
double log_prior(const ModelSpec& model, std::span<const double> theta);
std::vector<double> sample_prior(const ModelSpec& model, Rng& rng);

/// Poisson log-likelihood reduced to per-location sufficient statistics
/// (total counts and exposure per distinct x). Agrees with log_likelihood
/// up to rounding and needs one forward evaluation per distinct x.
class PoissonObjective {
 public:
  PoissonObjective() = default;
  explicit PoissonObjective(const Dataset& data);

  double operator()(const ModelSpec& model, std::span<const double> theta) const;

  [[nodiscard]] std::span<const double> xs() const { return xs_; }
  [[nodiscard]] bool empty() const { return xs_.empty(); }

 private:
  std::vector<double> xs_;
  std::vector<double> counts_;
  std::vector<double> exposure_;
  double constant_ = 0.0;
};

}  // namespace specloop
