#include "specloop/probmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace specloop {

namespace {

void validate_record(const MeasurementRecord& r) {
  if (r.y < 0) throw DataError("negative photon count at x=" + format_double(r.x));
  if (!(r.exposure > 0.0) || !std::isfinite(r.exposure))
    throw DataError("non-positive exposure at x=" + format_double(r.x));
  if (!std::isfinite(r.x)) throw DataError("non-finite measurement coordinate");
}

double gamma_log_density(double v, double shape, double rate) {
  if (!(v > 0.0) || !std::isfinite(v)) return kLogZero;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(v) - rate * v;
}

double parse_double(std::string_view field, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw DataError("dataset line " + std::to_string(line) + ": bad number '" + std::string(field) + "'");
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

Dataset::Dataset(std::vector<MeasurementRecord> records) : records_(std::move(records)) {
  for (const auto& r : records_) validate_record(r);
}

void Dataset::append(const MeasurementRecord& record) {
  validate_record(record);
  records_.push_back(record);
}

void Dataset::append(std::span<const MeasurementRecord> records) {
  for (const auto& r : records) validate_record(r);
  records_.insert(records_.end(), records.begin(), records.end());
}

double Dataset::total_exposure() const {
  double sum = 0.0;
  for (const auto& r : records_) sum += r.exposure;
  return sum;
}

std::int64_t Dataset::total_counts() const {
  std::int64_t sum = 0;
  for (const auto& r : records_) sum += r.y;
  return sum;
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  os << "x,y,exposure\n";
  for (const auto& r : data.records())
    os << format_double(r.x) << ',' << r.y << ',' << format_double(r.exposure) << '\n';
}

Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw DataError("dataset: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,y,exposure") throw DataError("dataset: expected header 'x,y,exposure'");
  Dataset data;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw DataError("dataset line " + std::to_string(lineno) + ": expected 3 fields");
    std::string_view sv(line);
    MeasurementRecord r;
    r.x = parse_double(sv.substr(0, c1), lineno);
    std::int64_t y = 0;
    auto yfield = sv.substr(c1 + 1, c2 - c1 - 1);
    auto [ptr, ec] = std::from_chars(yfield.data(), yfield.data() + yfield.size(), y);
    if (ec != std::errc{} || ptr != yfield.data() + yfield.size())
      throw DataError("dataset line " + std::to_string(lineno) + ": bad count");
    r.y = y;
    r.exposure = parse_double(sv.substr(c2 + 1), lineno);
    data.append(r);
  }
  return data;
}

std::ptrdiff_t grid_index(std::span<const double> grid, double x) {
  if (grid.empty()) return -1;
  auto it = std::lower_bound(grid.begin(), grid.end(), x);
  auto close = [x](double g) { return std::abs(g - x) <= 1e-9 * std::max(1.0, std::abs(g)); };
  if (it != grid.end() && close(*it)) return it - grid.begin();
  if (it != grid.begin() && close(*(it - 1))) return (it - 1) - grid.begin();
  return -1;
}

std::vector<AggregatedPoint> aggregate(const Dataset& data, std::span<const double> grid) {
  std::vector<double> t(grid.size(), 0.0);
  std::vector<std::int64_t> counts(grid.size(), 0);
  for (const auto& r : data.records()) {
    const auto i = grid_index(grid, r.x);
    if (i < 0) throw DataError("record at x=" + format_double(r.x) + " is not on the candidate grid");
    t[static_cast<std::size_t>(i)] += r.exposure;
    counts[static_cast<std::size_t>(i)] += r.y;
  }
  std::vector<AggregatedPoint> out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (t[i] > 0.0)
      out.push_back({grid[i], t[i], static_cast<double>(counts[i]) / t[i], counts[i]});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Priors

PriorDescriptor PriorDescriptor::gamma(double shape, double rate) {
  PriorDescriptor p{PriorKind::Gamma, shape, rate};
  p.validate();
  return p;
}

PriorDescriptor PriorDescriptor::uniform(double lo, double hi) {
  PriorDescriptor p{PriorKind::Uniform, lo, hi};
  p.validate();
  return p;
}

PriorDescriptor PriorDescriptor::normal(double mean, double sd) {
  PriorDescriptor p{PriorKind::Normal, mean, sd};
  p.validate();
  return p;
}

PriorDescriptor PriorDescriptor::gamma_on_inverse_square(double shape, double rate) {
  PriorDescriptor p{PriorKind::GammaOnInverseSquare, shape, rate};
  p.validate();
  return p;
}

void PriorDescriptor::validate() const {
  switch (kind) {
    case PriorKind::Gamma:
    case PriorKind::GammaOnInverseSquare:
      if (!(p1 > 0.0) || !(p2 > 0.0)) throw ArgumentError("gamma prior needs shape > 0 and rate > 0");
      break;
    case PriorKind::Uniform:
      if (!(p1 < p2) || !std::isfinite(p1) || !std::isfinite(p2))
        throw ArgumentError("uniform prior needs finite lo < hi");
      break;
    case PriorKind::Normal:
      if (!(p2 > 0.0) || !std::isfinite(p1)) throw ArgumentError("normal prior needs sd > 0");
      break;
  }
}

bool PriorDescriptor::in_support(double value) const {
  if (!std::isfinite(value)) return false;
  switch (kind) {
    case PriorKind::Gamma:
    case PriorKind::GammaOnInverseSquare:
      return value > 0.0;
    case PriorKind::Uniform:
      return value >= p1 && value <= p2;
    case PriorKind::Normal:
      return true;
  }
  return false;
}

double PriorDescriptor::log_density(double value) const {
  if (!in_support(value)) return kLogZero;
  switch (kind) {
    case PriorKind::Gamma:
      return gamma_log_density(value, p1, p2);
    case PriorKind::GammaOnInverseSquare:
      return gamma_log_density(1.0 / (value * value), p1, p2);
    case PriorKind::Uniform:
      return -std::log(p2 - p1);
    case PriorKind::Normal: {
      const double z = (value - p1) / p2;
      return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(p2) - 0.5 * z * z;
    }
  }
  return kLogZero;
}

double PriorDescriptor::sample(Rng& rng) const {
  switch (kind) {
    case PriorKind::Gamma: {
      std::gamma_distribution<double> g(p1, 1.0 / p2);
      double v = 0.0;
      do v = g(rng);
      while (!(v > 0.0));
      return v;
    }
    case PriorKind::GammaOnInverseSquare: {
      std::gamma_distribution<double> g(p1, 1.0 / p2);
      double u = 0.0;
      do u = g(rng);
      while (!(u > 0.0));
      return 1.0 / std::sqrt(u);
    }
    case PriorKind::Uniform: {
      std::uniform_real_distribution<double> u(p1, p2);
      return u(rng);
    }
    case PriorKind::Normal: {
      std::normal_distribution<double> n(p1, p2);
      return n(rng);
    }
  }
  return 0.0;
}

double PriorDescriptor::to_sampling(double value) const {
  if (kind == PriorKind::GammaOnInverseSquare) return 1.0 / (value * value);
  return value;
}

double PriorDescriptor::from_sampling(double s) const {
  if (kind == PriorKind::GammaOnInverseSquare) return s > 0.0 ? 1.0 / std::sqrt(s) : kInfinity;
  return s;
}

double PriorDescriptor::log_density_sampling(double s) const {
  if (kind == PriorKind::GammaOnInverseSquare) return gamma_log_density(s, p1, p2);
  return log_density(s);
}

double PriorDescriptor::sampling_scale() const {
  switch (kind) {
    case PriorKind::Gamma:
    case PriorKind::GammaOnInverseSquare:
      return std::sqrt(p1) / p2;
    case PriorKind::Uniform:
      return (p2 - p1) / std::sqrt(12.0);
    case PriorKind::Normal:
      return p2;
  }
  return 1.0;
}

std::string to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::Gamma: return "gamma";
    case PriorKind::Uniform: return "uniform";
    case PriorKind::Normal: return "normal";
    case PriorKind::GammaOnInverseSquare: return "gamma_on_inverse_square";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Likelihood

double ModelSpec::rate(std::span<const double> theta, double x) const {
  double out = 0.0;
  forward(theta, std::span<const double>(&x, 1), std::span<double>(&out, 1));
  return out;
}

double log_poisson_pmf(std::int64_t y, double mean) {
  if (y < 0) throw ArgumentError("log_poisson_pmf: negative count");
  if (!(mean >= 0.0)) throw ArgumentError("log_poisson_pmf: negative or NaN mean");
  if (mean == 0.0) return y == 0 ? 0.0 : kLogZero;
  if (std::isinf(mean)) return kLogZero;
  const double yd = static_cast<double>(y);
  return (y == 0 ? 0.0 : yd * std::log(mean)) - mean - std::lgamma(yd + 1.0);
}

double log_likelihood(const ModelSpec& model, std::span<const double> theta, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::vector<double> xs;
  xs.reserve(data.size());
  for (const auto& r : data.records()) xs.push_back(r.x);
  std::vector<double> rates(xs.size());
  model.forward(theta, xs, rates);
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(rates[i]))
      throw EvaluationError("model " + model.id + " returned invalid rate " + format_double(rates[i]) +
                            " at x=" + format_double(xs[i]));
    // A negative rate (e.g. a background drawn below zero) cannot produce any count.
    if (rates[i] < 0.0) return kLogZero;
    const auto& r = data.records()[i];
    sum += log_poisson_pmf(r.y, rates[i] * r.exposure);
  }
  return sum;
}

double log_prior(const ModelSpec& model, std::span<const double> theta) {
  if (theta.size() != model.dim())
    throw ArgumentError("log_prior: theta has " + std::to_string(theta.size()) + " entries, model " + model.id +
                        " expects " + std::to_string(model.dim()));
  double sum = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) sum += model.prior[i].log_density(theta[i]);
  return sum;
}

std::vector<double> sample_prior(const ModelSpec& model, Rng& rng) {
  std::vector<double> theta(model.dim());
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = model.prior[i].sample(rng);
  return theta;
}

PoissonObjective::PoissonObjective(const Dataset& data) {
  std::map<double, std::size_t> index;
  for (const auto& r : data.records()) {
    auto [it, inserted] = index.try_emplace(r.x, xs_.size());
    if (inserted) {
      xs_.push_back(r.x);
      counts_.push_back(0.0);
      exposure_.push_back(0.0);
    }
    counts_[it->second] += static_cast<double>(r.y);
    exposure_[it->second] += r.exposure;
    const double yd = static_cast<double>(r.y);
    if (r.y > 0) constant_ += yd * std::log(r.exposure);
    constant_ -= std::lgamma(yd + 1.0);
  }
}

double PoissonObjective::operator()(const ModelSpec& model, std::span<const double> theta) const {
  if (xs_.empty()) return 0.0;
  thread_local std::vector<double> rates;
  rates.resize(xs_.size());
  model.forward(theta, xs_, rates);
  double sum = constant_;
  for (std::size_t i = 0; i < xs_.size(); ++i) {
    const double f = rates[i];
    if (!std::isfinite(f))
      throw EvaluationError("model " + model.id + " returned invalid rate " + format_double(f) +
                            " at x=" + format_double(xs_[i]));
    if (f < 0.0) return kLogZero;
    if (counts_[i] > 0.0) {
      if (f == 0.0) return kLogZero;
      sum += counts_[i] * std::log(f);
    }
    sum -= f * exposure_[i];
  }
  return sum;
}

}  // namespace specloop
