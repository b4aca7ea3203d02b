#include "specloop/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "specloop/acquisition.hpp"

namespace specloop {

namespace {

constexpr double kJitter = 1e-8;

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

Eigen::MatrixXd covariance(std::span<const double> xs, const GpHyper& h) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = h.theta1;
    for (Eigen::Index j = 0; j < i; ++j) K(i, j) = K(j, i) = kernel(xs[i], xs[j], h);
  }
  return K;
}

struct Box {
  std::array<double, 3> lo;
  std::array<double, 3> hi;
};

using Vec3 = std::array<double, 3>;

Vec3 clamp_to(const Vec3& z, const Box& box) {
  Vec3 out{};
  for (int i = 0; i < 3; ++i) out[i] = std::clamp(z[i], box.lo[i], box.hi[i]);
  return out;
}

GpHyper from_log(const Vec3& z) { return {std::exp(z[0]), std::exp(z[1]), std::exp(z[2])}; }

// Projected BFGS on the negative log marginal likelihood over a box in log space.
std::pair<Vec3, double> local_search(std::span<const double> xs, std::span<const double> ys, double mu0, Vec3 z,
                                     const Box& box) {
  auto objective = [&](const Vec3& p, Vec3* g) {
    std::array<double, 3> grad{};
    double v = kLogZero;
    try {
      v = gp_log_marginal_likelihood(xs, ys, mu0, from_log(p), g ? &grad : nullptr);
    } catch (const NumericalError&) {
      v = kLogZero;
    }
    if (g)
      for (int i = 0; i < 3; ++i) (*g)[i] = -grad[i];
    return -v;
  };

  Vec3 g{};
  double f = objective(z, &g);
  if (!std::isfinite(f)) return {z, f};
  std::array<Vec3, 3> H{Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
  for (int iter = 0; iter < 100; ++iter) {
    Vec3 p{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) p[i] -= H[i][j] * g[j];
    for (int i = 0; i < 3; ++i) {
      const bool at_lo = z[i] <= box.lo[i] && p[i] < 0.0;
      const bool at_hi = z[i] >= box.hi[i] && p[i] > 0.0;
      if (at_lo || at_hi) p[i] = 0.0;
    }
    double pmax = 0.0;
    for (double c : p) pmax = std::max(pmax, std::abs(c));
    if (pmax == 0.0) break;
    if (pmax > 2.0)
      for (double& c : p) c *= 2.0 / pmax;

    double t = 1.0;
    Vec3 z_new{}, g_new{};
    double f_new = f;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
      Vec3 trial{};
      for (int i = 0; i < 3; ++i) trial[i] = z[i] + t * p[i];
      trial = clamp_to(trial, box);
      double decrease = 0.0;
      for (int i = 0; i < 3; ++i) decrease += g[i] * (trial[i] - z[i]);
      const double ft = objective(trial, nullptr);
      if (std::isfinite(ft) && ft <= f + 1e-4 * decrease) {
        z_new = trial;
        f_new = ft;
        moved = true;
        break;
      }
    }
    if (!moved) break;
    objective(z_new, &g_new);

    Vec3 s{}, y{};
    for (int i = 0; i < 3; ++i) {
      s[i] = z_new[i] - z[i];
      y[i] = g_new[i] - g[i];
    }
    const double sy = s[0] * y[0] + s[1] * y[1] + s[2] * y[2];
    const double f_old = f;
    z = z_new;
    f = f_new;
    g = g_new;
    double step = 0.0;
    for (double c : s) step = std::max(step, std::abs(c));
    if (std::abs(f_old - f) < 1e-10 * (1.0 + std::abs(f)) || step < 1e-9) break;
    if (sy > 1e-12) {
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double rho = 1.0 / sy;
      Vec3 Hy{};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Hy[i] += H[i][j] * y[j];
      const double yHy = y[0] * Hy[0] + y[1] * Hy[1] + y[2] * Hy[2];
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          H[i][j] += -rho * (Hy[i] * s[j] + s[i] * Hy[j]) + (rho * rho * yHy + rho) * s[i] * s[j];
    }
  }
  return {z, f};
}

}  // namespace

void GpHyper::validate() const {
  if (!(theta1 > 0.0) || !(theta2 > 0.0) || !(xi > 0.0))
    throw ArgumentError("GP hyperparameters must all be > 0");
}

double kernel(double x, double x2, const GpHyper& h) {
  const double d = (x - x2) / h.theta2;
  return h.theta1 * std::exp(-d * d);
}

double gp_log_marginal_likelihood(std::span<const double> xs, std::span<const double> ys, double mu0,
                                  const GpHyper& hyper, std::array<double, 3>* grad) {
  hyper.validate();
  const auto n = static_cast<Eigen::Index>(xs.size());
  Eigen::MatrixXd Kf = covariance(xs, hyper);
  Eigen::MatrixXd K = Kf;
  K.diagonal().array() += hyper.xi * hyper.xi + kJitter * hyper.theta1;
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) throw NumericalError("GP covariance is not positive definite");
  Eigen::VectorXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r(i) = ys[i] - mu0;
  const Eigen::VectorXd alpha = llt.solve(r);
  double log_det = 0.0;
  const auto& L = llt.matrixLLT();
  for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(L(i, i));
  const double value =
      -0.5 * r.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  if (grad) {
    const Eigen::MatrixXd Kinv = llt.solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd W = alpha * alpha.transpose() - Kinv;
    double g1 = 0.0, g2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        const double d = (xs[i] - xs[j]) / hyper.theta2;
        g1 += W(i, j) * Kf(i, j);
        g2 += W(i, j) * Kf(i, j) * 2.0 * d * d;
      }
    }
    // The jitter scales with theta1, so it shares the amplitude derivative.
    g1 += kJitter * hyper.theta1 * W.trace();
    const double g3 = W.trace() * hyper.xi * hyper.xi * 2.0;
    *grad = {0.5 * g1, 0.5 * g2, 0.5 * g3};
  }
  return value;
}

GpFit gp_fit(std::span<const double> xs, std::span<const double> ys, std::uint64_t seed, int restarts) {
  if (xs.size() != ys.size()) throw ArgumentError("gp_fit: xs and ys differ in length");
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  if (sorted.size() < 2) throw ArgumentError("gp_fit: need at least 2 distinct inputs");

  GpFit fit;
  fit.mu0 = mean_of(ys);
  double var = 0.0;
  for (double y : ys) var += (y - fit.mu0) * (y - fit.mu0);
  var /= static_cast<double>(ys.size());
  const double span = sorted.back() - sorted.front();
  double spacing = span;
  for (std::size_t i = 1; i < sorted.size(); ++i) spacing = std::min(spacing, sorted[i] - sorted[i - 1]);

  if (!(var > 0.0)) {
    fit.degenerate = true;
    const double floor = 1e-6 * std::max(1.0, std::abs(fit.mu0));
    fit.hyper = {1e-12 * std::max(1.0, fit.mu0 * fit.mu0), span, floor};
    fit.log_marginal_likelihood = gp_log_marginal_likelihood(xs, ys, fit.mu0, fit.hyper);
    return fit;
  }

  const double sd = std::sqrt(var);
  const Box box{{std::log(1e-6 * var), std::log(0.5 * spacing), std::log(1e-3 * sd)},
                {std::log(10.0 * var), std::log(10.0 * span), std::log(10.0 * sd)}};
  Rng rng = make_stream(seed, "gp");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double best = kInfinity;
  Vec3 best_z{};
  for (int r = 0; r < std::max(1, restarts); ++r) {
    Vec3 z{};
    for (int i = 0; i < 3; ++i) z[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
    const auto [zr, fr] = local_search(xs, ys, fit.mu0, z, box);
    if (fr < best) {
      best = fr;
      best_z = zr;
    }
  }
  if (!std::isfinite(best)) throw NumericalError("gp_fit: no restart produced a finite likelihood");
  fit.hyper = from_log(best_z);
  fit.log_marginal_likelihood = -best;
  return fit;
}

GpFit gp_fit(std::span<const AggregatedPoint> data, std::uint64_t seed, int restarts) {
  std::vector<double> xs, ys;
  for (const auto& p : data) {
    xs.push_back(p.x);
    ys.push_back(p.y_bar);
  }
  return gp_fit(xs, ys, seed, restarts);
}

GpPosterior::GpPosterior(std::span<const double> xs, std::span<const double> ys, const GpHyper& hyper)
    : GpPosterior(xs, ys, hyper, ys.empty() ? 0.0 : mean_of(ys)) {}

GpPosterior::GpPosterior(std::span<const double> xs, std::span<const double> ys, const GpHyper& hyper, double mu0)
    : xs_(xs.begin(), xs.end()), hyper_(hyper), mu0_(mu0) {
  hyper.validate();
  if (xs.size() != ys.size() || xs.empty()) throw ArgumentError("GpPosterior: need matching non-empty data");
  Eigen::MatrixXd K = covariance(xs, hyper);
  K.diagonal().array() += hyper.xi * hyper.xi + kJitter * hyper.theta1;
  llt_.compute(K);
  if (llt_.info() != Eigen::Success) throw NumericalError("GpPosterior: covariance is singular after jitter");
  Eigen::VectorXd r(static_cast<Eigen::Index>(ys.size()));
  for (std::size_t i = 0; i < ys.size(); ++i) r(static_cast<Eigen::Index>(i)) = ys[i] - mu0;
  alpha_ = llt_.solve(r);
}

std::pair<double, double> GpPosterior::predict(double x) const {
  const auto n = static_cast<Eigen::Index>(xs_.size());
  Eigen::VectorXd k(n);
  for (Eigen::Index i = 0; i < n; ++i) k(i) = kernel(xs_[static_cast<std::size_t>(i)], x, hyper_);
  const double mu = mu0_ + k.dot(alpha_);
  const Eigen::VectorXd v = llt_.matrixL().solve(k);
  const double var = std::max(0.0, hyper_.theta1 - v.squaredNorm());
  return {mu, var};
}

std::pair<double, double> gp_posterior(std::span<const double> xs, std::span<const double> ys,
                                       const GpHyper& hyper, double x) {
  return GpPosterior(xs, ys, hyper).predict(x);
}

std::vector<double> gp_select(std::span<const double> variances, std::span<const double> grid, std::size_t n) {
  if (variances.size() != grid.size()) throw ArgumentError("gp_select: variances must match the grid");
  if (n > grid.size()) throw ArgumentError("gp_select: n exceeds the grid size");
  std::vector<double> out;
  for (std::size_t i : top_indices(variances, n)) out.push_back(grid[i]);
  return out;
}

}  // namespace specloop
