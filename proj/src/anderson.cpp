#include "specloop/anderson.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace specloop {

namespace {

using Vec3 = std::array<double, 3>;

double dot(const Vec3& u, const Vec3& v) { return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]; }

Vec3 cross(const Vec3& u, const Vec3& v) {
  return {u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
}

Vec3 scaled(const Vec3& v, double s) { return {v[0] * s, v[1] * s, v[2] * s}; }

Vec3 mat_vec(const SymMatrix& A, const Vec3& v) {
  Vec3 out{};
  for (int i = 0; i < A.dim; ++i)
    for (int j = 0; j < A.dim; ++j) out[i] += A(i, j) * v[j];
  return out;
}

void fix_sign(Vec3& v, int dim) {
  int imax = 0;
  for (int i = 1; i < dim; ++i)
    if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
  if (v[imax] < 0.0)
    for (auto& c : v) c = -c;
}

// Unit vector u with {u, v, w} orthonormal for a given unit w.
void complement_basis(const Vec3& w, Vec3& u, Vec3& v) {
  if (std::abs(w[0]) > std::abs(w[1])) {
    const double inv = 1.0 / std::sqrt(w[0] * w[0] + w[2] * w[2]);
    u = {-w[2] * inv, 0.0, w[0] * inv};
  } else {
    const double inv = 1.0 / std::sqrt(w[1] * w[1] + w[2] * w[2]);
    u = {0.0, w[2] * inv, -w[1] * inv};
  }
  v = cross(w, u);
}

// Eigenvector of a well-separated eigenvalue: the largest cross product of
// two rows of (A - lambda I) spans its null space.
Vec3 separated_eigenvector(const SymMatrix& A, double lambda) {
  const Vec3 r0{A(0, 0) - lambda, A(0, 1), A(0, 2)};
  const Vec3 r1{A(0, 1), A(1, 1) - lambda, A(1, 2)};
  const Vec3 r2{A(0, 2), A(1, 2), A(2, 2) - lambda};
  const Vec3 c01 = cross(r0, r1), c02 = cross(r0, r2), c12 = cross(r1, r2);
  const double d01 = dot(c01, c01), d02 = dot(c02, c02), d12 = dot(c12, c12);
  if (d01 >= d02 && d01 >= d12) return scaled(c01, 1.0 / std::sqrt(d01));
  if (d02 >= d12) return scaled(c02, 1.0 / std::sqrt(d02));
  return scaled(c12, 1.0 / std::sqrt(d12));
}

// Eigenvector for lambda restricted to the plane orthogonal to evec0.
Vec3 complement_eigenvector(const SymMatrix& A, const Vec3& evec0, double lambda) {
  Vec3 u{}, v{};
  complement_basis(evec0, u, v);
  const Vec3 Au = mat_vec(A, u), Av = mat_vec(A, v);
  double m00 = dot(u, Au) - lambda;
  double m01 = dot(u, Av);
  double m11 = dot(v, Av) - lambda;
  const double a00 = std::abs(m00), a01 = std::abs(m01), a11 = std::abs(m11);
  auto combine = [&](double cu, double cv) {
    return Vec3{cu * u[0] + cv * v[0], cu * u[1] + cv * v[1], cu * u[2] + cv * v[2]};
  };
  if (a00 >= a11) {
    if (std::max(a00, a01) == 0.0) return u;
    if (a00 >= a01) {
      m01 /= m00;
      m00 = 1.0 / std::sqrt(1.0 + m01 * m01);
      m01 *= m00;
    } else {
      m00 /= m01;
      m01 = 1.0 / std::sqrt(1.0 + m00 * m00);
      m00 *= m01;
    }
    return combine(m01, -m00);
  }
  if (std::max(a11, a01) == 0.0) return u;
  if (a11 >= a01) {
    m01 /= m11;
    m11 = 1.0 / std::sqrt(1.0 + m01 * m01);
    m01 *= m11;
  } else {
    m11 /= m01;
    m01 = 1.0 / std::sqrt(1.0 + m11 * m11);
    m11 *= m01;
  }
  return combine(m11, -m01);
}

EigenSystem eig2(const SymMatrix& H) {
  EigenSystem es;
  es.dim = 2;
  const double a = H(0, 0), b = H(0, 1), c = H(1, 1);
  const double mean = 0.5 * (a + c);
  const double radius = std::hypot(0.5 * (a - c), b);
  const double phi = 0.5 * std::atan2(2.0 * b, a - c);
  const double cs = std::cos(phi), sn = std::sin(phi);
  es.values = {mean - radius, mean + radius, 0.0};
  es.vectors[0] = {-sn, cs, 0.0};
  es.vectors[1] = {cs, sn, 0.0};
  return es;
}

EigenSystem eig3(const SymMatrix& H) {
  EigenSystem es;
  es.dim = 3;
  double max_abs = 0.0;
  for (double v : H.a) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs == 0.0) {
    es.vectors = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    return es;
  }
  SymMatrix A = H;
  for (auto& v : A.a) v /= max_abs;

  const double q = (A(0, 0) + A(1, 1) + A(2, 2)) / 3.0;
  const double b00 = A(0, 0) - q, b11 = A(1, 1) - q, b22 = A(2, 2) - q;
  const double b01 = A(0, 1), b02 = A(0, 2), b12 = A(1, 2);
  const double p2 = b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * (b01 * b01 + b02 * b02 + b12 * b12);
  const double p = std::sqrt(p2 / 6.0);
  if (p == 0.0) {
    es.values = {H(0, 0), H(0, 0), H(0, 0)};
    es.vectors = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
    return es;
  }
  const double c00 = b11 * b22 - b12 * b12;
  const double c01 = b01 * b22 - b12 * b02;
  const double c02 = b01 * b12 - b11 * b02;
  const double half_det = std::clamp((b00 * c00 - b01 * c01 + b02 * c02) / (2.0 * p * p * p), -1.0, 1.0);
  const double angle = std::acos(half_det) / 3.0;
  constexpr double kTwoThirdsPi = 2.0 * std::numbers::pi / 3.0;
  const double beta2 = 2.0 * std::cos(angle);
  const double beta0 = 2.0 * std::cos(angle + kTwoThirdsPi);
  const double beta1 = -(beta0 + beta2);
  const double l0 = q + p * beta0, l1 = q + p * beta1, l2 = q + p * beta2;

  Vec3 v0{}, v1{}, v2{};
  if (half_det >= 0.0) {
    v2 = separated_eigenvector(A, l2);
    v1 = complement_eigenvector(A, v2, l1);
    v0 = cross(v1, v2);
  } else {
    v0 = separated_eigenvector(A, l0);
    v1 = complement_eigenvector(A, v0, l1);
    v2 = cross(v0, v1);
  }
  es.vectors = {v0, v1, v2};
  // Rayleigh quotients against the unscaled matrix.
  for (int i = 0; i < 3; ++i) es.values[i] = dot(es.vectors[i], mat_vec(H, es.vectors[i]));
  return es;
}

}  // namespace

double SymMatrix::frobenius_norm() const {
  double s = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) s += (*this)(i, j) * (*this)(i, j);
  return std::sqrt(s);
}

double HamiltonianParams::default_f1f2_factor() {
  return std::sqrt(2.0 * (kOrbitalDegeneracy - 1) / static_cast<double>(kOrbitalDegeneracy));
}

void HamiltonianParams::validate() const {
  if (!(Gamma > 0.0)) throw ArgumentError("HamiltonianParams: Gamma must be > 0");
  for (double v : {Delta, V, U_fc, U_ff, b})
    if (!std::isfinite(v)) throw ArgumentError("HamiltonianParams: non-finite parameter");
}

HamiltonianPair build_hamiltonians(const HamiltonianParams& p) {
  HamiltonianPair out;
  auto& hi = out.initial;
  auto& hf = out.final_state;
  if (p.kind == HamiltonianKind::H2) {
    hi.dim = hf.dim = 2;
    hi(0, 1) = hi(1, 0) = p.V;
    hi(1, 1) = p.Delta;
    hf(0, 1) = hf(1, 0) = p.V;
    hf(1, 1) = p.Delta - p.U_fc;
    return out;
  }
  hi.dim = hf.dim = 3;
  const double v12 = p.f1f2_factor * p.V;
  for (SymMatrix* m : {&hi, &hf}) {
    (*m)(0, 1) = (*m)(1, 0) = p.V;
    (*m)(1, 2) = (*m)(2, 1) = v12;
  }
  hi(1, 1) = p.Delta;
  hi(2, 2) = 2.0 * p.Delta + p.U_ff;
  hf(1, 1) = p.Delta - p.U_fc;
  hf(2, 2) = 2.0 * p.Delta + p.U_ff - 2.0 * p.U_fc;
  return out;
}

EigenSystem eig_sym(const SymMatrix& H) {
  if (H.dim < 1 || H.dim > 3) throw ArgumentError("eig_sym: dimension must be 1..3");
  double scale = 0.0;
  for (int i = 0; i < H.dim; ++i)
    for (int j = 0; j < H.dim; ++j) scale = std::max(scale, std::abs(H(i, j)));
  for (int i = 0; i < H.dim; ++i)
    for (int j = i + 1; j < H.dim; ++j)
      if (!(std::abs(H(i, j) - H(j, i)) <= 1e-12)) throw ArgumentError("eig_sym: matrix is not symmetric");

  EigenSystem es;
  if (H.dim == 1) {
    es.dim = 1;
    es.values[0] = H(0, 0);
    es.vectors[0] = {1.0, 0.0, 0.0};
    return es;
  }
  es = H.dim == 2 ? eig2(H) : eig3(H);

  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.begin() + es.dim,
            [&](int l, int r) { return es.values[l] < es.values[r]; });
  EigenSystem sorted;
  sorted.dim = es.dim;
  for (int i = 0; i < es.dim; ++i) {
    sorted.values[i] = es.values[order[i]];
    sorted.vectors[i] = es.vectors[order[i]];
    fix_sign(sorted.vectors[i], es.dim);
  }
  return sorted;
}

SpectrumLines spectrum_lines(const HamiltonianParams& params) {
  const auto [hi, hf] = build_hamiltonians(params);
  const EigenSystem init = eig_sym(hi);
  const EigenSystem fin = eig_sym(hf);
  SpectrumLines out;
  out.ground_energy = init.values[0];
  const Vec3& g = init.vectors[0];
  for (int j = 0; j < fin.dim; ++j) {
    const double overlap = dot(fin.vectors[j], g);
    out.lines.push_back({fin.values[j], overlap * overlap});
  }
  return out;
}

void eval_hamiltonian_spectrum(const HamiltonianParams& params, std::span<const double> xs,
                               std::span<double> out) {
  const SpectrumLines sl = spectrum_lines(params);
  const double g = params.Gamma;
  const double g2 = g * g;
  const double norm = g / std::numbers::pi;
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& line : sl.lines) {
    const double centre = line.energy - sl.ground_energy;
    const double amp = line.weight * norm;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double d = (xs[i] - params.b) - centre;
      out[i] += amp / (d * d + g2);
    }
  }
}

double eval_hamiltonian_spectrum(const HamiltonianParams& params, double x) {
  double out = 0.0;
  eval_hamiltonian_spectrum(params, std::span<const double>(&x, 1), std::span<double>(&out, 1));
  return out;
}

HamiltonianParams hamiltonian_params_from_theta(HamiltonianKind kind, std::span<const double> theta) {
  HamiltonianParams p;
  p.kind = kind;
  const std::size_t expected = kind == HamiltonianKind::H2 ? 5 : 6;
  if (theta.size() != expected) throw ArgumentError("hamiltonian parameter vector has wrong length");
  p.Delta = theta[0];
  p.V = theta[1];
  p.Gamma = theta[2];
  p.U_fc = theta[3];
  if (kind == HamiltonianKind::H3) p.U_ff = theta[4];
  p.b = theta.back();
  return p;
}

std::vector<double> hamiltonian_theta(const HamiltonianParams& p) {
  if (p.kind == HamiltonianKind::H2) return {p.Delta, p.V, p.Gamma, p.U_fc, p.b};
  return {p.Delta, p.V, p.Gamma, p.U_fc, p.U_ff, p.b};
}

ModelSpec make_hamiltonian_model(HamiltonianKind kind, const HamiltonianPriors& pr, double f1f2_factor) {
  ModelSpec m;
  const bool h3 = kind == HamiltonianKind::H3;
  m.id = h3 ? "M3" : "M2";
  m.param_names = {"Delta", "V", "Gamma", "U_fc"};
  m.prior = {PriorDescriptor::uniform(pr.delta_lo, pr.delta_hi), PriorDescriptor::uniform(pr.v_lo, pr.v_hi),
             PriorDescriptor::uniform(pr.gamma_lo, pr.gamma_hi), PriorDescriptor::uniform(pr.ufc_lo, pr.ufc_hi)};
  if (h3) {
    m.param_names.push_back("U_ff");
    m.prior.push_back(PriorDescriptor::uniform(pr.uff_lo, pr.uff_hi));
  }
  m.param_names.push_back("b");
  m.prior.push_back(PriorDescriptor::uniform(pr.b_lo, pr.b_hi));
  m.forward = [kind, f1f2_factor](std::span<const double> theta, std::span<const double> xs,
                                  std::span<double> out) {
    HamiltonianParams p = hamiltonian_params_from_theta(kind, theta);
    p.f1f2_factor = f1f2_factor;
    eval_hamiltonian_spectrum(p, xs, out);
  };
  return m;
}

HamiltonianParams hamiltonian_truth() {
  HamiltonianParams p;
  p.kind = HamiltonianKind::H3;
  p.Delta = 7.66;
  p.V = 0.76;
  p.U_ff = 10.5;
  p.U_fc = 12.7;
  p.Gamma = 0.7;
  p.b = 0.0;
  return p;
}

}  // namespace specloop
