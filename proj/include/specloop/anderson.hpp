#pragma once

// Two- and three-configuration effective Hamiltonians for 4f core-level XPS.
// The N_f-orbital impurity Hamiltonians are reduced to f-occupation blocks
// {f0, f1} (H2) and {f0, f1, f2} (H3). With the ligand level at zero energy,
// the initial-state block is
//
//   H2: [[0, V], [V, Delta]]
//   H3: [[0, V, 0], [V, Delta, c V], [0, c V, 2 Delta + U_ff]],  c = sqrt(2 (N_f - 1) / N_f)
//
// and the final state (core hole present) lowers each f electron by U_fc.
// The spectrum is a sum of Lorentzians at E_j - E_g + b weighted by
// |<F_j|G>|^2.

#include <array>
#include <span>
#include <vector>

#include "specloop/probmodel.hpp"

namespace specloop {

inline constexpr int kOrbitalDegeneracy = 14;

enum class HamiltonianKind { H2, H3 };

struct HamiltonianParams {
  HamiltonianKind kind = HamiltonianKind::H3;
  double Delta = 0.0;
  double V = 0.0;
  double U_fc = 0.0;
  double U_ff = 0.0;   // ignored for H2
  double Gamma = 1.0;  // Lorentzian half-width
  double b = 0.0;      // energy shift
  /// Multiplier of V on the f1-f2 hybridization.
  double f1f2_factor = default_f1f2_factor();

  static double default_f1f2_factor();
  void validate() const;
};

/// Dense symmetric matrix of dimension 1..3, row-major in a 3x3 buffer.
struct SymMatrix {
  int dim = 0;
  std::array<double, 9> a{};

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(3 * i + j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(3 * i + j)]; }
  [[nodiscard]] double frobenius_norm() const;
};

struct EigenSystem {
  int dim = 0;
  std::array<double, 3> values{};                  // ascending
  std::array<std::array<double, 3>, 3> vectors{};  // vectors[i] pairs with values[i]
};

struct HamiltonianPair {
  SymMatrix initial;
  SymMatrix final_state;
};

HamiltonianPair build_hamiltonians(const HamiltonianParams& params);

/// Closed-form symmetric eigensolver for dim <= 3. Each eigenvector has its
/// largest-magnitude component positive.
EigenSystem eig_sym(const SymMatrix& H);

struct SpectrumLine {
  double energy = 0.0;  // E_j, final-state eigenenergy
  double weight = 0.0;  // |<F_j|a_c|G>|^2
};

struct SpectrumLines {
  double ground_energy = 0.0;  // E_g
  std::vector<SpectrumLine> lines;  // ascending in energy
};

SpectrumLines spectrum_lines(const HamiltonianParams& params);

double eval_hamiltonian_spectrum(const HamiltonianParams& params, double x);
void eval_hamiltonian_spectrum(const HamiltonianParams& params, std::span<const double> xs,
                               std::span<double> out);

/// Parameter layout: H2 = [Delta, V, Gamma, U_fc, b]; H3 = [Delta, V, Gamma, U_fc, U_ff, b].
HamiltonianParams hamiltonian_params_from_theta(HamiltonianKind kind, std::span<const double> theta);
std::vector<double> hamiltonian_theta(const HamiltonianParams& params);

struct HamiltonianPriors {
  double delta_lo = 0.0, delta_hi = 20.0;
  double v_lo = 0.0, v_hi = 4.0;
  double uff_lo = 0.0, uff_hi = 20.0;
  double ufc_lo = 0.0, ufc_hi = 20.0;
  double gamma_lo = 0.01, gamma_hi = 1.0;
  double b_lo = -5.0, b_hi = 5.0;
};

/// Model "M2" (H2) or "M3" (H3).
ModelSpec make_hamiltonian_model(HamiltonianKind kind, const HamiltonianPriors& priors = {},
                                 double f1f2_factor = HamiltonianParams::default_f1f2_factor());

/// Ground truth for the Hamiltonian-selection experiments (H3, b = 0).
HamiltonianParams hamiltonian_truth();

}  // namespace specloop
