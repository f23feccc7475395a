#pragma once

// Dark state of the Lambda system and a numerical check of its decoupling
// from |e>.

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sawspin/hamiltonian.hpp"

namespace sawspin {

struct DarkState {
  Ket state;
  double Omega_R;
  double Omega_2;
};

/// (Omega_R |g2> - Omega_2 |g1>) / sqrt(Omega_R^2 + Omega_2^2) on a cutoff-1
/// space. The |g2> amplitude is real and non-negative.
inline DarkState dark_state(double Omega_R, double Omega_2) {
  const double norm = std::hypot(Omega_R, Omega_2);
  if (norm == 0.0) throw InvalidInput("dark state needs at least one nonzero Rabi rate");
  const HilbertSpace space(1);
  CVector v = CVector::Zero(3);
  v(static_cast<int>(Level::g1)) = -Omega_2 / norm;
  v(static_cast<int>(Level::g2)) = Omega_R / norm;
  return {Ket(space, std::move(v)), Omega_R, Omega_2};
}

/// Fock-resolved dark state of the red-sideband Hamiltonian: pairs |g1, n>
/// with |g2, n-1>. Omega_R is the effective rate on that sector, i.e. it
/// already carries the sqrt(n) factor.
inline DarkState dark_state_in_sector(double Omega_R, double Omega_2, HilbertSpace space, int n) {
  if (n < 1) throw InvalidInput("sideband dark state needs phonon sector n >= 1");
  const double norm = std::hypot(Omega_R, Omega_2);
  if (norm == 0.0) throw InvalidInput("dark state needs at least one nonzero Rabi rate");
  CVector v = CVector::Zero(space.total_dim());
  v(space.index(Level::g1, n)) = -Omega_2 / norm;
  v(space.index(Level::g2, n - 1)) = Omega_R / norm;
  return {Ket(space, std::move(v)), Omega_R, Omega_2};
}

/// The orthogonal bright combination (Omega_R |g1> + Omega_2 |g2>) / norm.
inline Ket bright_state(double Omega_R, double Omega_2) {
  const double norm = std::hypot(Omega_R, Omega_2);
  if (norm == 0.0) throw InvalidInput("bright state needs at least one nonzero Rabi rate");
  CVector v = CVector::Zero(3);
  v(static_cast<int>(Level::g1)) = Omega_R / norm;
  v(static_cast<int>(Level::g2)) = Omega_2 / norm;
  return {HilbertSpace(1), std::move(v)};
}

/// max_t ||H(t) psi|| over t = 0 and one period of the slowest oscillating
/// term (64 samples). A static H is checked at t = 0 only.
inline double verify_dark(const TimeDependentHamiltonian& h, const Ket& psi, int samples = 64) {
  if (!(h.space() == psi.space())) throw InvalidInput("state and Hamiltonian live on different spaces");
  double residual = (h.at(0.0) * psi.amplitudes()).norm();
  const double slowest = h.min_nonzero_frequency();
  if (slowest > 0.0) {
    const double period = 2.0 * std::numbers::pi / slowest;
    for (int k = 1; k <= samples; ++k)
      residual = std::max(residual, (h.at(period * k / samples) * psi.amplitudes()).norm());
  }
  return residual;
}

}  // namespace sawspin
