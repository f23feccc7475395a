#pragma once

// IDT and strain-coupling calculator, SI units throughout.

#include <cmath>
#include <numbers>

#include "sawspin/errors.hpp"
#include "sawspin/units.hpp"

namespace sawspin {

struct IDTParams {
  double finger_width = 1.5e-6;  // m
  double saw_velocity = 5600.0;  // m/s
  int n_finger_pairs = 50;
  double deformation_potential_ev = 1.0;  // eV
  double effective_mass = 1e-15;          // kg, mass of the mechanical mode
  /// SAW wavenumber in 1/m; 0 means the IDT design value 2 pi / (4 w).
  double wavenumber = 0.0;

  double resolved_wavenumber() const {
    return wavenumber > 0.0 ? wavenumber : 2.0 * std::numbers::pi / (4.0 * finger_width);
  }
};

/// v_s / (4 w), Hz.
inline double idt_center_frequency(const IDTParams& p) {
  if (!(p.finger_width > 0.0) || !(p.saw_velocity > 0.0))
    throw InvalidInput("IDT needs finger_width > 0 and saw_velocity > 0");
  return p.saw_velocity / (4.0 * p.finger_width);
}

/// D k sqrt(hbar / (2 m omega_m)) / hbar in rad/s, with D given in joules.
inline double electron_phonon_coupling_si(double deformation_potential_j, double wavenumber, double mass,
                                          double omega_m) {
  if (!(deformation_potential_j > 0.0) || !(wavenumber > 0.0) || !(mass > 0.0) || !(omega_m > 0.0))
    throw InvalidInput("coupling needs positive deformation potential, wavenumber, mass and frequency");
  const double zero_point = std::sqrt(units::si::hbar / (2.0 * mass * omega_m));  // m
  return deformation_potential_j * wavenumber * zero_point / units::si::hbar;
}

/// omega_m in rad/s; 0 uses 2 pi times the IDT center frequency.
inline double electron_phonon_coupling(const IDTParams& p, double omega_m = 0.0) {
  if (!(p.deformation_potential_ev > 0.0) || !(p.effective_mass > 0.0) || p.n_finger_pairs < 1 ||
      !(p.wavenumber >= 0.0))
    throw InvalidInput("IDT parameters must be positive");
  const double w = omega_m > 0.0 ? omega_m : 2.0 * std::numbers::pi * idt_center_frequency(p);
  if (omega_m < 0.0) throw InvalidInput("phonon frequency must be > 0");
  return electron_phonon_coupling_si(p.deformation_potential_ev * units::si::electron_volt, p.resolved_wavenumber(),
                                     p.effective_mass, w);
}

}  // namespace sawspin
