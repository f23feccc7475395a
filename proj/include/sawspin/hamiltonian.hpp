#pragma once

// Hamiltonians of the phonon-dressed Lambda system and their time-ordered
// propagation.
//
// Frame chain (hbar = 1, lambda = g / omega_m):
//
//   lab        H(t)   = w_m b'b - nu1 |g1><g1| - nu2 |g2><g2| + g (b + b') |e><e|
//                       + Omega_i/2 (e^{-i w_i t} |e><g_i| + h.c.)
//   polaron    U      = exp[-lambda (b' - b) |e><e|],   H~ = U' H U
//   H~(t): static part w_m b'b - nu1 P1 - nu2 P2 - (g^2/w_m) P_e, drives dressed
//          by exp[+lambda (b' - b)]
//   interaction  psi_I(t) = W(t) psi~(t),  W(t) = Pi exp(i H0 t),
//                H0 = static part of H~,  Pi = (-1)^{b'b}
//
// The exact conjugation shifts |e> by -g^2/w_m, which is the shift implied by
// Delta_i = (nu_i - g^2/w_m) - w_i. The phonon parity in W(t) flips the sign
// of lambda, so H_I carries the dressing exp[-lambda (b' e^{i w_m t} - b e^{-i w_m t})]
// and the Lamb-Dicke limit has a +lambda b red-sideband coupling.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <vector>

#include "sawspin/core_space.hpp"

namespace sawspin {

/// One term op * exp(i * frequency * t) of a time-dependent Hamiltonian.
struct HamiltonianTerm {
  OperatorMatrix op;
  double frequency = 0.0;
};

class TimeDependentHamiltonian {
 public:
  explicit TimeDependentHamiltonian(HilbertSpace space) : space_(space) {}

  const HilbertSpace& space() const { return space_; }
  const std::vector<HamiltonianTerm>& terms() const { return terms_; }

  TimeDependentHamiltonian& add(const OperatorMatrix& op, double frequency = 0.0) {
    if (!(op.space() == space_)) throw InvalidInput("term lives on a different space");
    terms_.push_back({op, frequency});
    sparse_.push_back(compress(op.entries()));
    return *this;
  }

  /// op e^{i f t} + op^dagger e^{-i f t}
  TimeDependentHamiltonian& add_hermitian_pair(const OperatorMatrix& op, double frequency) {
    add(op, frequency);
    return add(op.adjoint(), -frequency);
  }

  CMatrix at(double t) const {
    const int d = space_.total_dim();
    CMatrix h = CMatrix::Zero(d, d);
    for (std::size_t k = 0; k < terms_.size(); ++k) {
      const double f = terms_[k].frequency;
      const cplx c = (f == 0.0) ? cplx(1.0, 0.0) : std::polar(1.0, f * t);
      for (const auto& nz : sparse_[k]) h(nz.row, nz.col) += c * nz.value;
    }
    return h;
  }

  OperatorMatrix operator()(double t) const { return {space_, at(t)}; }

  OperatorMatrix static_part() const {
    CMatrix h = CMatrix::Zero(space_.total_dim(), space_.total_dim());
    for (const auto& term : terms_)
      if (term.frequency == 0.0) h += term.op.entries();
    return {space_, h};
  }

  double max_frequency() const {
    double w = 0.0;
    for (const auto& term : terms_) w = std::max(w, std::abs(term.frequency));
    return w;
  }

  /// Smallest nonzero |frequency|, 0 when the Hamiltonian is static.
  double min_nonzero_frequency() const {
    double w = std::numeric_limits<double>::infinity();
    for (const auto& term : terms_)
      if (term.frequency != 0.0) w = std::min(w, std::abs(term.frequency));
    return std::isinf(w) ? 0.0 : w;
  }

 private:
  struct NonZero {
    int row;
    int col;
    cplx value;
  };

  static std::vector<NonZero> compress(const CMatrix& m) {
    std::vector<NonZero> nz;
    for (int c = 0; c < m.cols(); ++c)
      for (int r = 0; r < m.rows(); ++r)
        if (m(r, c) != cplx(0.0, 0.0)) nz.push_back({r, c, m(r, c)});
    return nz;
  }

  HilbertSpace space_;
  std::vector<HamiltonianTerm> terms_;
  std::vector<std::vector<NonZero>> sparse_;
};

// ---- time-ordered propagation ---------------------------------------------

/// exp(-i h dt) v by scaled Taylor series.
inline CMatrix expm_times(const CMatrix& h, double dt, CMatrix v) {
  const double norm1 = h.cwiseAbs().colwise().sum().maxCoeff() * std::abs(dt);
  const int substeps = std::max(1, static_cast<int>(std::ceil(norm1 / 0.5)));
  const cplx factor = cplx(0.0, -dt / substeps);
  for (int s = 0; s < substeps; ++s) {
    CMatrix result = v;
    CMatrix term = v;
    for (int k = 1; k < 60; ++k) {
      term = (factor / static_cast<double>(k)) * (h * term);
      result += term;
      if (term.norm() <= 1e-17 * result.norm()) break;
    }
    v = std::move(result);
  }
  return v;
}

struct PropagationOptions {
  /// Upper bound on the step; 0 lets the automatic bound decide.
  double max_step = 0.0;
  /// Step <= step_fraction * 2 pi / omega_max.
  double step_fraction = 1.0 / 40.0;
};

/// Largest angular scale of H: max of the drive frequencies and a spectral
/// radius bound (infinity norm) of H(t0).
inline double omega_max(const TimeDependentHamiltonian& h, double t0) {
  const CMatrix m = h.at(t0);
  const double radius = m.cwiseAbs().rowwise().sum().maxCoeff();
  return std::max(h.max_frequency(), radius);
}

inline int propagation_steps(const TimeDependentHamiltonian& h, double t0, double t1,
                             const PropagationOptions& opt = {}) {
  const double span = std::abs(t1 - t0);
  if (span == 0.0) return 0;
  double step = std::numeric_limits<double>::infinity();
  const double w = omega_max(h, t0);
  if (h.max_frequency() > 0.0 && w > 0.0) step = opt.step_fraction * 2.0 * std::numbers::pi / w;
  if (opt.max_step > 0.0) step = std::min(step, opt.max_step);
  if (std::isinf(step)) return 1;
  return std::max(1, static_cast<int>(std::ceil(span / step)));
}

/// Piecewise-constant midpoint propagation of the columns of `states` from t0
/// to t1.
inline CMatrix propagate(const TimeDependentHamiltonian& h, CMatrix states, double t0, double t1,
                         const PropagationOptions& opt = {}) {
  if (states.rows() != h.space().total_dim()) throw InvalidInput("state dimension mismatch");
  const int steps = propagation_steps(h, t0, t1, opt);
  if (steps == 0) return states;
  const double dt = (t1 - t0) / steps;
  for (int s = 0; s < steps; ++s) states = expm_times(h.at(t0 + (s + 0.5) * dt), dt, std::move(states));
  return states;
}

inline Ket propagate(const TimeDependentHamiltonian& h, const Ket& psi, double t0, double t1,
                     const PropagationOptions& opt = {}) {
  return {psi.space(), propagate(h, CMatrix(psi.amplitudes()), t0, t1, opt).col(0)};
}

inline OperatorMatrix propagator(const TimeDependentHamiltonian& h, double t0, double t1,
                                 const PropagationOptions& opt = {}) {
  const int d = h.space().total_dim();
  return {h.space(), propagate(h, CMatrix::Identity(d, d), t0, t1, opt)};
}

/// |<a|b>|^2
inline double state_fidelity(const CVector& a, const CVector& b) {
  return std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm());
}

/// sqrt(1 - F): pure-state trace distance, blind to global phase.
inline double state_distance(const CVector& a, const CVector& b) {
  return std::sqrt(std::max(0.0, 1.0 - state_fidelity(a, b)));
}

// ---- parameters -----------------------------------------------------------

/// Lab-frame drive parameters; all angular frequencies in rad/us.
struct DriveParams {
  double omega_m = 0.0;  // phonon mode
  double nu_1 = 0.0;     // |g1> -> |e>
  double nu_2 = 0.0;     // |g2> -> |e>
  double omega_1 = 0.0;  // laser 1
  double omega_2 = 0.0;  // laser 2
  double Omega_1 = 0.0;  // bare Rabi rates, real
  double Omega_2 = 0.0;
  double g = 0.0;        // electron-phonon coupling
  double n_bar = 0.0;    // mean phonon number

  double lamb_dicke() const { return omega_m > 0.0 ? g / omega_m : 0.0; }
  double polaron_shift() const { return omega_m > 0.0 ? g * g / omega_m : 0.0; }

  void validate() const {
    for (double v : {omega_m, nu_1, nu_2, omega_1, omega_2, Omega_1, Omega_2, g, n_bar})
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("drive parameters must be finite and >= 0");
    if (g > 0.0 && omega_m <= 0.0) throw InvalidInput("g > 0 requires omega_m > 0");
  }
};

struct DetuningSet {
  double Delta_1;
  double Delta_2;
  double Delta_R;
};

inline DetuningSet detunings(const DriveParams& p) {
  const double shift = p.polaron_shift();
  const double d1 = (p.nu_1 - shift) - p.omega_1;
  const double d2 = (p.nu_2 - shift) - p.omega_2;
  return {d1, d2, d1 - p.omega_m};
}

/// Effective Lambda-system drive as it enters the rotating-frame equations.
struct LambdaDriveParams {
  double Omega_R = 0.0;
  double Omega_2 = 0.0;
  double Delta_R = 0.0;
  double Delta_2 = 0.0;
};

// ---- builders -------------------------------------------------------------

namespace detail {

inline OperatorMatrix embed(Level to, Level from, const CMatrix& phonon_op, HilbertSpace space) {
  return tensor_embed(electronic::transition(to, from), phonon_op, space);
}

/// omega_m b'b - nu1 P1 - nu2 P2 + e_shift P_e
inline OperatorMatrix bare_static(const DriveParams& p, HilbertSpace space, double e_shift) {
  const int n = space.fock_cutoff();
  const CMatrix id = phonon::identity(n);
  return p.omega_m * tensor_embed(electronic::identity(), phonon::number(n), space) -
         p.nu_1 * embed(Level::g1, Level::g1, id, space) - p.nu_2 * embed(Level::g2, Level::g2, id, space) +
         e_shift * embed(Level::e, Level::e, id, space);
}

inline void warn_large_lamb_dicke(double lambda) {
  static bool warned = false;
  if (lambda > 0.5 && !warned) {
    warned = true;
    std::cerr << "warning: g/omega_m = " << lambda << " exceeds 0.5; polaron frame accuracy degrades\n";
  }
}

}  // namespace detail

/// Lab-frame Hamiltonian in the rotating-wave form.
inline TimeDependentHamiltonian build_lab_hamiltonian(const DriveParams& p, HilbertSpace space) {
  p.validate();
  const int n = space.fock_cutoff();
  const CMatrix id = phonon::identity(n);
  const CMatrix b = phonon::annihilation(n);
  TimeDependentHamiltonian h(space);
  h.add(p.omega_m * tensor_embed(electronic::identity(), phonon::number(n), space));
  h.add(-p.nu_1 * detail::embed(Level::g1, Level::g1, id, space));
  h.add(-p.nu_2 * detail::embed(Level::g2, Level::g2, id, space));
  h.add(p.g * detail::embed(Level::e, Level::e, b + b.adjoint(), space));
  h.add_hermitian_pair(0.5 * p.Omega_1 * detail::embed(Level::e, Level::g1, id, space), -p.omega_1);
  h.add_hermitian_pair(0.5 * p.Omega_2 * detail::embed(Level::e, Level::g2, id, space), -p.omega_2);
  return h;
}

/// U = exp[-(g/omega_m)(b' - b)|e><e|]; identity on the g1, g2 blocks.
inline OperatorMatrix polaron_transform(const DriveParams& p, HilbertSpace space) {
  p.validate();
  const double lambda = p.lamb_dicke();
  detail::warn_large_lamb_dicke(lambda);
  const int n = space.fock_cutoff();
  const CMatrix ground = electronic::projector(Level::g1) + electronic::projector(Level::g2);
  return tensor_embed(ground, phonon::identity(n), space) +
         tensor_embed(electronic::projector(Level::e), phonon::displacement(-lambda, n), space);
}

/// U' H(t) U written out analytically.
inline TimeDependentHamiltonian build_transformed_hamiltonian(const DriveParams& p, HilbertSpace space) {
  p.validate();
  const double lambda = p.lamb_dicke();
  detail::warn_large_lamb_dicke(lambda);
  const CMatrix dressing = phonon::displacement(lambda, space.fock_cutoff());
  TimeDependentHamiltonian h(space);
  h.add(detail::bare_static(p, space, -p.polaron_shift()));
  h.add_hermitian_pair(0.5 * p.Omega_1 * detail::embed(Level::e, Level::g1, dressing, space), -p.omega_1);
  h.add_hermitian_pair(0.5 * p.Omega_2 * detail::embed(Level::e, Level::g2, dressing, space), -p.omega_2);
  return h;
}

/// W(t) = (-1)^{b'b} exp(i H0 t), mapping polaron-frame states to the
/// interaction picture. Diagonal in the basis.
inline OperatorMatrix interaction_frame_map(const DriveParams& p, HilbertSpace space, double t) {
  const OperatorMatrix h0 = detail::bare_static(p, space, -p.polaron_shift());
  CMatrix w = CMatrix::Zero(space.total_dim(), space.total_dim());
  for (int i = 0; i < space.total_dim(); ++i) {
    const double sign = (space.decompose(i).second % 2 == 0) ? 1.0 : -1.0;
    w(i, i) = sign * std::polar(1.0, h0(i, i).real() * t);
  }
  return {space, std::move(w)};
}

/// H_I(t) = W(t) (H~(t) - H0) W(t)^dagger, expanded into Fock-band terms
/// (Omega_i/2) e^{i(Delta_i + k omega_m) t} |e><g_i| (x) D_k, where D_k is the
/// k-th band of exp[-lambda (b' - b)]. Bands with all entries below
/// `band_cutoff` are dropped.
inline TimeDependentHamiltonian build_interaction_hamiltonian(const DriveParams& p, HilbertSpace space,
                                                              double band_cutoff = 1e-17) {
  p.validate();
  const double lambda = p.lamb_dicke();
  detail::warn_large_lamb_dicke(lambda);
  const int n = space.fock_cutoff();
  const DetuningSet d = detunings(p);
  const CMatrix dressing = phonon::displacement(-lambda, n);
  TimeDependentHamiltonian h(space);
  for (int k = -(n - 1); k <= n - 1; ++k) {
    const CMatrix bk = phonon::band(dressing, k);
    if (bk.cwiseAbs().maxCoeff() < band_cutoff) continue;
    if (p.Omega_1 != 0.0)
      h.add_hermitian_pair(0.5 * p.Omega_1 * detail::embed(Level::e, Level::g1, bk, space),
                           d.Delta_1 + k * p.omega_m);
    if (p.Omega_2 != 0.0)
      h.add_hermitian_pair(0.5 * p.Omega_2 * detail::embed(Level::e, Level::g2, bk, space),
                           d.Delta_2 + k * p.omega_m);
  }
  return h;
}

enum class Sideband { red, blue };

/// First-order Lamb-Dicke Hamiltonian keeping the near-resonant terms.
///
/// Red: (Omega_1/2) lambda (b e^{i(Delta_1 - w_m)t} |e><g1| + h.c.)
///      + (Omega_2/2)(e^{i Delta_2 t} |e><g2| + h.c.)
///
/// Blue keeps the b' term of the same expansion instead,
/// -(Omega_1/2) lambda b' e^{i(Delta_1 + w_m)t} |e><g1| + h.c. This variant is
/// an extrapolation of the red-sideband derivation.
inline TimeDependentHamiltonian lamb_dicke_hamiltonian(const DriveParams& p, HilbertSpace space,
                                                       Sideband sideband = Sideband::red) {
  p.validate();
  const int n = space.fock_cutoff();
  const double lambda = p.lamb_dicke();
  const DetuningSet d = detunings(p);
  TimeDependentHamiltonian h(space);
  if (sideband == Sideband::red) {
    h.add_hermitian_pair(0.5 * p.Omega_1 * lambda * detail::embed(Level::e, Level::g1, phonon::annihilation(n), space),
                         d.Delta_1 - p.omega_m);
  } else {
    h.add_hermitian_pair(-0.5 * p.Omega_1 * lambda * detail::embed(Level::e, Level::g1, phonon::creation(n), space),
                         d.Delta_1 + p.omega_m);
  }
  h.add_hermitian_pair(0.5 * p.Omega_2 * detail::embed(Level::e, Level::g2, phonon::identity(n), space), d.Delta_2);
  return h;
}

/// Omega_R = (g/omega_m) sqrt(n) Omega_1
inline double red_sideband_rabi(const DriveParams& p, double n) { return p.lamb_dicke() * std::sqrt(n) * p.Omega_1; }

/// Omega_ss = Omega_R Omega_pm / (2 |Delta|) after adiabatic elimination of |e>.
inline double effective_sideband_rabi(double Omega_R, double Omega_pm, double Delta) {
  if (Delta == 0.0) throw InvalidInput("adiabatic elimination requires Delta != 0");
  return Omega_R * Omega_pm / (2.0 * std::abs(Delta));
}

// ---- effective three-level (no phonon) forms ------------------------------

/// Lamb-Dicke Hamiltonian with the phonon replaced by its effective Rabi rate,
/// on a cutoff-1 space: (Omega_R/2)(e^{i Delta_R t}|e><g1| + h.c.)
/// + (Omega_2/2)(e^{i Delta_2 t}|e><g2| + h.c.).
inline TimeDependentHamiltonian effective_lambda_hamiltonian(const LambdaDriveParams& d) {
  const HilbertSpace space(1);
  const CMatrix id = phonon::identity(1);
  TimeDependentHamiltonian h(space);
  h.add_hermitian_pair(0.5 * d.Omega_R * detail::embed(Level::e, Level::g1, id, space), d.Delta_R);
  h.add_hermitian_pair(0.5 * d.Omega_2 * detail::embed(Level::e, Level::g2, id, space), d.Delta_2);
  return h;
}

/// Static rotating-frame form generating the coherent part of the density
/// matrix equations. Energies referenced to |g2>: E_e = Delta_2,
/// E_g1 = Delta_2 - Delta_R, E_g2 = 0.
inline TimeDependentHamiltonian rotating_lambda_hamiltonian(const LambdaDriveParams& d) {
  const HilbertSpace space(1);
  const CMatrix id = phonon::identity(1);
  TimeDependentHamiltonian h(space);
  h.add((d.Delta_2 - d.Delta_R) * detail::embed(Level::g1, Level::g1, id, space));
  h.add(d.Delta_2 * detail::embed(Level::e, Level::e, id, space));
  const OperatorMatrix c1 = 0.5 * d.Omega_R * detail::embed(Level::e, Level::g1, id, space);
  const OperatorMatrix c2 = 0.5 * d.Omega_2 * detail::embed(Level::e, Level::g2, id, space);
  h.add(c1 + c1.adjoint());
  h.add(c2 + c2.adjoint());
  return h;
}

}  // namespace sawspin
