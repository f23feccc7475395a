#pragma once

// Rotating-frame density-matrix equations of the driven Lambda system, their
// integration and steady state, and a Fock-resolved Lindblad cross-check.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "sawspin/hamiltonian.hpp"

namespace sawspin {

/// Decay rates in rad/us. Gamma = Gamma_1 + Gamma_2 and
/// gamma = Gamma / 2 + gamma_orb are derived, never stored.
struct RatesParams {
  double gamma_s = 0.0;    // spin coherence rho_21
  double gamma_orb = 0.0;  // orbital (optical) pure dephasing
  double Gamma_1 = 0.0;    // |e> -> |g1>
  double Gamma_2 = 0.0;    // |e> -> |g2>

  double Gamma() const { return Gamma_1 + Gamma_2; }
  double gamma() const { return 0.5 * Gamma() + gamma_orb; }

  void validate() const {
    for (double v : {gamma_s, gamma_orb, Gamma_1, Gamma_2})
      if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("rates must be finite and >= 0");
  }
};

using Matrix3c = Eigen::Matrix3cd;
using Vector9 = Eigen::Matrix<double, 9, 1>;
using Matrix9 = Eigen::Matrix<double, 9, 9>;

/// Real coordinates in the order
/// [rho_11, rho_22, rho_ee, Re rho_e1, Im rho_e1, Re rho_e2, Im rho_e2, Re rho_21, Im rho_21].
struct DensityMatrix3 {
  double rho_11 = 0.0;
  double rho_22 = 0.0;
  double rho_ee = 0.0;
  cplx rho_e1{};
  cplx rho_e2{};
  cplx rho_21{};

  static DensityMatrix3 ground(Level level) {
    DensityMatrix3 r;
    if (level == Level::g1) r.rho_11 = 1.0;
    if (level == Level::g2) r.rho_22 = 1.0;
    if (level == Level::e) r.rho_ee = 1.0;
    return r;
  }

  /// |psi><psi| for amplitudes on (|g1>, |g2>, |e>).
  static DensityMatrix3 pure(const Eigen::Vector3cd& psi) { return from_matrix(psi * psi.adjoint()); }

  static DensityMatrix3 from_matrix(const Matrix3c& m) {
    DensityMatrix3 r;
    r.rho_11 = m(0, 0).real();
    r.rho_22 = m(1, 1).real();
    r.rho_ee = m(2, 2).real();
    r.rho_e1 = m(2, 0);
    r.rho_e2 = m(2, 1);
    r.rho_21 = m(1, 0);
    return r;
  }

  Matrix3c matrix() const {
    Matrix3c m;
    m << rho_11, std::conj(rho_21), std::conj(rho_e1),
         rho_21, rho_22, std::conj(rho_e2),
         rho_e1, rho_e2, rho_ee;
    return m;
  }

  static DensityMatrix3 from_vector(const Vector9& x) {
    DensityMatrix3 r;
    r.rho_11 = x(0);
    r.rho_22 = x(1);
    r.rho_ee = x(2);
    r.rho_e1 = {x(3), x(4)};
    r.rho_e2 = {x(5), x(6)};
    r.rho_21 = {x(7), x(8)};
    return r;
  }

  Vector9 vector() const {
    Vector9 x;
    x << rho_11, rho_22, rho_ee, rho_e1.real(), rho_e1.imag(), rho_e2.real(), rho_e2.imag(), rho_21.real(),
        rho_21.imag();
    return x;
  }

  double trace() const { return rho_11 + rho_22 + rho_ee; }

  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix3c> es(matrix(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  bool is_valid(double tol = 1e-8) const {
    if (std::min({rho_11, rho_22, rho_ee}) < -1e-9) return false;
    if (std::abs(trace() - 1.0) > tol) return false;
    return std::norm(rho_e1) <= rho_ee * rho_11 + tol && std::norm(rho_e2) <= rho_ee * rho_22 + tol &&
           std::norm(rho_21) <= rho_22 * rho_11 + tol;
  }
};

/// Right-hand side of the six rotating-frame equations, written term by term.
inline DensityMatrix3 lindblad_rhs(const DensityMatrix3& rho, const LambdaDriveParams& d, const RatesParams& r) {
  const cplx i(0.0, 1.0);
  const double gamma = r.gamma();
  const cplx rho_12 = std::conj(rho.rho_21);
  const cplx rho_2e = std::conj(rho.rho_e2);
  const double hR = 0.5 * d.Omega_R;
  const double h2 = 0.5 * d.Omega_2;

  DensityMatrix3 out;
  out.rho_e1 = -(i * d.Delta_R + gamma) * rho.rho_e1 + i * hR * (rho.rho_ee - rho.rho_11) - i * h2 * rho.rho_21;
  out.rho_e2 = -(i * d.Delta_2 + gamma) * rho.rho_e2 + i * h2 * (rho.rho_ee - rho.rho_22) - i * hR * rho_12;
  out.rho_21 = -(i * (d.Delta_R - d.Delta_2) + r.gamma_s) * rho.rho_21 + i * hR * rho_2e - i * h2 * rho.rho_e1;
  const double pump_1 = 2.0 * (i * hR * rho.rho_e1).real();  // (i Omega_R/2 rho_e1 + c.c.)
  const double pump_2 = 2.0 * (i * h2 * rho.rho_e2).real();
  out.rho_ee = -r.Gamma() * rho.rho_ee + pump_1 + pump_2;
  out.rho_11 = r.Gamma_1 * rho.rho_ee - pump_1;
  out.rho_22 = r.Gamma_2 * rho.rho_ee - pump_2;
  return out;
}

/// The 9x9 real generator x' = L x, assembled column by column.
inline Matrix9 liouvillian(const LambdaDriveParams& d, const RatesParams& r) {
  Matrix9 l;
  for (int k = 0; k < 9; ++k) l.col(k) = lindblad_rhs(DensityMatrix3::from_vector(Vector9::Unit(k)), d, r).vector();
  return l;
}

/// exp(L dt): exact one-step map for a fixed drive.
inline Matrix9 transfer_matrix(const LambdaDriveParams& d, const RatesParams& r, double dt) {
  return (liouvillian(d, r) * dt).exp();
}

inline DensityMatrix3 propagate_exact(const DensityMatrix3& rho0, const LambdaDriveParams& d, const RatesParams& r,
                                      double t) {
  return DensityMatrix3::from_vector(transfer_matrix(d, r, t) * rho0.vector());
}

/// (1/T) integral_0^T rho(t) dt, from the exponential of the augmented
/// generator [[L T, x0], [0, 0]].
inline DensityMatrix3 time_average(const DensityMatrix3& rho0, const LambdaDriveParams& d, const RatesParams& r,
                                   double window) {
  if (!(window > 0.0)) throw InvalidInput("averaging window must be > 0");
  Eigen::Matrix<double, 10, 10> m = Eigen::Matrix<double, 10, 10>::Zero();
  m.topLeftCorner<9, 9>() = liouvillian(d, r) * window;
  m.block<9, 1>(0, 9) = rho0.vector();
  const Eigen::Matrix<double, 10, 10> e = m.exp();
  return DensityMatrix3::from_vector(e.block<9, 1>(0, 9));
}

/// Unique trace-one null vector of the Liouvillian.
inline DensityMatrix3 steady_state(const LambdaDriveParams& d, const RatesParams& r) {
  r.validate();
  const Matrix9 l = liouvillian(d, r);
  Eigen::JacobiSVD<Matrix9> svd(l);
  const auto& s = svd.singularValues();
  const double cut = 1e-12 * std::max(s(0), 1.0);
  int nullity = 0;
  for (int k = 0; k < 9; ++k)
    if (s(k) <= cut) ++nullity;
  if (nullity > 1) throw DegenerateSteadyState(nullity);

  Eigen::Matrix<double, 10, 9> a;
  a.topRows<9>() = l;
  a.row(9) << 1, 1, 1, 0, 0, 0, 0, 0, 0;
  Eigen::Matrix<double, 10, 1> b = Eigen::Matrix<double, 10, 1>::Zero();
  b(9) = 1.0;
  return DensityMatrix3::from_vector(a.colPivHouseholderQr().solve(b));
}

enum class IntegrationMethod { adaptive, fixed_rk4 };

struct EvolveOptions {
  IntegrationMethod method = IntegrationMethod::adaptive;
  double rtol = 1e-9;
  double atol = 1e-12;
  double fixed_step = 1e-3;  // us, for fixed_rk4
  int max_steps = 5'000'000;  // per output interval, adaptive only
};

/// Integrates the three-level master equation, returning one state per grid point (the
/// first grid point is the initial time).
inline std::vector<DensityMatrix3> evolve(const DensityMatrix3& rho0, const LambdaDriveParams& d,
                                          const RatesParams& r, const std::vector<double>& t_grid,
                                          const EvolveOptions& opt = {}) {
  namespace odeint = boost::numeric::odeint;
  r.validate();
  if (t_grid.empty()) return {};
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1])) throw InvalidInput("time grid must be strictly increasing");

  using State = std::array<double, 9>;
  const Matrix9 l = liouvillian(d, r);
  auto rhs = [&l](const State& x, State& dxdt, double) {
    Eigen::Map<Vector9>(dxdt.data()) = l * Eigen::Map<const Vector9>(x.data());
  };
  State x;
  Eigen::Map<Vector9>(x.data()) = rho0.vector();

  std::vector<DensityMatrix3> out;
  out.reserve(t_grid.size());
  auto to_rho = [](const State& s) { return DensityMatrix3::from_vector(Eigen::Map<const Vector9>(s.data())); };

  if (opt.method == IntegrationMethod::fixed_rk4) {
    if (!(opt.fixed_step > 0.0)) throw InvalidInput("fixed_step must be > 0");
    odeint::runge_kutta4<State> stepper;
    out.push_back(to_rho(x));
    for (std::size_t k = 1; k < t_grid.size(); ++k) {
      const double span = t_grid[k] - t_grid[k - 1];
      const int n = std::max(1, static_cast<int>(std::ceil(span / opt.fixed_step - 1e-9)));
      const double h = span / n;
      double t = t_grid[k - 1];
      for (int s = 0; s < n; ++s, t += h) stepper.do_step(rhs, x, t, h);
      out.push_back(to_rho(x));
    }
    return out;
  }

  try {
    auto stepper = odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State>());
    const double span = t_grid.back() - t_grid.front();
    const double dt0 = span > 0.0 ? std::min(span, 1e-3) : 1e-3;
    odeint::integrate_times(
        stepper, rhs, x, t_grid.begin(), t_grid.end(), dt0,
        [&](const State& s, double) { out.push_back(to_rho(s)); }, odeint::max_step_checker(opt.max_steps));
  } catch (const std::runtime_error& e) {
    throw IntegrationError(std::string("master-equation integration failed: ") + e.what());
  }
  return out;
}

/// Least-squares slope of -log|rho_21(t)| over a uniform window, from the
/// exact propagator: the decay rate of the ground-state coherence.
inline double fitted_coherence_decay_rate(const DensityMatrix3& rho0, const LambdaDriveParams& d,
                                          const RatesParams& r, double window, int points = 41) {
  if (!(window > 0.0) || points < 3) throw InvalidInput("coherence fit needs window > 0 and >= 3 points");
  const double dt = window / (points - 1);
  const Matrix9 step = transfer_matrix(d, r, dt);
  Vector9 x = rho0.vector();
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (int k = 0; k < points; ++k) {
    const double t = k * dt;
    const double mag = std::abs(DensityMatrix3::from_vector(x).rho_21);
    if (!(mag > 0.0)) throw InvalidInput("ground coherence vanished during the fit window");
    const double y = std::log(mag);
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
    x = step * x;
  }
  const double slope = (points * sty - st * sy) / (points * stt - st * st);
  return -slope;
}

// ---- Fock-resolved Lindblad model -------------------------------------------

struct FockEvolveOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  /// Largest admissible population on the top Fock level along the run.
  double edge_tolerance = 1e-6;
  double max_step = 0.0;  // us; 0 = unbounded
};

/// Collapse operators reproducing the three-level damping on every Fock sector:
/// sqrt(Gamma_1)|g1><e|, sqrt(Gamma_2)|g2><e|, and two diagonal dephasing
/// channels giving rho_21 the rate gamma_s and rho_e1, rho_e2 the rate
/// gamma = Gamma/2 + gamma_orb.
inline std::vector<OperatorMatrix> collapse_operators(const RatesParams& r, HilbertSpace space) {
  r.validate();
  const CMatrix id = phonon::identity(space.fock_cutoff());
  const double c2 = 0.5 * r.gamma_s;
  const double h2 = 2.0 * r.gamma_orb - c2;
  if (h2 < -1e-15) throw InvalidInput("Fock-resolved model needs 2 gamma_orb >= gamma_s / 2");
  std::vector<OperatorMatrix> ops;
  if (r.Gamma_1 > 0.0)
    ops.push_back(std::sqrt(r.Gamma_1) * tensor_embed(electronic::transition(Level::g1, Level::e), id, space));
  if (r.Gamma_2 > 0.0)
    ops.push_back(std::sqrt(r.Gamma_2) * tensor_embed(electronic::transition(Level::g2, Level::e), id, space));
  if (c2 > 0.0) {
    CMatrix a = CMatrix::Zero(3, 3);
    a(0, 0) = -std::sqrt(c2);
    a(1, 1) = std::sqrt(c2);
    ops.push_back(tensor_embed(a, id, space));
  }
  if (h2 > 0.0) {
    CMatrix b = CMatrix::Zero(3, 3);
    b(2, 2) = std::sqrt(h2);
    ops.push_back(tensor_embed(b, id, space));
  }
  return ops;
}

/// Lindblad evolution under H(t) with the equivalent collapse operators;
/// the phonon mode is lossless. Throws CutoffError if the top Fock level
/// picks up more than edge_tolerance population.
inline std::vector<DensityMatrixFull> fock_resolved_evolve(const DensityMatrixFull& rho0,
                                                           const TimeDependentHamiltonian& h,
                                                           const RatesParams& r, const std::vector<double>& t_grid,
                                                           const FockEvolveOptions& opt = {}) {
  namespace odeint = boost::numeric::odeint;
  const HilbertSpace space = rho0.space();
  if (!(space == h.space())) throw InvalidInput("state and Hamiltonian live on different spaces");
  if (t_grid.empty()) return {};
  for (std::size_t k = 1; k < t_grid.size(); ++k)
    if (!(t_grid[k] > t_grid[k - 1])) throw InvalidInput("time grid must be strictly increasing");

  const int dim = space.total_dim();
  const auto ops = collapse_operators(r, space);
  CMatrix lhl = CMatrix::Zero(dim, dim);
  for (const auto& op : ops) lhl += op.entries().adjoint() * op.entries();
  const CMatrix anti = 0.5 * lhl;

  using State = std::vector<cplx>;
  auto rhs = [&](const State& x, State& dxdt, double t) {
    Eigen::Map<const CMatrix> rho(x.data(), dim, dim);
    Eigen::Map<CMatrix> drho(dxdt.data(), dim, dim);
    const CMatrix heff = h.at(t) - cplx(0.0, 1.0) * anti;  // non-Hermitian part carries -1/2{L'L, rho}
    CMatrix hr = heff * rho;
    drho = cplx(0.0, -1.0) * (hr - hr.adjoint());
    for (const auto& op : ops) drho += op.entries() * rho * op.entries().adjoint();
  };

  State x(rho0.entries().data(), rho0.entries().data() + dim * dim);
  std::vector<DensityMatrixFull> out;
  out.reserve(t_grid.size());
  const int top = space.fock_cutoff() - 1;
  auto record = [&](const State& s, double) {
    DensityMatrixFull rho(space, Eigen::Map<const CMatrix>(s.data(), dim, dim));
    if (space.fock_cutoff() > 1) {
      const double edge = rho.population_above(top);
      if (edge > opt.edge_tolerance)
        throw CutoffError("Fock cutoff " + std::to_string(space.fock_cutoff()) + " too small: top-level population " +
                          std::to_string(edge));
    }
    out.push_back(std::move(rho));
  };

  try {
    auto stepper = odeint::make_controlled(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<State>());
    const double span = t_grid.back() - t_grid.front();
    double dt0 = span > 0.0 ? std::min(span, 1e-4) : 1e-4;
    if (opt.max_step > 0.0) {
      // Split the grid so no single output interval exceeds max_step; only
      // requested points are recorded.
      std::vector<double> fine{t_grid.front()};
      std::vector<bool> keep{true};
      for (std::size_t k = 1; k < t_grid.size(); ++k) {
        const double span_k = t_grid[k] - t_grid[k - 1];
        const int n = std::max(1, static_cast<int>(std::ceil(span_k / opt.max_step)));
        for (int s = 1; s <= n; ++s) {
          fine.push_back(s == n ? t_grid[k] : t_grid[k - 1] + span_k * s / n);
          keep.push_back(s == n);
        }
      }
      std::size_t idx = 0;
      odeint::integrate_times(stepper, rhs, x, fine.begin(), fine.end(), dt0, [&](const State& s, double t) {
        if (keep[idx++]) record(s, t);
      });
    } else {
      odeint::integrate_times(stepper, rhs, x, t_grid.begin(), t_grid.end(), dt0, record);
    }
  } catch (const CutoffError&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw IntegrationError(std::string("Fock-resolved integration failed: ") + e.what());
  }
  return out;
}

}  // namespace sawspin
