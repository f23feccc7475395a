#pragma once

// Time-domain sideband experiments: pulse sequences, the resonant versus
// detuned transfer curves, their joint fit for the decay branch into m_s = +-1
// and the sideband Rabi frequency, and the detuning budget of pumping and
// optically induced decoherence.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sawspin/dynamics.hpp"
#include "sawspin/optimize.hpp"
#include "sawspin/parallel.hpp"
#include "sawspin/spectra.hpp"
#include "sawspin/units.hpp"

namespace sawspin {

namespace field {
inline constexpr unsigned none = 0;
inline constexpr unsigned init = 1;      // green repump: projects onto m_s = 0
inline constexpr unsigned drive_0 = 2;   // optical field on the m_s = 0 transition (Omega_R)
inline constexpr unsigned drive_pm = 4;  // optical field on the m_s = +-1 transition (Omega_2)
inline constexpr unsigned readout = 8;   // A2 probe: records the m_s = +-1 population
}  // namespace field

struct PulseSegment {
  double duration;  // us
  unsigned fields = field::none;
  bool swept = false;
};

struct PulseSequence {
  std::vector<PulseSegment> segments;

  /// init, swept optical pulse with both fields, readout.
  static PulseSequence standard(double init_us = 1.0, double readout_us = 1.0) {
    return {{{init_us, field::init, false},
             {1.0, field::drive_0 | field::drive_pm, true},
             {readout_us, field::readout, false}}};
  }

  std::size_t swept_index() const {
    std::optional<std::size_t> idx;
    for (std::size_t k = 0; k < segments.size(); ++k) {
      if (!(segments[k].duration > 0.0)) throw InvalidInput("pulse segment durations must be > 0");
      if (segments[k].swept) {
        if (idx) throw InvalidInput("pulse sequence must have exactly one swept segment");
        idx = k;
      }
    }
    if (!idx) throw InvalidInput("pulse sequence must have exactly one swept segment");
    return *idx;
  }

  void validate() const {
    const std::size_t s = swept_index();
    bool init_before = false, readout_after = false;
    for (std::size_t k = 0; k < s; ++k) init_before |= (segments[k].fields & field::init) != 0;
    for (std::size_t k = s + 1; k < segments.size(); ++k) readout_after |= (segments[k].fields & field::readout) != 0;
    if (!init_before) throw InvalidInput("pulse sequence needs an init segment before the swept segment");
    if (!readout_after) throw InvalidInput("pulse sequence needs a readout segment after the swept segment");
    if (segments[s].fields & (field::init | field::readout)) throw InvalidInput("the swept segment must be an optical drive");
  }
};

struct TransientOptions {
  int target_m_s = 1;  // configuration held at Raman resonance
  int target_m_n = 1;
  /// Extra two-photon detuning added to the resonant condition (the control curve).
  double raman_offset = 0.0;
  unsigned threads = 1;
  bool keep_per_configuration = false;
};

/// Everything needed to re-simulate a curve, kept with the result.
struct TransientExperiment {
  PulseSequence sequence;
  NVLevelStructure levels;
  LambdaDriveParams drive;  // Delta_R is the common dipole detuning
  RatesParams rates;
  TransientOptions options;
};

struct TransientFit {
  double decay_to_pm = 0.0;  // fitted |e> -> m_s = +-1 rate
  double Omega_R = 0.0;      // fitted, shared by both optical fields
  double Omega_ss = 0.0;     // implied sideband Rabi frequency
  double amplitude = 0.0;    // readout scale, shared by both curves
  double offset = 0.0;
  double residual_rms = 0.0;
  double sigma_decay_to_pm = 0.0;
  double sigma_Omega_R = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  bool converged = false;
  int evaluations = 0;
  /// (decay_to_pm, Omega_R, sum of squares) samples over the start box; filled when not converged.
  std::vector<std::array<double, 3>> landscape;
};

struct TransientResult {
  std::vector<double> durations;  // us
  std::vector<double> signal;     // m_s = +-1 population, averaged over nuclear projections
  std::vector<std::vector<double>> per_configuration;
  TransientExperiment experiment;
  std::optional<TransientFit> fit;
};

namespace detail {

inline LambdaDriveParams segment_drive(const LambdaDriveParams& d, unsigned fields) {
  return {(fields & field::drive_0) ? d.Omega_R : 0.0, (fields & field::drive_pm) ? d.Omega_2 : 0.0, d.Delta_R,
          d.Delta_2};
}

/// rho_22 at readout for each duration of the swept segment, one configuration.
inline std::vector<double> transfer_curve(const PulseSequence& seq, const LambdaDriveParams& d, const RatesParams& r,
                                          const std::vector<double>& durations) {
  const std::size_t s = seq.swept_index();
  std::size_t last_init = 0;
  for (std::size_t k = 0; k < s; ++k)
    if (seq.segments[k].fields & field::init) last_init = k;
  Vector9 x = DensityMatrix3::ground(Level::g1).vector();
  for (std::size_t k = last_init + 1; k < s; ++k)
    x = transfer_matrix(segment_drive(d, seq.segments[k].fields), r, seq.segments[k].duration) * x;

  Matrix9 after = Matrix9::Identity();
  for (std::size_t k = s + 1; k < seq.segments.size(); ++k) {
    if (seq.segments[k].fields & field::readout) break;
    after = transfer_matrix(segment_drive(d, seq.segments[k].fields), r, seq.segments[k].duration) * after;
  }

  const LambdaDriveParams swept = segment_drive(d, seq.segments[s].fields);
  const Matrix9 l = liouvillian(swept, r);
  std::vector<double> out(durations.size());
  double t = 0.0, last_dt = -1.0;
  Matrix9 step;
  for (std::size_t k = 0; k < durations.size(); ++k) {
    const double dt = durations[k] - t;
    if (dt != 0.0) {
      if (std::abs(dt - last_dt) > 1e-12 * std::abs(dt)) {
        step = (l * dt).exp();
        last_dt = dt;
      }
      x = step * x;
      t = durations[k];
    }
    out[k] = DensityMatrix3::from_vector(after * x).rho_22;
  }
  return out;
}

}  // namespace detail

inline void validate_durations(const std::vector<double>& durations) {
  if (durations.empty()) throw InvalidInput("empty duration grid");
  if (durations.front() < 0.0) throw InvalidInput("durations must be >= 0");
  for (std::size_t k = 1; k < durations.size(); ++k)
    if (!(durations[k] > durations[k - 1])) throw InvalidInput("duration grid must be strictly increasing");
}

inline TransientResult run_transient(const TransientExperiment& ex, const std::vector<double>& durations) {
  ex.sequence.validate();
  ex.levels.validate();
  ex.rates.validate();
  validate_durations(durations);
  const auto configs = ex.levels.configurations();
  double target = 0.0;
  bool found = false;
  for (const auto& c : configs)
    if (c.m_s == ex.options.target_m_s && c.m_n == ex.options.target_m_n) {
      target = c.offset;
      found = true;
    }
  if (!found) throw InvalidInput("target configuration must have m_s in {-1, 1} and m_n in {-1, 0, 1}");
  const double axis_value = target + ex.options.raman_offset;

  std::vector<std::vector<double>> curves(configs.size());
  parallel_for(configs.size(), ex.options.threads, [&](std::size_t c) {
    const auto d = configuration_drive(ex.drive.Omega_R, ex.drive.Omega_2, ex.drive.Delta_R, axis_value, configs[c]);
    curves[c] = detail::transfer_curve(ex.sequence, d, ex.rates, durations);
  });

  TransientResult out;
  out.durations = durations;
  out.experiment = ex;
  out.signal.resize(durations.size());
  // each nuclear projection carries weight 1/3; both m_s branches are read out
  const double weight = 1.0 / 3.0;
  for (std::size_t k = 0; k < durations.size(); ++k) {
    std::vector<double> row(configs.size());
    for (std::size_t c = 0; c < configs.size(); ++c) row[c] = curves[c][k];
    out.signal[k] = weight * pairwise_sum(row);
  }
  if (ex.options.keep_per_configuration) out.per_configuration = std::move(curves);
  return out;
}

inline TransientResult run_transient(const PulseSequence& seq, const NVLevelStructure& levels,
                                     const LambdaDriveParams& drive, const RatesParams& rates,
                                     const std::vector<double>& durations, const TransientOptions& opt = {}) {
  return run_transient(TransientExperiment{seq, levels, drive, rates, opt}, durations);
}

/// Gaussian noise of standard deviation `relative` * max|signal|, seeded.
inline TransientResult with_noise(TransientResult r, double relative, unsigned long long seed) {
  double scale = 0.0;
  for (double v : r.signal) scale = std::max(scale, std::abs(v));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, relative * scale);
  for (double& v : r.signal) v += noise(rng);
  return r;
}

struct TransientFitOptions {
  /// Log-scaled start box for (decay_to_pm, Omega_R), rad/us.
  std::array<double, 2> decay_box{units::mhz(0.3), units::mhz(10.0)};
  std::array<double, 2> omega_box{units::mhz(2.0), units::mhz(30.0)};
  int starts = 5;
  int max_evaluations_per_start = 600;
};

namespace detail {

struct PairModel {
  const TransientResult& on;
  const TransientResult& off;
  RatesParams fixed;

  std::vector<double> shape(double decay_to_pm, double omega) const {
    auto simulate = [&](const TransientResult& ref) {
      TransientExperiment ex = ref.experiment;
      ex.rates = fixed;
      ex.rates.Gamma_2 = decay_to_pm;
      ex.drive.Omega_R = omega;
      ex.drive.Omega_2 = omega;
      ex.options.keep_per_configuration = false;
      return run_transient(ex, ref.durations).signal;
    };
    auto a = simulate(on);
    const auto b = simulate(off);
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }

  std::vector<double> data() const {
    auto y = on.signal;
    y.insert(y.end(), off.signal.begin(), off.signal.end());
    return y;
  }
};

/// Least-squares readout scale and offset for a fixed shape.
inline std::array<double, 2> linear_scale(const std::vector<double>& shape, const std::vector<double>& y) {
  const double n = static_cast<double>(y.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    sx += shape[k];
    sy += y[k];
    sxx += shape[k] * shape[k];
    sxy += shape[k] * y[k];
  }
  const double det = n * sxx - sx * sx;
  if (!(std::abs(det) > 1e-300)) return {0.0, sy / n};
  return {(n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det};
}

inline double sum_squares(const std::vector<double>& shape, const std::vector<double>& y, std::array<double, 2> ab) {
  double s = 0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double e = ab[0] * shape[k] + ab[1] - y[k];
    s += e * e;
  }
  return s;
}

}  // namespace detail

/// Joint least-squares fit of the resonant and detuned curves with one
/// shared Rabi frequency on both fields and a free decay branch into m_s = +-1.
/// All other rates come from `fixed`; readout scale and offset are shared
/// and solved linearly.
inline TransientFit fit_transient_pair(const TransientResult& on, const TransientResult& off, const RatesParams& fixed,
                                       const TransientFitOptions& opt = {}) {
  if (on.durations != off.durations) throw InvalidInput("transient pair must share the duration grid");
  if (on.durations.size() < 5) throw InvalidInput("transient fit needs at least 5 durations");
  if (opt.starts < 1) throw InvalidInput("transient fit needs at least one start");
  const detail::PairModel model{on, off, fixed};
  const auto y = model.data();
  int evaluations = 0;
  auto objective = [&](const std::vector<double>& logp) {
    ++evaluations;
    const auto s = model.shape(std::exp(logp[0]), std::exp(logp[1]));
    return detail::sum_squares(s, y, detail::linear_scale(s, y));
  };

  const double l0 = std::log(opt.decay_box[0]), l1 = std::log(opt.decay_box[1]);
  const double m0 = std::log(opt.omega_box[0]), m1 = std::log(opt.omega_box[1]);
  // box center, then quadrant centers
  const std::array<std::array<double, 2>, 5> fractions{{{0.5, 0.5}, {0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}}};
  SimplexOptions sopt;
  sopt.initial_step = 0.3;
  sopt.max_evaluations = opt.max_evaluations_per_start;
  SimplexResult best{{}, std::numeric_limits<double>::infinity(), 0, false};
  for (int k = 0; k < opt.starts; ++k) {
    const auto f = fractions[static_cast<std::size_t>(k) % fractions.size()];
    std::vector<double> x0{l0 + f[0] * (l1 - l0), m0 + f[1] * (m1 - m0)};
    auto r = nelder_mead(objective, x0, sopt);
    if (r.value < best.value) best = r;
  }

  TransientFit fit;
  fit.decay_to_pm = std::exp(best.x[0]);
  fit.Omega_R = std::exp(best.x[1]);
  fit.Omega_ss = effective_sideband_rabi(fit.Omega_R, fit.Omega_R, on.experiment.drive.Delta_R);
  const auto shape = model.shape(fit.decay_to_pm, fit.Omega_R);
  const auto ab = detail::linear_scale(shape, y);
  fit.amplitude = ab[0];
  fit.offset = ab[1];
  fit.residual_rms = std::sqrt(best.value / static_cast<double>(y.size()));
  fit.converged = best.converged && std::isfinite(best.value) && ab[0] > 0.0;
  fit.evaluations = evaluations;

  // covariance from a central-difference Jacobian in (decay, Omega, amplitude, offset)
  const std::size_t m = y.size();
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(m), 4);
  const std::array<double, 2> p{fit.decay_to_pm, fit.Omega_R};
  for (int j = 0; j < 2; ++j) {
    const double h = 1e-5 * p[j];
    auto pp = p, pm = p;
    pp[j] += h;
    pm[j] -= h;
    const auto sp = model.shape(pp[0], pp[1]), sm = model.shape(pm[0], pm[1]);
    for (std::size_t k = 0; k < m; ++k) jac(static_cast<Eigen::Index>(k), j) = ab[0] * (sp[k] - sm[k]) / (2 * h);
  }
  for (std::size_t k = 0; k < m; ++k) {
    jac(static_cast<Eigen::Index>(k), 2) = shape[k];
    jac(static_cast<Eigen::Index>(k), 3) = 1.0;
  }
  const double s2 = best.value / static_cast<double>(m - 4);
  const Eigen::Matrix4d jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::Matrix4d> lu(jtj);
  if (lu.isInvertible()) {
    const Eigen::Matrix4d cov = s2 * lu.inverse();
    fit.covariance = cov.topLeftCorner<2, 2>();
    fit.sigma_decay_to_pm = std::sqrt(std::max(0.0, cov(0, 0)));
    fit.sigma_Omega_R = std::sqrt(std::max(0.0, cov(1, 1)));
  } else {
    fit.converged = false;
  }

  if (!fit.converged) {
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) {
        const double a = std::exp(l0 + (l1 - l0) * i / 4.0), b = std::exp(m0 + (m1 - m0) * j / 4.0);
        fit.landscape.push_back({a, b, objective({std::log(a), std::log(b)})});
      }
  }
  return fit;
}

// ---- detuning budget ---------------------------------------------------------

struct BudgetRow {
  double Delta;
  double Omega_ss;
  double excited_population;  // steady rho_ee
  double pumping_rate;        // Gamma * rho_ee
  double induced_decoherence; // fitted ground-coherence decay with gamma_s = 0
};

struct BudgetOptions {
  /// Two-photon detuning of the probe: away from the dark resonance.
  double two_photon_detuning = units::mhz(6.5);
  int window_refinements = 4;
  unsigned threads = 1;
};

/// Rates versus common dipole detuning at fixed Rabi frequencies.
/// Decoherence: |rho_21| decay from (|g1> + |g2>)/sqrt(2), fit over a window
/// iterated towards one decay time.
inline std::vector<BudgetRow> decoherence_budget(const LambdaDriveParams& drive, const RatesParams& rates,
                                                 const std::vector<double>& Delta_grid, const BudgetOptions& opt = {}) {
  rates.validate();
  const double omega = std::max(std::abs(drive.Omega_R), std::abs(drive.Omega_2));
  for (double D : Delta_grid)
    if (!(std::abs(D) >= 5.0 * omega)) throw InvalidInput("budget needs |Delta| >= 5 * max Rabi frequency");
  RatesParams optical = rates;
  optical.gamma_s = 0.0;
  const DensityMatrix3 plus = DensityMatrix3::pure(Eigen::Vector3cd(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), 0.0));

  std::vector<BudgetRow> rows(Delta_grid.size());
  parallel_for(Delta_grid.size(), opt.threads, [&](std::size_t k) {
    const double D = Delta_grid[k];
    const LambdaDriveParams d{drive.Omega_R, drive.Omega_2, D, D - opt.two_photon_detuning};
    BudgetRow row;
    row.Delta = D;
    row.Omega_ss = effective_sideband_rabi(drive.Omega_R, drive.Omega_2, D);
    row.excited_population = steady_state(d, rates).rho_ee;
    row.pumping_rate = rates.Gamma() * row.excited_population;
    double window = 10.0;
    double rate = 0.0;
    for (int it = 0; it < opt.window_refinements; ++it) {
      rate = fitted_coherence_decay_rate(plus, d, optical, window);
      if (!(rate > 0.0)) break;
      window = std::clamp(1.0 / rate, 1.0, 1e5);
    }
    row.induced_decoherence = rate;
    rows[k] = row;
  });
  return rows;
}

/// Least-squares slope of log|y| against log|x|.
inline double log_log_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("slope needs two equal-length series of >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double a = std::log(std::abs(x[k])), b = std::log(std::abs(y[k]));
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace sawspin
