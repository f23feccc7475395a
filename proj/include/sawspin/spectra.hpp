#pragma once

// Spectral-domain observables of the NV Lambda system: the phonon-assisted
// CPT spectrum and the hyperfine-resolved sideband spin-transition spectrum,
// with Zeeman and hyperfine structure and spectral-diffusion averaging.
//
// Axis convention: delta = omega_0 + omega_m - omega_pm measured from the
// m_s = +-1 centroid resonance. Configuration c (m_s, m_n) has Raman offset
// o_c = m_s * omega_B / 2 + m_s * m_n * A_hf and two-photon detuning
// Delta_R - Delta_2 = o_c - delta, so its Raman resonance sits at delta = o_c.

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sawspin/dynamics.hpp"
#include "sawspin/parallel.hpp"
#include "sawspin/units.hpp"

namespace sawspin {

struct LambdaConfiguration {
  int m_s;
  int m_n;
  double offset;  // Raman resonance position on the delta axis, rad/us
};

struct NVLevelStructure {
  double omega_B = units::mhz(24.0);
  double A_hf = units::mhz(2.2);
  /// m_s = 0 <-> m_s = +-1 centroid splitting; enters only the axis origin.
  double base_splitting = units::mhz(2880.0);

  /// Six configurations sorted by offset.
  std::vector<LambdaConfiguration> configurations() const {
    std::vector<LambdaConfiguration> out;
    for (int ms : {-1, 1})
      for (int mn : {-1, 0, 1}) out.push_back({ms, mn, ms * 0.5 * omega_B + ms * mn * A_hf});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.offset < b.offset; });
    return out;
  }

  void validate() const {
    if (!(omega_B >= 0.0) || !(A_hf >= 0.0)) throw InvalidInput("level splittings must be >= 0");
  }
};

enum class DiffusionSampling { random, stratified };

struct DiffusionModel {
  double fwhm = units::mhz(140.0);
  int n_samples = 200;
  unsigned long long seed = 7;
  DiffusionSampling sampling = DiffusionSampling::random;
  /// Interpret `fwhm` as the standard deviation instead.
  bool width_is_sigma = false;

  double sigma() const { return width_is_sigma ? fwhm : fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0))); }

  void validate() const {
    if (!(fwhm >= 0.0)) throw InvalidInput("diffusion width must be >= 0");
    if (n_samples < 1) throw InvalidInput("diffusion needs n_samples >= 1");
  }

  /// Common dipole-detuning shifts, deterministic in (seed, sampling).
  std::vector<double> draws() const {
    validate();
    if (fwhm == 0.0) return {0.0};
    std::vector<double> out(static_cast<std::size_t>(n_samples));
    const double s = sigma();
    if (sampling == DiffusionSampling::stratified) {
      const boost::math::normal_distribution<double> unit;
      for (int k = 0; k < n_samples; ++k) out[k] = s * boost::math::quantile(unit, (k + 0.5) / n_samples);
    } else {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> dist(0.0, s);
      for (auto& v : out) v = dist(rng);
    }
    return out;
  }
};

/// Wraps a model f(axis_value, common_shift) into its diffusion average
/// g(axis_value) = mean_s f(axis_value, shift_s). Both optical fields move
/// together, so the two-photon detuning is unaffected.
template <class Model>
auto diffusion_average(Model model, const DiffusionModel& diffusion) {
  return [model = std::move(model), shifts = diffusion.draws()](double axis_value) {
    std::vector<double> v(shifts.size());
    for (std::size_t k = 0; k < shifts.size(); ++k) v[k] = model(axis_value, shifts[k]);
    return pairwise_mean(v);
  };
}

struct SpectrumResult {
  std::vector<double> axis;    // rad/us
  std::vector<double> signal;  // arbitrary units
  /// Optional per-configuration signals, one vector per configuration.
  std::vector<std::vector<double>> per_configuration;
  std::vector<LambdaConfiguration> configurations;
  int averaging_count = 1;
  unsigned long long seed = 0;
  std::map<std::string, std::string> metadata;
};

/// Uniform grid start, start + step, ... up to stop (inclusive within 1e-9 step).
inline std::vector<double> uniform_axis(double start, double stop, double step) {
  if (!(step > 0.0) || !(stop >= start)) throw InvalidInput("axis needs step > 0 and stop >= start");
  const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> axis(n);
  for (std::size_t k = 0; k < n; ++k) axis[k] = start + step * static_cast<double>(k);
  return axis;
}

inline void validate_axis(const std::vector<double>& axis) {
  if (axis.empty()) throw InvalidInput("empty axis");
  for (std::size_t k = 1; k < axis.size(); ++k)
    if (!(axis[k] > axis[k - 1])) throw InvalidInput("axis must be strictly increasing");
}

/// Effective drive of one configuration for the common one-photon detuning
/// `Delta` and axis value `delta`.
inline LambdaDriveParams configuration_drive(double Omega_R, double Omega_2, double Delta, double delta,
                                             const LambdaConfiguration& c) {
  return {Omega_R, Omega_2, Delta, Delta - (c.offset - delta)};
}

struct CptOptions {
  double window = 10.0;  // us
  unsigned threads = 1;
  bool keep_per_configuration = false;
};

/// Gamma * (1/T) integral_0^T rho_ee dt from rho_11 = 1, averaged over the
/// six configurations and the diffusion draws. `drive.Delta_R` is the common
/// one-photon detuning of both fields; `drive.Delta_2` is ignored.
inline SpectrumResult cpt_spectrum(const NVLevelStructure& levels, const LambdaDriveParams& drive,
                                   const RatesParams& rates, const DiffusionModel& diffusion,
                                   const std::vector<double>& axis, const CptOptions& opt = {}) {
  levels.validate();
  rates.validate();
  validate_axis(axis);
  if (!(opt.window > 0.0)) throw InvalidInput("CPT window must be > 0");
  const auto configs = levels.configurations();
  const auto shifts = diffusion.draws();
  const DensityMatrix3 rho0 = DensityMatrix3::ground(Level::g1);

  // values[point][config][sample]
  const std::size_t nc = configs.size(), ns = shifts.size();
  std::vector<double> values(axis.size() * nc * ns);
  parallel_for(axis.size() * nc, opt.threads, [&](std::size_t job) {
    const std::size_t p = job / nc, c = job % nc;
    for (std::size_t s = 0; s < ns; ++s) {
      const auto d = configuration_drive(drive.Omega_R, drive.Omega_2, drive.Delta_R + shifts[s], axis[p], configs[c]);
      values[(p * nc + c) * ns + s] = rates.Gamma() * time_average(rho0, d, rates, opt.window).rho_ee;
    }
  });

  SpectrumResult out;
  out.axis = axis;
  out.configurations = configs;
  out.averaging_count = static_cast<int>(ns);
  out.seed = diffusion.seed;
  out.signal.resize(axis.size());
  if (opt.keep_per_configuration) out.per_configuration.assign(nc, std::vector<double>(axis.size()));
  for (std::size_t p = 0; p < axis.size(); ++p) {
    std::vector<double> per_config(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      per_config[c] = pairwise_mean(std::span<const double>(values).subspan((p * nc + c) * ns, ns));
      if (opt.keep_per_configuration) out.per_configuration[c][p] = per_config[c];
    }
    out.signal[p] = pairwise_mean(per_config);
  }
  return out;
}

struct SidebandOptions {
  double pulse_duration = 2.0;  // us
  /// Two-photon offset of the background reference, pushed away from resonance.
  double background_offset = units::mhz(6.5);
  bool subtract_background = true;
  unsigned threads = 1;
  bool keep_per_configuration = false;
};

/// m_s = +-1 population (rho_22) after the optical pulse, summed over the six
/// configurations. `drive.Delta_R` is the common dipole detuning Delta.
/// The optical-pumping background of each configuration is its signal with
/// the two-photon detuning moved `background_offset` further from resonance.
inline SpectrumResult sideband_spectrum(const NVLevelStructure& levels, const LambdaDriveParams& drive,
                                        const RatesParams& rates, const std::vector<double>& axis,
                                        const SidebandOptions& opt = {}) {
  levels.validate();
  rates.validate();
  validate_axis(axis);
  if (!(opt.pulse_duration > 0.0)) throw InvalidInput("pulse duration must be > 0");
  const auto configs = levels.configurations();
  const std::size_t nc = configs.size();
  const DensityMatrix3 rho0 = DensityMatrix3::ground(Level::g1);
  auto population = [&](const LambdaDriveParams& d) { return propagate_exact(rho0, d, rates, opt.pulse_duration).rho_22; };

  std::vector<double> values(axis.size() * nc);
  parallel_for(axis.size() * nc, opt.threads, [&](std::size_t job) {
    const std::size_t p = job / nc, c = job % nc;
    const auto d = configuration_drive(drive.Omega_R, drive.Omega_2, drive.Delta_R, axis[p], configs[c]);
    double v = population(d);
    if (opt.subtract_background) {
      const double two_photon = d.Delta_R - d.Delta_2;
      const double pushed = two_photon + (two_photon >= 0.0 ? 1.0 : -1.0) * opt.background_offset;
      v -= population({d.Omega_R, d.Omega_2, d.Delta_R, d.Delta_R - pushed});
    }
    values[p * nc + c] = v;
  });

  SpectrumResult out;
  out.axis = axis;
  out.configurations = configs;
  out.signal.resize(axis.size());
  if (opt.keep_per_configuration) out.per_configuration.assign(nc, std::vector<double>(axis.size()));
  for (std::size_t p = 0; p < axis.size(); ++p) {
    const auto row = std::span<const double>(values).subspan(p * nc, nc);
    out.signal[p] = pairwise_sum(row);
    if (opt.keep_per_configuration)
      for (std::size_t c = 0; c < nc; ++c) out.per_configuration[c][p] = row[c];
  }
  return out;
}

// ---- extrema --------------------------------------------------------------

/// Indices of strict interior local minima.
inline std::vector<std::size_t> local_minima(const std::vector<double>& y) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 1; k + 1 < y.size(); ++k)
    if (y[k] < y[k - 1] && y[k] < y[k + 1]) idx.push_back(k);
  return idx;
}

inline std::vector<std::size_t> local_maxima(const std::vector<double>& y) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 1; k + 1 < y.size(); ++k)
    if (y[k] > y[k - 1] && y[k] > y[k + 1]) idx.push_back(k);
  return idx;
}

struct CptDips {
  double lower;  // axis value of the deepest minimum with delta < 0
  double upper;  // ... with delta > 0
  double separation() const { return upper - lower; }
};

/// The deepest local minimum in each half of the axis; these are the two
/// Zeeman-branch dips.
inline CptDips find_cpt_dips(const SpectrumResult& s) {
  const auto minima = local_minima(s.signal);
  std::ptrdiff_t lo = -1, hi = -1;
  for (std::size_t k : minima) {
    if (s.axis[k] < 0.0 && (lo < 0 || s.signal[k] < s.signal[lo])) lo = static_cast<std::ptrdiff_t>(k);
    if (s.axis[k] > 0.0 && (hi < 0 || s.signal[k] < s.signal[hi])) hi = static_cast<std::ptrdiff_t>(k);
  }
  if (lo < 0 || hi < 0) throw FitError("CPT spectrum lacks a dip on both sides of the centroid");
  return {s.axis[lo], s.axis[hi]};
}

/// Fractional CPT dip depth 1 - S(dip) / S(reference) for one Zeeman branch
/// with hyperfine sublines, evaluated at two axis points only.
inline double cpt_dip_depth(const NVLevelStructure& levels, const LambdaDriveParams& drive, const RatesParams& rates,
                            const DiffusionModel& diffusion, double dip_position, double reference_position,
                            const CptOptions& opt = {}) {
  const auto s = cpt_spectrum(levels, drive, rates, diffusion, {std::min(dip_position, reference_position),
                                                                std::max(dip_position, reference_position)}, opt);
  const bool dip_first = dip_position < reference_position;
  const double dip = s.signal[dip_first ? 0 : 1], ref = s.signal[dip_first ? 1 : 0];
  if (!(ref > 0.0)) throw FitError("CPT reference level is zero");
  return 1.0 - dip / ref;
}

}  // namespace sawspin
