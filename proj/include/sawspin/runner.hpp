#pragma once

// Experiment presets: settings in, labeled tables out. Also the quick
// invariant suite behind `validate`.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sawspin/config.hpp"
#include "sawspin/darkstate.hpp"
#include "sawspin/device.hpp"
#include "sawspin/io.hpp"
#include "sawspin/lineshape_fit.hpp"
#include "sawspin/spectra.hpp"
#include "sawspin/transient.hpp"
#include "sawspin/version.hpp"

namespace sawspin {

namespace detail {

inline std::string configuration_label(const LambdaConfiguration& c) {
  auto sign = [](int v) { return v > 0 ? std::string("p") + std::to_string(v) : v < 0 ? "m" + std::to_string(-v) : "0"; };
  return "ms" + sign(c.m_s) + "_mn" + sign(c.m_n) + "_arb";
}

/// Metadata that is bit-stable for a given config: no clock, no host.
inline std::vector<std::pair<std::string, std::string>> base_metadata(const std::string& experiment, const Config& c) {
  std::vector<std::pair<std::string, std::string>> m{{"experiment", experiment}, {"software_version", version}};
  for (const auto& [k, v] : c.values())
    if (k != "out" && k != "threads") m.emplace_back("config." + k, v);
  return m;
}

inline CsvTable spectrum_table(const std::string& experiment, const Config& c, const SpectrumResult& s) {
  CsvTable t;
  t.metadata = base_metadata(experiment, c);
  t.metadata.emplace_back("averaging_count", std::to_string(s.averaging_count));
  t.columns = {"axis_MHz", "signal_arb"};
  for (std::size_t k = 0; k < s.per_configuration.size(); ++k) t.columns.push_back(configuration_label(s.configurations[k]));
  for (std::size_t p = 0; p < s.axis.size(); ++p) {
    std::vector<double> row{units::to_mhz(s.axis[p]), s.signal[p]};
    for (const auto& col : s.per_configuration) row.push_back(col[p]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace detail

inline CsvTable run_cpt(const RunSettings& s, const Config& c) {
  const auto r = cpt_spectrum(s.levels, s.cpt_drive, s.rates, s.diffusion, s.cpt_axis, s.cpt);
  auto t = detail::spectrum_table("cpt", c, r);
  try {
    const auto dips = find_cpt_dips(r);
    t.metadata.emplace_back("dip_lower_MHz", format_number(units::to_mhz(dips.lower)));
    t.metadata.emplace_back("dip_upper_MHz", format_number(units::to_mhz(dips.upper)));
    t.metadata.emplace_back("dip_separation_MHz", format_number(units::to_mhz(dips.separation())));
  } catch (const FitError&) {
    t.metadata.emplace_back("dip_separation_MHz", "none");
  }
  return t;
}

inline CsvTable run_sideband_spectrum(const RunSettings& s, const Config& c) {
  const auto r = sideband_spectrum(s.levels, s.sideband_drive, s.rates, s.sideband_axis, s.sideband);
  auto t = detail::spectrum_table("sideband-spectrum", c, r);
  std::vector<double> axis_mhz;
  for (double a : r.axis) axis_mhz.push_back(units::to_mhz(a));
  if (axis_mhz.size() >= 4 * 6 + 2) {
    const auto fit = fit_lorentzians(axis_mhz, r.signal, 6);
    t.metadata.emplace_back("lorentzian_fit_status", to_string(fit.status));
    if (fit.ok()) {
      t.metadata.emplace_back("lorentzian_fwhm_MHz", format_number(fit.model.common_fwhm()));
      std::string centers;
      for (double x : fit.model.centers) centers += (centers.empty() ? "" : " ") + format_number(x);
      t.metadata.emplace_back("lorentzian_centers_MHz", centers);
    }
  }
  return t;
}

inline CsvTable run_sideband_transient(const RunSettings& s, const Config& c) {
  auto on = run_transient(s.transient, s.durations);
  CsvTable t;
  t.metadata = detail::base_metadata("sideband-transient", c);
  t.columns = {"duration_us", "signal_arb"};
  std::vector<double> control;
  if (s.transient_fit) {
    TransientExperiment ex = s.transient;
    ex.options.raman_offset += s.control_offset;
    auto off = run_transient(ex, s.durations);
    if (s.transient_noise > 0.0) {
      on = with_noise(on, s.transient_noise, s.seed);
      off = with_noise(off, s.transient_noise, s.seed + 1);
    }
    RatesParams fixed = s.rates;
    fixed.Gamma_2 = 0.0;
    const auto fit = fit_transient_pair(on, off, fixed);
    t.metadata.emplace_back("fit_converged", fit.converged ? "true" : "false");
    t.metadata.emplace_back("fit_decay_to_pm_MHz", format_number(units::to_mhz(fit.decay_to_pm)));
    t.metadata.emplace_back("fit_decay_to_pm_sigma_MHz", format_number(units::to_mhz(fit.sigma_decay_to_pm)));
    t.metadata.emplace_back("fit_rabi_MHz", format_number(units::to_mhz(fit.Omega_R)));
    t.metadata.emplace_back("fit_rabi_sigma_MHz", format_number(units::to_mhz(fit.sigma_Omega_R)));
    t.metadata.emplace_back("fit_omega_ss_MHz", format_number(units::to_mhz(fit.Omega_ss)));
    t.metadata.emplace_back("fit_residual_rms", format_number(fit.residual_rms));
    t.columns.push_back("control_arb");
    control = off.signal;
  } else if (s.transient_noise > 0.0) {
    on = with_noise(on, s.transient_noise, s.seed);
  }
  const auto configs = s.levels.configurations();
  for (std::size_t k = 0; k < on.per_configuration.size(); ++k) t.columns.push_back(detail::configuration_label(configs[k]));
  for (std::size_t k = 0; k < on.durations.size(); ++k) {
    std::vector<double> row{on.durations[k], on.signal[k]};
    if (!control.empty()) row.push_back(control[k]);
    for (const auto& col : on.per_configuration) row.push_back(col[k]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline CsvTable run_decoherence_budget(const RunSettings& s, const Config& c) {
  const auto rows = decoherence_budget(s.sideband_drive, s.rates, s.budget_detunings, s.budget);
  CsvTable t;
  t.metadata = detail::base_metadata("decoherence-budget", c);
  std::vector<double> D, pe, oss, dec;
  for (const auto& r : rows) {
    D.push_back(r.Delta);
    pe.push_back(r.excited_population);
    oss.push_back(r.Omega_ss);
    dec.push_back(r.induced_decoherence);
  }
  t.metadata.emplace_back("slope_excited_population", format_number(log_log_slope(D, pe)));
  t.metadata.emplace_back("slope_omega_ss", format_number(log_log_slope(D, oss)));
  t.metadata.emplace_back("slope_induced_decoherence", format_number(log_log_slope(D, dec)));
  t.columns = {"detuning_MHz", "omega_ss_MHz", "excited_population", "pumping_rate_kHz", "induced_decoherence_kHz"};
  for (const auto& r : rows)
    t.rows.push_back({units::to_mhz(r.Delta), units::to_mhz(r.Omega_ss), r.excited_population,
                      units::to_mhz(r.pumping_rate) * 1e3, units::to_mhz(r.induced_decoherence) * 1e3});
  return t;
}

inline CsvTable run_device(const RunSettings& s, const Config& c) {
  CsvTable t;
  t.metadata = detail::base_metadata("device", c);
  const double f = idt_center_frequency(s.device);
  const double g = electron_phonon_coupling(s.device, s.phonon.omega_m * 1e6);
  t.columns = {"center_frequency_MHz", "coupling_rad_per_s", "coupling_MHz"};
  t.rows.push_back({f * 1e-6, g, g / units::two_pi * 1e-6});
  return t;
}

// ---- validate ----------------------------------------------------------------

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;
};

inline std::vector<CheckResult> run_validation_suite(unsigned long long seed = 7) {
  using units::mhz;
  std::vector<CheckResult> out;
  auto check = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
    try {
      auto [ok, detail] = body();
      out.push_back({name, ok, detail});
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  };
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  RatesParams nominal;
  nominal.gamma_s = mhz(0.35);
  nominal.gamma_orb = mhz(12);
  nominal.Gamma_2 = mhz(1.8);
  nominal.Gamma_1 = mhz(14) - nominal.Gamma_2;

  check("dark_state_decoupling", [&] {
    double worst = 0;
    for (int k = 0; k < 25; ++k) {
      const LambdaDriveParams d{mhz(0.1 + 20 * unit(rng)), mhz(0.1 + 20 * unit(rng)), mhz(200 * unit(rng) - 100), 0.0};
      LambdaDriveParams res = d;
      res.Delta_2 = d.Delta_R;
      worst = std::max(worst, verify_dark(effective_lambda_hamiltonian(res), dark_state(d.Omega_R, d.Omega_2).state, 16));
    }
    return std::pair{worst < 1e-10, "max residual " + format_number(worst)};
  });

  check("master_equation_trace_and_hermiticity", [&] {
    double worst = 0;
    for (int k = 0; k < 25; ++k) {
      Eigen::Matrix3cd a = Eigen::Matrix3cd::Random();
      const Eigen::Matrix3cd rho = (a * a.adjoint()) / (a * a.adjoint()).trace().real();
      const LambdaDriveParams d{10 * unit(rng), 10 * unit(rng), 50 * unit(rng) - 25, 50 * unit(rng) - 25};
      const auto dr = lindblad_rhs(DensityMatrix3::from_matrix(rho), d, nominal).matrix();
      worst = std::max({worst, std::abs(dr.trace()), (dr - dr.adjoint()).cwiseAbs().maxCoeff()});
    }
    return std::pair{worst < 1e-12, "max defect " + format_number(worst)};
  });

  check("evolution_stays_physical", [&] {
    const LambdaDriveParams d{mhz(8), mhz(8), mhz(10), mhz(3)};
    const auto traj = evolve(DensityMatrix3::ground(Level::g1), d, nominal, uniform_axis(0.0, 20.0, 0.5));
    double worst = 0;
    for (const auto& r : traj) worst = std::max({worst, std::abs(r.trace() - 1.0), std::max(0.0, -r.min_eigenvalue())});
    return std::pair{worst < 1e-7, "max defect " + format_number(worst)};
  });

  check("steady_state_is_fixed_point", [&] {
    const LambdaDriveParams d{mhz(8), mhz(6), mhz(30), mhz(25)};
    const auto ss = steady_state(d, nominal);
    const double res = lindblad_rhs(ss, d, nominal).vector().cwiseAbs().maxCoeff();
    return std::pair{res < 1e-9 && std::abs(ss.trace() - 1.0) < 1e-12 && ss.is_valid(), "residual " + format_number(res)};
  });

  check("polaron_transform_chain", [&] {
    DriveParams p;
    p.omega_m = mhz(15);
    p.g = 0.1 * p.omega_m;
    p.nu_1 = mhz(20);
    p.nu_2 = mhz(5);
    p.omega_1 = p.nu_1 - p.polaron_shift() - p.omega_m;
    p.omega_2 = p.nu_2 - p.polaron_shift();
    p.Omega_1 = mhz(2);
    p.Omega_2 = mhz(1);
    const HilbertSpace s(16);
    const auto u = polaron_transform(p, s);
    const auto lab = build_lab_hamiltonian(p, s);
    const auto tr = build_transformed_hamiltonian(p, s);
    double worst = 0;
    for (double t : {0.0, 0.31}) {
      const CMatrix diff = (u.adjoint() * lab(t) * u).entries() - tr.at(t);
      worst = std::max(worst, restrict_to_low_fock(diff, s, 8).cwiseAbs().maxCoeff());
    }
    return std::pair{worst < 1e-8, "max low-block error " + format_number(worst)};
  });

  check("cpt_two_dips_at_zeeman_splitting", [&] {
    DiffusionModel none;
    none.fwhm = 0.0;
    const auto s = cpt_spectrum(NVLevelStructure{}, {mhz(8), mhz(8), 0.0, 0.0}, nominal, none,
                                uniform_axis(mhz(-25), mhz(25), mhz(0.5)));
    const double sep = units::to_mhz(find_cpt_dips(s).separation());
    return std::pair{std::abs(sep - 24.0) <= 0.5 + 1e-9, "separation " + format_number(sep) + " MHz"};
  });

  check("sideband_six_lines", [&] {
    const auto s = sideband_spectrum(NVLevelStructure{}, {mhz(8), mhz(8), mhz(100), 0.0}, nominal,
                                     uniform_axis(mhz(-20), mhz(20), mhz(0.1)));
    const auto n = local_maxima(s.signal).size();
    return std::pair{n == 6, std::to_string(n) + " maxima"};
  });

  check("lorentzian_round_trip", [&] {
    LorentzianModel m;
    m.centers = {-1.1, 1.1};
    m.fwhm = {0.7};
    m.amplitudes = {1.0, 0.6};
    m.baseline = 0.1;
    std::vector<double> x, y;
    for (int k = 0; k <= 200; ++k) {
      x.push_back(-5.0 + 0.05 * k);
      y.push_back(m(x.back()));
    }
    const auto fit = fit_lorentzians(x, y, 2);
    const double err = std::max(std::abs(fit.model.common_fwhm() - 0.7), std::abs(fit.model.centers[1] - 1.1));
    return std::pair{fit.ok() && err < 1e-6, "max error " + format_number(err)};
  });

  check("config_round_trip", [&] {
    Config a;
    a.set("cpt.axis_step_mhz", "0.25");
    a.set("diffusion.sampling", "stratified");
    const Config b = Config::parse(a.serialize());
    bool unknown_rejected = false;
    try {
      Config().set("no.such_key", "1");
    } catch (const ConfigError& e) {
      unknown_rejected = e.key == "no.such_key";
    }
    return std::pair{a.values() == b.values() && unknown_rejected, unknown_rejected ? "ok" : "unknown key accepted"};
  });

  check("diffusion_draws_deterministic", [&] {
    DiffusionModel d;
    d.seed = seed;
    return std::pair{d.draws() == d.draws(), "seed " + std::to_string(seed)};
  });

  check("sideband_rabi_inverse_detuning", [&] {
    const double r = effective_sideband_rabi(mhz(8), mhz(8), mhz(200)) / effective_sideband_rabi(mhz(8), mhz(8), mhz(100));
    return std::pair{std::abs(r - 0.5) < 1e-12, "ratio " + format_number(r)};
  });

  check("idt_center_frequency", [&] {
    const double f = idt_center_frequency(IDTParams{}) * 1e-6;
    return std::pair{std::abs(f - 5600.0 / 6.0) < 1e-9, format_number(f) + " MHz"};
  });

  check("csv_round_trip", [&] {
    CsvTable t;
    t.columns = {"axis_MHz", "signal_arb"};
    t.rows = {{-0.1, 1.0 / 3.0}, {2.5e-17, -7.0}};
    const auto back = parse_csv(to_csv_text(t));
    return std::pair{back.rows == t.rows && back.columns == t.columns, "exact"};
  });
  return out;
}

}  // namespace sawspin
