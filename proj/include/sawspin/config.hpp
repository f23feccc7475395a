#pragma once

// Flat `key = value` run configuration. Frequencies are ordinary MHz, times
// are us; conversion to rad/us happens in resolve(). Precedence, lowest first:
// built-in defaults, config file, --set overrides, dedicated CLI flags.

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sawspin/device.hpp"
#include "sawspin/errors.hpp"
#include "sawspin/spectra.hpp"
#include "sawspin/transient.hpp"

namespace sawspin {

/// Default parameter table.
inline const std::map<std::string, std::string>& default_config() {
  static const std::map<std::string, std::string> table{
      {"seed", "7"},
      {"threads", "0"},
      {"out", ""},
      {"output.per_configuration", "false"},

      {"drive.rabi_0_mhz", "8"},
      {"drive.rabi_pm_mhz", "8"},
      {"phonon.frequency_mhz", "818"},
      {"phonon.coupling_mhz", "0"},
      {"phonon.mean_occupation", "0"},

      {"rates.gamma_s_mhz", "0.35"},
      {"rates.gamma_orb_mhz", "12"},
      {"rates.decay_to_ms0_mhz", "12.2"},
      {"rates.decay_to_pm_mhz", "1.8"},

      {"levels.zeeman_mhz", "24"},
      {"levels.hyperfine_mhz", "2.2"},

      {"diffusion.fwhm_mhz", "140"},
      {"diffusion.samples", "200"},
      {"diffusion.sampling", "random"},
      {"diffusion.width_is_sigma", "false"},

      {"cpt.detuning_mhz", "0"},
      {"cpt.window_us", "10"},
      {"cpt.axis_start_mhz", "-40"},
      {"cpt.axis_stop_mhz", "40"},
      {"cpt.axis_step_mhz", "0.5"},

      {"sideband.detuning_mhz", "100"},
      {"sideband.pulse_us", "2"},
      {"sideband.background_offset_mhz", "6.5"},
      {"sideband.subtract_background", "true"},
      {"sideband.axis_start_mhz", "-20"},
      {"sideband.axis_stop_mhz", "20"},
      {"sideband.axis_step_mhz", "0.05"},

      {"transient.detuning_mhz", "100"},
      {"transient.raman_offset_mhz", "0"},
      {"transient.control_offset_mhz", "6.5"},
      {"transient.target_ms", "1"},
      {"transient.target_mn", "1"},
      {"transient.init_us", "1"},
      {"transient.readout_us", "1"},
      {"transient.duration_stop_us", "5"},
      {"transient.duration_step_us", "0.1"},
      {"transient.fit", "false"},
      {"transient.noise", "0"},

      {"budget.detuning_start_mhz", "200"},
      {"budget.detuning_stop_mhz", "2000"},
      {"budget.points", "11"},
      {"budget.two_photon_mhz", "6.5"},

      {"device.finger_width_um", "1.5"},
      {"device.saw_velocity_m_s", "5600"},
      {"device.finger_pairs", "50"},
      {"device.deformation_potential_ev", "1"},
      {"device.effective_mass_kg", "1e-15"},
      {"device.wavenumber_per_m", "0"},
  };
  return table;
}

class Config {
 public:
  Config() : values_(default_config()) {}

  void set(const std::string& key, const std::string& value) {
    if (!default_config().contains(key)) throw ConfigError(key, "unknown key");
    values_[key] = value;
  }

  /// `key=value`, as given to --set.
  void set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(assignment, "expected key=value");
    set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  }

  void merge_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
      ++number;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("line " + std::to_string(number), "expected key = value");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  void merge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    merge_text(buf.str());
  }

  static Config parse(const std::string& text) {
    Config c;
    c.merge_text(text);
    return c;
  }

  /// Every key, sorted.
  std::string serialize() const {
    std::ostringstream out;
    for (const auto& [k, v] : values_) out << k << " = " << v << "\n";
    return out.str();
  }

  const std::map<std::string, std::string>& values() const { return values_; }
  const std::string& raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, "unknown key");
    return it->second;
  }

  double number(const std::string& key) const {
    const std::string& s = raw(key);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError(key, "expected a finite number, got '" + s + "'");
    return v;
  }

  long long integer(const std::string& key) const {
    const std::string& s = raw(key);
    long long v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError(key, "expected an integer, got '" + s + "'");
    return v;
  }

  unsigned long long unsigned_integer(const std::string& key) const {
    const std::string& s = raw(key);
    unsigned long long v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
      throw ConfigError(key, "expected an unsigned integer, got '" + s + "'");
    return v;
  }

  bool flag(const std::string& key) const {
    const std::string& s = raw(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + s + "'");
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  std::map<std::string, std::string> values_;
};

/// Typed, validated, internal-unit view of a Config.
struct RunSettings {
  unsigned long long seed;
  unsigned threads;
  std::string out;
  bool per_configuration;

  DriveParams phonon;  // only omega_m, g and n_bar are used
  RatesParams rates;
  NVLevelStructure levels;
  DiffusionModel diffusion;

  LambdaDriveParams cpt_drive;
  CptOptions cpt;
  std::vector<double> cpt_axis;

  LambdaDriveParams sideband_drive;
  SidebandOptions sideband;
  std::vector<double> sideband_axis;

  TransientExperiment transient;
  double control_offset;
  std::vector<double> durations;
  bool transient_fit;
  double transient_noise;

  std::vector<double> budget_detunings;
  BudgetOptions budget;

  IDTParams device;
};

namespace detail {

inline double positive(const Config& c, const std::string& key) {
  const double v = c.number(key);
  if (!(v > 0.0)) throw ConfigError(key, "must be > 0");
  return v;
}

inline double non_negative(const Config& c, const std::string& key) {
  const double v = c.number(key);
  if (!(v >= 0.0)) throw ConfigError(key, "must be >= 0");
  return v;
}

inline std::vector<double> mhz_axis(const Config& c, const std::string& prefix) {
  const double a = c.number(prefix + "axis_start_mhz"), b = c.number(prefix + "axis_stop_mhz");
  const double step = positive(c, prefix + "axis_step_mhz");
  if (!(b >= a)) throw ConfigError(prefix + "axis_stop_mhz", "must be >= axis_start_mhz");
  if ((b - a) / step > 1e6) throw ConfigError(prefix + "axis_step_mhz", "axis longer than 1e6 points");
  return uniform_axis(units::mhz(a), units::mhz(b), units::mhz(step));
}

}  // namespace detail

inline RunSettings resolve(const Config& c) {
  using detail::non_negative;
  using detail::positive;
  using units::mhz;
  RunSettings s;
  s.seed = c.unsigned_integer("seed");
  const long long threads = c.integer("threads");
  if (threads < 0 || threads > 4096) throw ConfigError("threads", "must be in [0, 4096]");
  s.threads = threads == 0 ? default_threads() : static_cast<unsigned>(threads);
  s.out = c.raw("out");
  s.per_configuration = c.flag("output.per_configuration");

  s.phonon.omega_m = mhz(positive(c, "phonon.frequency_mhz"));
  s.phonon.g = mhz(non_negative(c, "phonon.coupling_mhz"));
  s.phonon.n_bar = non_negative(c, "phonon.mean_occupation");

  s.rates.gamma_s = mhz(non_negative(c, "rates.gamma_s_mhz"));
  s.rates.gamma_orb = mhz(non_negative(c, "rates.gamma_orb_mhz"));
  s.rates.Gamma_1 = mhz(non_negative(c, "rates.decay_to_ms0_mhz"));
  s.rates.Gamma_2 = mhz(non_negative(c, "rates.decay_to_pm_mhz"));

  s.levels.omega_B = mhz(non_negative(c, "levels.zeeman_mhz"));
  s.levels.A_hf = mhz(non_negative(c, "levels.hyperfine_mhz"));

  s.diffusion.fwhm = mhz(non_negative(c, "diffusion.fwhm_mhz"));
  const long long samples = c.integer("diffusion.samples");
  if (samples < 1 || samples > 1000000) throw ConfigError("diffusion.samples", "must be in [1, 1e6]");
  s.diffusion.n_samples = static_cast<int>(samples);
  s.diffusion.seed = s.seed;
  const std::string& sampling = c.raw("diffusion.sampling");
  if (sampling == "random")
    s.diffusion.sampling = DiffusionSampling::random;
  else if (sampling == "stratified")
    s.diffusion.sampling = DiffusionSampling::stratified;
  else
    throw ConfigError("diffusion.sampling", "expected random or stratified, got '" + sampling + "'");
  s.diffusion.width_is_sigma = c.flag("diffusion.width_is_sigma");

  const double rabi_0 = mhz(non_negative(c, "drive.rabi_0_mhz")), rabi_pm = mhz(non_negative(c, "drive.rabi_pm_mhz"));

  s.cpt_drive = {rabi_0, rabi_pm, mhz(c.number("cpt.detuning_mhz")), 0.0};
  s.cpt.window = positive(c, "cpt.window_us");
  s.cpt.threads = s.threads;
  s.cpt.keep_per_configuration = s.per_configuration;
  s.cpt_axis = detail::mhz_axis(c, "cpt.");

  s.sideband_drive = {rabi_0, rabi_pm, mhz(c.number("sideband.detuning_mhz")), 0.0};
  if (s.sideband_drive.Delta_R == 0.0) throw ConfigError("sideband.detuning_mhz", "must be nonzero");
  s.sideband.pulse_duration = positive(c, "sideband.pulse_us");
  s.sideband.background_offset = mhz(non_negative(c, "sideband.background_offset_mhz"));
  s.sideband.subtract_background = c.flag("sideband.subtract_background");
  s.sideband.threads = s.threads;
  s.sideband.keep_per_configuration = s.per_configuration;
  s.sideband_axis = detail::mhz_axis(c, "sideband.");

  auto& t = s.transient;
  t.sequence = PulseSequence::standard(positive(c, "transient.init_us"), positive(c, "transient.readout_us"));
  t.levels = s.levels;
  t.drive = {rabi_0, rabi_pm, mhz(c.number("transient.detuning_mhz")), 0.0};
  if (t.drive.Delta_R == 0.0) throw ConfigError("transient.detuning_mhz", "must be nonzero");
  t.rates = s.rates;
  t.options.raman_offset = mhz(c.number("transient.raman_offset_mhz"));
  const long long ms = c.integer("transient.target_ms"), mn = c.integer("transient.target_mn");
  if (ms != 1 && ms != -1) throw ConfigError("transient.target_ms", "must be -1 or 1");
  if (mn < -1 || mn > 1) throw ConfigError("transient.target_mn", "must be -1, 0 or 1");
  t.options.target_m_s = static_cast<int>(ms);
  t.options.target_m_n = static_cast<int>(mn);
  t.options.threads = s.threads;
  t.options.keep_per_configuration = s.per_configuration;
  s.control_offset = mhz(c.number("transient.control_offset_mhz"));
  s.durations = uniform_axis(0.0, positive(c, "transient.duration_stop_us"), positive(c, "transient.duration_step_us"));
  s.transient_fit = c.flag("transient.fit");
  s.transient_noise = non_negative(c, "transient.noise");

  const double d0 = positive(c, "budget.detuning_start_mhz"), d1 = positive(c, "budget.detuning_stop_mhz");
  const long long points = c.integer("budget.points");
  if (points < 2 || points > 10000) throw ConfigError("budget.points", "must be in [2, 1e4]");
  if (!(d1 > d0)) throw ConfigError("budget.detuning_stop_mhz", "must exceed budget.detuning_start_mhz");
  for (long long k = 0; k < points; ++k)  // log-spaced
    s.budget_detunings.push_back(mhz(d0 * std::pow(d1 / d0, static_cast<double>(k) / static_cast<double>(points - 1))));
  s.budget.two_photon_detuning = mhz(c.number("budget.two_photon_mhz"));
  s.budget.threads = s.threads;

  s.device.finger_width = positive(c, "device.finger_width_um") * 1e-6;
  s.device.saw_velocity = positive(c, "device.saw_velocity_m_s");
  const long long pairs = c.integer("device.finger_pairs");
  if (pairs < 1) throw ConfigError("device.finger_pairs", "must be >= 1");
  s.device.n_finger_pairs = static_cast<int>(pairs);
  s.device.deformation_potential_ev = positive(c, "device.deformation_potential_ev");
  s.device.effective_mass = positive(c, "device.effective_mass_kg");
  s.device.wavenumber = non_negative(c, "device.wavenumber_per_m");
  return s;
}

}  // namespace sawspin
