// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "../lindblad_oracle.hpp"
#include "../test_support.hpp"
#include "sawspin/darkstate.hpp"
#include "sawspin/device.hpp"
#include "sawspin/dynamics.hpp"
#include "sawspin/hamiltonian.hpp"
#include "sawspin/lineshape_fit.hpp"
#include "sawspin/spectra.hpp"
#include "sawspin/transient.hpp"

using namespace sawspin;
using units::mhz;
using units::to_mhz;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

RatesParams nominal_rates() {
  RatesParams r;
  r.gamma_s = mhz(0.35);
  r.gamma_orb = mhz(12);
  r.Gamma_2 = mhz(1.8);
  r.Gamma_1 = mhz(14) - r.Gamma_2;
  return r;
}

Outcome dark_state_decoupling() {
  proptest::Gen gen(101);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double omega_r = mhz(gen.uniform(0.01, 50)), omega_2 = mhz(gen.uniform(0.01, 50));
    const double delta = mhz(gen.uniform(-500, 500));
    const LambdaDriveParams d{omega_r, omega_2, delta, delta};
    const Ket psi = dark_state(omega_r, omega_2).state;
    worst = std::max({worst, verify_dark(effective_lambda_hamiltonian(d), psi)});
  }
  return {worst < 1e-10, "max ||H_I psi_d|| = " + fmt(worst) + " over 100 pairs"};
}

DriveParams chain_params() {
  DriveParams p;
  p.omega_m = mhz(15.0);
  p.g = 0.1 * p.omega_m;
  p.nu_1 = mhz(20.0);
  p.nu_2 = mhz(5.0);
  p.omega_1 = p.nu_1 - p.polaron_shift() - p.omega_m;
  p.omega_2 = p.nu_2 - p.polaron_shift();
  p.Omega_1 = mhz(2.0);
  p.Omega_2 = mhz(1.0);
  return p;
}

Outcome transform_chain() {
  const DriveParams p = chain_params();
  const HilbertSpace s(20);
  const OperatorMatrix u = polaron_transform(p, s);
  const auto lab = build_lab_hamiltonian(p, s);
  const auto tr = build_transformed_hamiltonian(p, s);
  double conj = 0.0;
  for (double t : {0.0, 0.123, 0.777}) {
    const CMatrix diff = restrict_to_low_fock((u.adjoint() * lab(t) * u).entries() - tr.at(t), s, 12);
    conj = std::max(conj, Eigen::JacobiSVD<CMatrix>(diff).singularValues()(0));
  }
  const auto ip = build_interaction_hamiltonian(p, s);
  PropagationOptions opt;
  opt.step_fraction = 1.0 / 80;
  double worst_f = 1.0;
  for (auto [level, n] : {std::pair{Level::g1, 1}, std::pair{Level::g2, 0}, std::pair{Level::e, 2}}) {
    const Ket psi0 = Ket::basis(s, level, n);
    const CVector polaron = propagate(tr, psi0, 0.0, 1.0, opt).amplitudes();
    const CVector start = interaction_frame_map(p, s, 0.0).entries() * psi0.amplitudes();
    const CVector interaction = propagate(ip, Ket(s, start), 0.0, 1.0, opt).amplitudes();
    worst_f = std::min(worst_f, state_fidelity(interaction_frame_map(p, s, 1.0).entries() * polaron, interaction));
  }
  return {conj < 1e-8 && worst_f > 1.0 - 1e-6,
          "||U'HU - H~|| (n <= 12) = " + fmt(conj) + ", min lab/interaction-frame fidelity over 1 us = 1 - " + fmt(1.0 - worst_f)};
}

Outcome lamb_dicke_order() {
  std::vector<double> lambdas{0.02, 0.05, 0.1}, errors;
  for (double lambda : lambdas) {
    DriveParams p;
    p.omega_m = 1.0;
    p.g = lambda;
    p.Omega_1 = 0.0;
    p.Omega_2 = 0.005;
    p.nu_1 = 3.0;
    p.nu_2 = 2.0;
    p.omega_1 = p.nu_1 - p.polaron_shift() - p.omega_m;
    p.omega_2 = p.nu_2 - p.polaron_shift();
    const HilbertSpace s(10);
    const double period = 2.0 * std::numbers::pi / p.Omega_2;
    const Ket psi0 = Ket::basis(s, Level::g2, 0);
    const CVector full = propagate(build_interaction_hamiltonian(p, s), psi0, 0.0, period).amplitudes();
    const CVector ld = propagate(lamb_dicke_hamiltonian(p, s), psi0, 0.0, period).amplitudes();
    errors.push_back(state_distance(full, ld));
  }
  const double slope = log_log_slope(lambdas, errors);
  return {std::abs(slope - 2.0) <= 0.2, "errors " + fmt(errors[0]) + ", " + fmt(errors[1]) + ", " + fmt(errors[2]) +
                                            "; fitted exponent " + fmt(slope)};
}

Outcome master_equation_oracle() {
  proptest::Gen gen(404);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const DensityMatrix3 rho = DensityMatrix3::from_matrix(Eigen::Matrix3cd(gen.density(3)));
    const LambdaDriveParams d{mhz(gen.uniform(0, 20)), mhz(gen.uniform(0, 20)), mhz(gen.uniform(-200, 200)),
                              mhz(gen.uniform(-200, 200))};
    RatesParams r;
    r.gamma_s = mhz(gen.uniform(0, 1));
    r.gamma_orb = mhz(gen.uniform(0, 20));
    r.Gamma_1 = mhz(gen.uniform(0, 20));
    r.Gamma_2 = mhz(gen.uniform(0, 5));
    const Eigen::Matrix3cd m = rho.matrix();
    const Eigen::Matrix<cplx, 9, 1> expected =
        proptest::oracle_superoperator(d, r) * Eigen::Map<const Eigen::Matrix<cplx, 9, 1>>(m.data());
    const Eigen::Matrix3cd got = lindblad_rhs(rho, d, r).matrix();
    worst = std::max(worst, (Eigen::Map<const Eigen::Matrix<cplx, 9, 1>>(got.data()) - expected).cwiseAbs().maxCoeff());
  }
  return {worst < 1e-12, "max |rhs - oracle| = " + fmt(worst) + " over 100 states"};
}

Outcome cpt_spectrum_criterion() {
  const NVLevelStructure levels;  // omega_B = 24 MHz
  const RatesParams rates = nominal_rates();
  const LambdaDriveParams drive{mhz(8), mhz(8), 0.0, 0.0};
  DiffusionModel data_diffusion;  // 140 MHz, 200 random draws, seed 7
  const double step = mhz(0.5);
  const auto s = cpt_spectrum(levels, drive, rates, data_diffusion, uniform_axis(mhz(-40), mhz(40), step));
  const CptDips dips = find_cpt_dips(s);
  const double sep = to_mhz(dips.separation());

  auto index_of = [&](double x) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < s.axis.size(); ++k)
      if (std::abs(s.axis[k] - x) < std::abs(s.axis[best] - x)) best = k;
    return best;
  };
  const std::size_t ref = index_of(0.0);
  const double data_depth =
      0.5 * ((1.0 - s.signal[index_of(dips.lower)] / s.signal[ref]) + (1.0 - s.signal[index_of(dips.upper)] / s.signal[ref]));

  DiffusionModel model_diffusion = data_diffusion;
  model_diffusion.sampling = DiffusionSampling::stratified;
  auto depth = [&](double omega) {
    const LambdaDriveParams d{omega, omega, 0.0, 0.0};
    return 0.5 * (cpt_dip_depth(levels, d, rates, model_diffusion, dips.lower, s.axis[ref]) +
                  cpt_dip_depth(levels, d, rates, model_diffusion, dips.upper, s.axis[ref]));
  };
  boost::uintmax_t iterations = 60;
  const auto [lo, hi] = boost::math::tools::toms748_solve([&](double w) { return depth(w) - data_depth; }, mhz(2),
                                                          mhz(30), boost::math::tools::eps_tolerance<double>(30),
                                                          iterations);
  const double omega = to_mhz(0.5 * (lo + hi));
  const bool pass = std::abs(sep - 24.0) <= to_mhz(step) + 1e-9 && std::abs(omega / 8.0 - 1.0) <= 0.10;
  return {pass, "dip separation " + fmt(sep, 6) + " MHz (grid 0.5); depth " + fmt(data_depth) + " refits Omega_R = " +
                    fmt(omega) + " MHz"};
}

Outcome sideband_spectrum_criterion() {
  const auto s = sideband_spectrum(NVLevelStructure{}, {mhz(8), mhz(8), mhz(100), 0.0}, nominal_rates(),
                                   uniform_axis(mhz(-20), mhz(20), mhz(0.05)));
  const std::size_t peaks = local_maxima(s.signal).size();
  std::vector<double> x;
  for (double a : s.axis) x.push_back(to_mhz(a));
  const auto fit = fit_lorentzians(x, s.signal, 6);
  if (!fit.ok()) return {false, std::string("six-Lorentzian fit ") + to_string(fit.status)};
  const auto& c = fit.model.centers;
  double worst_spacing = 0.0;
  std::string spacings;
  for (std::size_t k : {1u, 2u, 4u, 5u}) {
    const double d = c[k] - c[k - 1];
    worst_spacing = std::max(worst_spacing, std::abs(d - 2.2));
    spacings += (spacings.empty() ? "" : ", ") + fmt(d);
  }
  const double fwhm = fit.model.common_fwhm();
  const bool pass = peaks == 6 && worst_spacing <= 0.1 && std::abs(fwhm / 0.7 - 1.0) <= 0.15;
  return {pass, std::to_string(peaks) + " peaks; spacings " + spacings + " MHz; equal-width FWHM " + fmt(fwhm) +
                    " MHz (target 0.7 +- 15%)"};
}

Outcome transient_criterion() {
  TransientExperiment on_ex;
  on_ex.sequence = PulseSequence::standard();
  on_ex.drive = {mhz(8), mhz(8), mhz(100), 0.0};
  on_ex.rates = nominal_rates();
  TransientExperiment off_ex = on_ex;
  off_ex.options.raman_offset = mhz(6.5);
  const auto g = uniform_axis(0.0, 5.0, 0.1);
  const auto on = with_noise(run_transient(on_ex, g), 0.01, 71);
  const auto off = with_noise(run_transient(off_ex, g), 0.01, 72);
  RatesParams fixed = nominal_rates();
  fixed.Gamma_2 = 0.0;  // free
  const auto fit = fit_transient_pair(on, off, fixed);
  const double decay = to_mhz(fit.decay_to_pm), omega = to_mhz(fit.Omega_R), oss = to_mhz(fit.Omega_ss);
  const bool pass = fit.converged && std::abs(decay / 1.8 - 1) <= 0.05 && std::abs(omega / 8 - 1) <= 0.05 &&
                    std::abs(oss / 0.3 - 1) <= 0.10;
  return {pass, "Gamma_1 = " + fmt(decay) + " +- " + fmt(to_mhz(fit.sigma_decay_to_pm), 2) + " MHz, Omega_R = " +
                    fmt(omega) + " +- " + fmt(to_mhz(fit.sigma_Omega_R), 2) + " MHz, Omega_ss = " + fmt(oss) + " MHz"};
}

Outcome scaling_criterion() {
  std::vector<double> D;
  for (int k = 0; k <= 10; ++k) D.push_back(mhz(200.0 * std::pow(10.0, k / 10.0)));
  const LambdaDriveParams drive{mhz(8), mhz(8), 0.0, 0.0};
  const auto rows = decoherence_budget(drive, nominal_rates(), D);
  std::vector<double> pe, oss;
  for (const auto& r : rows) {
    pe.push_back(r.excited_population);
    oss.push_back(r.Omega_ss);
  }
  const double s_pe = log_log_slope(D, pe), s_oss = log_log_slope(D, oss);
  const auto at = decoherence_budget(drive, nominal_rates(), {60.0 * mhz(8)});
  const double khz = to_mhz(at[0].induced_decoherence) * 1e3;
  const bool pass = std::abs(s_pe + 2.0) <= 0.1 && std::abs(s_oss + 1.0) <= 0.01 && khz >= 1.0 / 3.0 && khz <= 3.0;
  return {pass, "slope rho_ee " + fmt(s_pe) + ", slope Omega_ss " + fmt(s_oss, 6) +
                    ", induced decoherence at Omega/Delta = 1/60: " + fmt(khz) + " kHz"};
}

Outcome device_criterion() {
  const double f = idt_center_frequency(IDTParams{}) * 1e-6;
  proptest::Gen gen(909);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    IDTParams p;
    p.deformation_potential_ev = gen.uniform(0.1, 10);
    p.effective_mass = std::pow(10.0, gen.uniform(-18, -12));
    const double omega = 2 * std::numbers::pi * 933e6;
    const double joules = p.deformation_potential_ev * 1.602176634e-19;
    const double a = electron_phonon_coupling(p, omega);
    const double b = electron_phonon_coupling_si(joules, p.resolved_wavenumber(), p.effective_mass, omega);
    worst = std::max(worst, std::abs(a / b - 1.0));
  }
  const bool pass = std::abs(f - 933.3) < 0.05 && std::abs(f / 900.0 - 1.0) <= 0.05 && worst <= 1e-12;
  return {pass, "v_s/(4w) = " + fmt(f, 7) + " MHz; eV/J round-trip rel. error " + fmt(worst)};
}

Outcome determinism_criterion() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "sawspin_acceptance";
  fs::create_directories(dir);
  const std::string cli = SAWSPIN_CLI_PATH;
  auto run = [&](const std::string& args) { return std::system(("\"" + cli + "\" " + args + " > /dev/null").c_str()); };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  const fs::path a = dir / "a.csv", b = dir / "b.csv";
  fs::remove(a);
  fs::remove(b);
  const int ra = run("cpt --seed 7 --out \"" + a.string() + "\"");
  const int rb = run("cpt --seed 7 --threads 1 --out \"" + b.string() + "\"");
  const bool same = ra == 0 && rb == 0 && fs::exists(a) && slurp(a) == slurp(b) && !slurp(a).empty();
  const int rv = run("validate");
  return {same && rv == 0, std::string("cpt CSVs ") + (same ? "bit-identical" : "differ or missing") +
                               "; validate exit status " + std::to_string(rv)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"dark-state decoupling", dark_state_decoupling},
      {"transform chain", transform_chain},
      {"Lamb-Dicke order", lamb_dicke_order},
      {"master-equation oracle", master_equation_oracle},
      {"CPT spectrum", cpt_spectrum_criterion},
      {"sideband spectrum", sideband_spectrum_criterion},
      {"transient pair", transient_criterion},
      {"scaling laws", scaling_criterion},
      {"device formulas", device_criterion},
      {"determinism", determinism_criterion},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << k + 1 << " " << criteria[k].first << ": " << o.detail << std::endl;
  }
  std::cout << criteria.size() - failures << "/" << criteria.size() << " criteria pass" << std::endl;
  return failures == 0 ? 0 : 1;
}
