#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sawspin/lineshape_fit.hpp"
#include "sawspin/units.hpp"

using namespace sawspin;

namespace {

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> x(n);
  for (int k = 0; k < n; ++k) x[k] = lo + (hi - lo) * k / (n - 1);
  return x;
}

std::vector<double> sample(const LorentzianModel& m, const std::vector<double>& x) {
  std::vector<double> y;
  for (double v : x) y.push_back(m(v));
  return y;
}

LorentzianModel six_lines() {
  LorentzianModel m;
  m.centers = {-14.2, -12.0, -9.8, 9.8, 12.0, 14.2};
  m.fwhm = {0.9};
  m.amplitudes = {0.8, 1.0, 0.9, 0.7, 1.1, 0.6};
  m.baseline = 0.05;
  return m;
}

}  // namespace

TEST(Lorentzian, SingleNoiselessRecovery) {
  LorentzianModel truth;
  truth.centers = {3.0};
  truth.fwhm = {0.7};
  truth.amplitudes = {1.0};
  const auto x = grid(0.0, 6.0, 241);
  const auto fit = fit_lorentzians(x, sample(truth, x), 1);
  ASSERT_TRUE(fit.ok());
  EXPECT_NEAR(fit.model.centers[0], 3.0, 1e-6);
  EXPECT_NEAR(fit.model.common_fwhm(), 0.7, 1e-6);
  EXPECT_NEAR(fit.model.amplitudes[0], 1.0, 1e-6);
  EXPECT_NEAR(fit.model.baseline, 0.0, 1e-6);
}

TEST(Lorentzian, ZeroSignalIsDegenerate) {
  const auto x = grid(-5, 5, 101);
  const auto fit = fit_lorentzians(x, std::vector<double>(101, 0.0), 2);
  EXPECT_EQ(fit.status, FitStatus::degenerate);
  EXPECT_EQ(fit.model.amplitudes, (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(fit.model.baseline, 0.0);
  EXPECT_THROW(fit.require_ok(), FitError);
}

TEST(Lorentzian, SixEqualWidthLines) {
  const auto x = grid(-20, 20, 801);
  const auto fit = fit_lorentzians(x, sample(six_lines(), x), 6);
  ASSERT_TRUE(fit.ok());
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(fit.model.centers[k], six_lines().centers[k], 1e-6);
  EXPECT_NEAR(fit.model.common_fwhm(), 0.9, 1e-6);
}

TEST(Lorentzian, TooFewPeaksReported) {
  LorentzianModel two;
  two.centers = {-3, 3};
  two.fwhm = {0.5};
  two.amplitudes = {1, 1};
  const auto x = grid(-10, 10, 201);
  const auto fit = fit_lorentzians(x, sample(two, x), 4);
  EXPECT_EQ(fit.status, FitStatus::too_few_peaks);
  ASSERT_EQ(fit.peaks_found.size(), 2u);
  EXPECT_NEAR(fit.peaks_found[0], -3.0, 0.1);
  EXPECT_THROW(fit.require_ok(), FitError);
}

TEST(Lorentzian, RejectsTooFewPoints) {
  EXPECT_THROW(fit_lorentzians(grid(0, 1, 9), std::vector<double>(9, 1.0), 2), InvalidInput);
}

TEST(Lorentzian, NeverWorseThanInitializer) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> noise(0.0, 0.02);
  const auto x = grid(-20, 20, 401);
  auto y = sample(six_lines(), x);
  for (auto& v : y) v += noise(rng);
  for (double jitter : {0.0, 0.3, 1.0}) {
    LorentzianFitOptions opt;
    LorentzianModel init = six_lines();
    for (auto& c : init.centers) c += jitter;
    init.fwhm = {1.5};
    opt.init = init;
    const auto fit = fit_lorentzians(x, y, 6, opt);
    EXPECT_LE(fit.residual_rms, fit.initial_rms);
  }
}

TEST(Lorentzian, ShiftEquivariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> noise(0.0, 0.01);
  const auto x = grid(-20, 20, 401);
  auto y = sample(six_lines(), x);
  for (auto& v : y) v += noise(rng);
  const double shift = 3.7;
  std::vector<double> xs;
  for (double v : x) xs.push_back(v + shift);
  const auto a = fit_lorentzians(x, y, 6);
  const auto b = fit_lorentzians(xs, y, 6);
  for (int k = 0; k < 6; ++k) {
    EXPECT_NEAR(b.model.centers[k] - a.model.centers[k], shift, 1e-9);
    EXPECT_NEAR(b.model.amplitudes[k], a.model.amplitudes[k], 1e-9);
  }
  EXPECT_NEAR(b.model.common_fwhm(), a.model.common_fwhm(), 1e-9);
  EXPECT_NEAR(b.model.baseline, a.model.baseline, 1e-9);
}

TEST(Lorentzian, AmplitudeScalingEquivariance) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 0.01);
  const auto x = grid(-20, 20, 401);
  auto y = sample(six_lines(), x);
  for (auto& v : y) v += noise(rng);
  const double k = 7.5;
  std::vector<double> ys;
  for (double v : y) ys.push_back(k * v);
  const auto a = fit_lorentzians(x, y, 6);
  const auto b = fit_lorentzians(x, ys, 6);
  for (int i = 0; i < 6; ++i) {
    EXPECT_NEAR(b.model.centers[i], a.model.centers[i], 1e-9);
    EXPECT_NEAR(b.model.amplitudes[i], k * a.model.amplitudes[i], 1e-9 * k);
  }
  EXPECT_NEAR(b.model.common_fwhm(), a.model.common_fwhm(), 1e-9);
  EXPECT_NEAR(b.model.baseline, k * a.model.baseline, 1e-9 * k);
}

TEST(Lorentzian, UnequalWidths) {
  LorentzianModel truth;
  truth.centers = {-2.0, 2.5};
  truth.fwhm = {0.6, 1.4};
  truth.amplitudes = {1.0, 0.5};
  truth.baseline = 0.1;
  const auto x = grid(-8, 8, 321);
  LorentzianFitOptions opt;
  opt.equal_width = false;
  const auto fit = fit_lorentzians(x, sample(truth, x), 2, opt);
  ASSERT_TRUE(fit.ok());
  EXPECT_NEAR(fit.model.width(0), 0.6, 1e-6);
  EXPECT_NEAR(fit.model.width(1), 1.4, 1e-6);
}

TEST(Gaussian, RecoversWidth) {
  const auto x = grid(-400, 400, 401);
  const double sigma = 140.0 / 2.35482004503;
  std::vector<double> y;
  for (double v : x) y.push_back(0.2 + 3.0 * std::exp(-0.5 * std::pow((v - 12.0) / sigma, 2)));
  const auto g = gaussian_profile_fit(x, y);
  EXPECT_TRUE(g.converged);
  EXPECT_NEAR(g.fwhm, 140.0, 1.4);
  EXPECT_NEAR(g.center, 12.0, 1e-6);
  EXPECT_FALSE(g.under_resolved);
}

TEST(Gaussian, FlagsUnderResolvedLine) {
  const auto x = grid(-10, 10, 21);  // step 1
  std::vector<double> y;
  for (double v : x) y.push_back(std::exp(-0.5 * std::pow(v / 0.3, 2)));
  EXPECT_TRUE(gaussian_profile_fit(x, y).under_resolved);
}

TEST(Gaussian, DiffusionAveragedLineRoundTrip) {
  DiffusionModel d;
  d.fwhm = units::mhz(140);
  d.n_samples = 2000;
  d.sampling = DiffusionSampling::stratified;
  const double kernel = units::mhz(2.0) / 2.35482;  // narrow intrinsic line
  const auto line = [kernel](double x, double shift) { return std::exp(-0.5 * std::pow((x - shift) / kernel, 2)); };
  const auto avg = diffusion_average(line, d);
  const auto x = grid(units::mhz(-300), units::mhz(300), 301);
  std::vector<double> y;
  for (double v : x) y.push_back(avg(v));
  const auto g = gaussian_profile_fit(x, y);
  EXPECT_NEAR(units::to_mhz(g.fwhm), std::hypot(140.0, 2.0), 0.01 * 140.0);
}

TEST(Simplex, Rosenbrock) {
  const auto f = [](const std::vector<double>& v) {
    return std::pow(1 - v[0], 2) + 100 * std::pow(v[1] - v[0] * v[0], 2);
  };
  const auto r = nelder_mead(f, {-1.2, 1.0});
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 1.0, 1e-5);
  EXPECT_NEAR(r.x[1], 1.0, 1e-5);
}
