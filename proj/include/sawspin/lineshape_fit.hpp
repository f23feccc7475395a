#pragma once

// Multi-Lorentzian and single-Gaussian least-squares lineshape fits.
// Lorentzian peaks are parameterized by height: a / (1 + (2 (x - c) / w)^2).

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sawspin/optimize.hpp"
#include "sawspin/spectra.hpp"

namespace sawspin {

struct LorentzianModel {
  std::vector<double> centers;
  /// One entry when widths are shared, otherwise one per peak (FWHM).
  std::vector<double> fwhm;
  std::vector<double> amplitudes;
  double baseline = 0.0;

  int n_peaks() const { return static_cast<int>(centers.size()); }
  double width(int k) const { return fwhm.size() == 1 ? fwhm[0] : fwhm[static_cast<std::size_t>(k)]; }
  double common_fwhm() const { return fwhm.front(); }

  double operator()(double x) const {
    double y = baseline;
    for (int k = 0; k < n_peaks(); ++k) {
      const double u = 2.0 * (x - centers[k]) / width(k);
      y += amplitudes[k] / (1.0 + u * u);
    }
    return y;
  }

  void sort_by_center() {
    std::vector<std::size_t> idx(centers.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return centers[a] < centers[b]; });
    auto permute = [&](std::vector<double>& v) {
      std::vector<double> out;
      for (auto i : idx) out.push_back(v[i]);
      v = std::move(out);
    };
    permute(centers);
    permute(amplitudes);
    if (fwhm.size() > 1) permute(fwhm);
  }
};

enum class FitStatus { converged, not_converged, too_few_peaks, degenerate };

inline const char* to_string(FitStatus s) {
  switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::not_converged: return "not_converged";
    case FitStatus::too_few_peaks: return "too_few_peaks";
    case FitStatus::degenerate: return "degenerate";
  }
  return "unknown";
}

struct LorentzianFit {
  LorentzianModel model;
  FitStatus status = FitStatus::converged;
  double residual_rms = 0.0;
  double initial_rms = 0.0;
  /// Axis positions of the seed peaks that were detected.
  std::vector<double> peaks_found;
  int evaluations = 0;
  bool used_simplex = false;

  bool ok() const { return status == FitStatus::converged; }

  void require_ok() const {
    if (ok()) return;
    std::ostringstream msg;
    msg << "Lorentzian fit " << to_string(status) << "; peaks found:";
    for (double p : peaks_found) msg << ' ' << p;
    throw FitError(msg.str());
  }
};

namespace detail {

inline double rms(const std::vector<double>& x, const std::vector<double>& y, const LorentzianModel& m) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += std::pow(m(x[k]) - y[k], 2);
  return std::sqrt(s / static_cast<double>(x.size()));
}

/// Parameter layout [baseline, widths..., centers..., amplitudes...].
inline Eigen::VectorXd pack(const LorentzianModel& m) {
  const int n = m.n_peaks(), nw = static_cast<int>(m.fwhm.size());
  Eigen::VectorXd p(1 + nw + 2 * n);
  p(0) = m.baseline;
  for (int k = 0; k < nw; ++k) p(1 + k) = m.fwhm[k];
  for (int k = 0; k < n; ++k) p(1 + nw + k) = m.centers[k];
  for (int k = 0; k < n; ++k) p(1 + nw + n + k) = m.amplitudes[k];
  return p;
}

inline LorentzianModel unpack(const Eigen::VectorXd& p, int n, int nw) {
  LorentzianModel m;
  m.baseline = p(0);
  for (int k = 0; k < nw; ++k) m.fwhm.push_back(std::abs(p(1 + k)));
  for (int k = 0; k < n; ++k) m.centers.push_back(p(1 + nw + k));
  for (int k = 0; k < n; ++k) m.amplitudes.push_back(p(1 + nw + n + k));
  return m;
}

struct LorentzianResidual {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const std::vector<double>& x;
  const std::vector<double>& y;
  int n;
  int nw;

  int inputs() const { return 1 + nw + 2 * n; }
  int values() const { return static_cast<int>(x.size()); }

  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    const LorentzianModel m = unpack(p, n, nw);
    for (int i = 0; i < values(); ++i) r(i) = m(x[i]) - y[i];
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& jac) const {
    jac.setZero();
    for (int i = 0; i < values(); ++i) {
      jac(i, 0) = 1.0;
      for (int k = 0; k < n; ++k) {
        const int wi = nw == 1 ? 0 : k;
        const double w = p(1 + wi), c = p(1 + nw + k), a = p(1 + nw + n + k);
        const double u = 2.0 * (x[i] - c) / w;
        const double q = 1.0 + u * u;
        jac(i, 1 + wi) += a * 2.0 * u * u / (w * q * q);
        jac(i, 1 + nw + k) = a * 4.0 * u / (w * q * q);
        jac(i, 1 + nw + n + k) = 1.0 / q;
      }
    }
    return 0;
  }
};

/// Prominence of each local maximum: height above the higher of the two
/// saddle minima that separate it from taller peaks (or the data edge).
inline std::vector<std::pair<double, std::size_t>> prominent_maxima(const std::vector<double>& y) {
  std::vector<std::pair<double, std::size_t>> out;
  for (std::size_t k : local_maxima(y)) {
    double left = y[k], right = y[k];
    for (std::size_t j = k; j-- > 0;) {
      if (y[j] > y[k]) break;
      left = std::min(left, y[j]);
    }
    for (std::size_t j = k + 1; j < y.size(); ++j) {
      if (y[j] > y[k]) break;
      right = std::min(right, y[j]);
    }
    out.push_back({y[k] - std::max(left, right), k});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  return out;
}

}  // namespace detail

struct LorentzianFitOptions {
  bool equal_width = true;
  std::optional<LorentzianModel> init;
  /// Minimum prominence for a seed peak, relative to the data range.
  double min_prominence = 1e-3;
};

inline LorentzianFit fit_lorentzians(const std::vector<double>& x, const std::vector<double>& y, int n_peaks,
                                     const LorentzianFitOptions& opt = {}) {
  if (n_peaks < 1) throw InvalidInput("n_peaks must be >= 1");
  if (x.size() != y.size()) throw InvalidInput("axis and signal lengths differ");
  if (x.size() < static_cast<std::size_t>(4 * n_peaks + 2)) throw InvalidInput("too few points for the requested fit");
  validate_axis(x);

  LorentzianFit fit;
  const auto [ymin_it, ymax_it] = std::minmax_element(y.begin(), y.end());
  const double range = *ymax_it - *ymin_it;
  const double scale = std::max(std::abs(*ymax_it), std::abs(*ymin_it));
  const double step = (x.back() - x.front()) / static_cast<double>(x.size() - 1);

  LorentzianModel init;
  if (opt.init) {
    init = *opt.init;
    if (init.n_peaks() != n_peaks) throw InvalidInput("initializer has the wrong number of peaks");
    if (opt.equal_width && init.fwhm.size() != 1) init.fwhm.resize(1);
    if (!opt.equal_width && init.fwhm.size() == 1) init.fwhm.assign(n_peaks, init.fwhm[0]);
    fit.peaks_found = init.centers;
  } else {
    if (!(range > 1e-12 * std::max(scale, 1e-300)) || scale == 0.0) {
      fit.status = FitStatus::degenerate;
      fit.model.baseline = scale == 0.0 ? 0.0 : y.front();
      fit.model.fwhm = {step};
      for (int k = 0; k < n_peaks; ++k) {
        fit.model.centers.push_back(x.front() + (x.back() - x.front()) * (k + 0.5) / n_peaks);
        fit.model.amplitudes.push_back(0.0);
      }
      fit.residual_rms = fit.initial_rms = detail::rms(x, y, fit.model);
      return fit;
    }
    const auto peaks = detail::prominent_maxima(y);
    std::vector<std::size_t> chosen;
    for (const auto& [prom, k] : peaks)
      if (prom >= opt.min_prominence * range && static_cast<int>(chosen.size()) < n_peaks) chosen.push_back(k);
    for (std::size_t k : chosen) fit.peaks_found.push_back(x[k]);
    std::sort(fit.peaks_found.begin(), fit.peaks_found.end());
    if (static_cast<int>(chosen.size()) < n_peaks) {
      fit.status = FitStatus::too_few_peaks;
      return fit;
    }
    std::sort(chosen.begin(), chosen.end());
    init.baseline = *ymin_it;
    // width seed: half-maximum crossing around the tallest peak, capped by
    // the smallest peak spacing
    const std::size_t top = peaks.front().second;
    const double half = 0.5 * (y[top] + init.baseline);
    std::size_t lo = top, hi = top;
    while (lo > 0 && y[lo] > half) --lo;
    while (hi + 1 < y.size() && y[hi] > half) ++hi;
    double w = std::max(x[hi] - x[lo], 2.0 * step);
    for (std::size_t k = 1; k < chosen.size(); ++k) w = std::min(w, std::max(x[chosen[k]] - x[chosen[k - 1]], 2.0 * step));
    init.fwhm.assign(opt.equal_width ? 1 : n_peaks, w);
    for (std::size_t k : chosen) {
      init.centers.push_back(x[k]);
      init.amplitudes.push_back(y[k] - init.baseline);
    }
  }

  fit.initial_rms = detail::rms(x, y, init);
  const int nw = static_cast<int>(init.fwhm.size());
  detail::LorentzianResidual functor{x, y, n_peaks, nw};
  Eigen::VectorXd p = detail::pack(init);
  Eigen::LevenbergMarquardt<detail::LorentzianResidual> lm(functor);
  lm.parameters.xtol = 1e-15;
  lm.parameters.ftol = 1e-15;
  lm.parameters.gtol = 0.0;
  lm.parameters.maxfev = 2000 * (functor.inputs() + 1);
  const auto status = lm.minimize(p);
  fit.evaluations = static_cast<int>(lm.nfev);
  LorentzianModel best = detail::unpack(p, n_peaks, nw);
  double best_rms = detail::rms(x, y, best);
  const bool lm_ok = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters &&
                     status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation && std::isfinite(best_rms);

  if (!lm_ok || best_rms > fit.initial_rms) {
    // simplex fallback from the initializer
    const auto objective = [&](const std::vector<double>& v) {
      return detail::rms(x, y, detail::unpack(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()), n_peaks, nw));
    };
    const Eigen::VectorXd p0 = detail::pack(init);
    SimplexOptions so;
    so.initial_step = 0.05;
    so.max_evaluations = 4000 * static_cast<int>(p0.size());
    const auto res = nelder_mead(objective, std::vector<double>(p0.data(), p0.data() + p0.size()), so);
    fit.used_simplex = true;
    fit.evaluations += res.evaluations;
    const LorentzianModel nm = detail::unpack(Eigen::Map<const Eigen::VectorXd>(res.x.data(), res.x.size()), n_peaks, nw);
    const double nm_rms = detail::rms(x, y, nm);
    if (nm_rms < best_rms || !std::isfinite(best_rms)) {
      best = nm;
      best_rms = nm_rms;
    }
    fit.status = (res.converged || lm_ok) ? FitStatus::converged : FitStatus::not_converged;
  }
  if (!(best_rms <= fit.initial_rms)) {
    best = init;
    best_rms = fit.initial_rms;
  }
  best.sort_by_center();
  fit.model = best;
  fit.residual_rms = best_rms;
  return fit;
}

inline LorentzianFit fit_lorentzians(const SpectrumResult& data, int n_peaks, const LorentzianFitOptions& opt = {}) {
  return fit_lorentzians(data.axis, data.signal, n_peaks, opt);
}

// ---- Gaussian -------------------------------------------------------------

struct GaussianFit {
  double center = 0.0;
  double fwhm = 0.0;
  double amplitude = 0.0;
  double baseline = 0.0;
  double residual_rms = 0.0;
  /// fwhm below two grid steps
  bool under_resolved = false;
  bool converged = false;
};

namespace detail {

struct GaussianResidual {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  const std::vector<double>& x;
  const std::vector<double>& y;
  int inputs() const { return 4; }
  int values() const { return static_cast<int>(x.size()); }
  // p = [baseline, amplitude, center, sigma]
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& r) const {
    for (int i = 0; i < values(); ++i) {
      const double z = (x[i] - p(2)) / p(3);
      r(i) = p(0) + p(1) * std::exp(-0.5 * z * z) - y[i];
    }
    return 0;
  }
  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& jac) const {
    for (int i = 0; i < values(); ++i) {
      const double z = (x[i] - p(2)) / p(3);
      const double g = std::exp(-0.5 * z * z);
      jac(i, 0) = 1.0;
      jac(i, 1) = g;
      jac(i, 2) = p(1) * g * z / p(3);
      jac(i, 3) = p(1) * g * z * z / p(3);
    }
    return 0;
  }
};

}  // namespace detail

/// Single Gaussian peak plus baseline.
inline GaussianFit gaussian_profile_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 6) throw InvalidInput("Gaussian fit needs >= 6 matching points");
  validate_axis(x);
  const double step = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
  const auto top = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double base = *std::min_element(y.begin(), y.end());
  const double half = 0.5 * (y[top] + base);
  std::size_t lo = top, hi = top;
  while (lo > 0 && y[lo] > half) --lo;
  while (hi + 1 < y.size() && y[hi] > half) ++hi;
  const double fwhm_to_sigma = 1.0 / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  Eigen::VectorXd p(4);
  p << base, y[top] - base, x[top], std::max(x[hi] - x[lo], step) * fwhm_to_sigma;

  detail::GaussianResidual functor{x, y};
  Eigen::LevenbergMarquardt<detail::GaussianResidual> lm(functor);
  lm.parameters.xtol = 1e-15;
  lm.parameters.ftol = 1e-15;
  lm.parameters.gtol = 0.0;
  lm.parameters.maxfev = 4000;
  const auto status = lm.minimize(p);

  GaussianFit g;
  g.baseline = p(0);
  g.amplitude = p(1);
  g.center = p(2);
  g.fwhm = std::abs(p(3)) / fwhm_to_sigma;
  Eigen::VectorXd r(static_cast<int>(x.size()));
  functor(p, r);
  g.residual_rms = std::sqrt(r.squaredNorm() / static_cast<double>(x.size()));
  g.converged = status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters &&
                status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation;
  g.under_resolved = g.fwhm < 2.0 * step;
  return g;
}

}  // namespace sawspin
