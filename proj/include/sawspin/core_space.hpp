#pragma once

// Truncated (3 electronic levels) x (Fock cutoff N) Hilbert space, dense
// operator algebra on it and the state types shared by the other modules.
//
// Basis order is electronic-major: index = level * N + n, with levels
// |g1> = 0, |g2> = 1, |e> = 2 and Fock states |0> ... |N-1>.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <utility>
#include <vector>

#include "sawspin/errors.hpp"

namespace sawspin {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

enum class Level : int { g1 = 0, g2 = 1, e = 2 };

class HilbertSpace {
 public:
  static constexpr int electronic_dim = 3;

  explicit HilbertSpace(int fock_cutoff) : fock_cutoff_(fock_cutoff) {
    if (fock_cutoff < 1) throw InvalidInput("fock_cutoff must be >= 1");
  }

  int fock_cutoff() const { return fock_cutoff_; }
  int total_dim() const { return electronic_dim * fock_cutoff_; }

  int index(Level level, int n) const {
    if (n < 0 || n >= fock_cutoff_) throw InvalidInput("Fock index out of range");
    return static_cast<int>(level) * fock_cutoff_ + n;
  }

  std::pair<Level, int> decompose(int index) const {
    if (index < 0 || index >= total_dim()) throw InvalidInput("basis index out of range");
    return {static_cast<Level>(index / fock_cutoff_), index % fock_cutoff_};
  }

  friend bool operator==(const HilbertSpace&, const HilbertSpace&) = default;

 private:
  int fock_cutoff_;
};

/// Dense operator on a HilbertSpace. Immutable after construction.
class OperatorMatrix {
 public:
  OperatorMatrix(HilbertSpace space, CMatrix entries)
      : space_(space), entries_(std::move(entries)) {
    if (entries_.rows() != space_.total_dim() || entries_.cols() != space_.total_dim())
      throw InvalidInput("operator dimensions do not match Hilbert space");
  }

  static OperatorMatrix zero(HilbertSpace space) {
    return {space, CMatrix::Zero(space.total_dim(), space.total_dim())};
  }
  static OperatorMatrix identity(HilbertSpace space) {
    return {space, CMatrix::Identity(space.total_dim(), space.total_dim())};
  }

  const HilbertSpace& space() const { return space_; }
  const CMatrix& entries() const { return entries_; }
  cplx operator()(int row, int col) const { return entries_(row, col); }

  OperatorMatrix adjoint() const { return {space_, entries_.adjoint()}; }

  OperatorMatrix operator+(const OperatorMatrix& o) const {
    require_same(o);
    return {space_, entries_ + o.entries_};
  }
  OperatorMatrix operator-(const OperatorMatrix& o) const {
    require_same(o);
    return {space_, entries_ - o.entries_};
  }
  OperatorMatrix operator*(const OperatorMatrix& o) const {
    require_same(o);
    return {space_, entries_ * o.entries_};
  }
  friend OperatorMatrix operator*(cplx s, const OperatorMatrix& a) { return {a.space_, s * a.entries_}; }
  friend OperatorMatrix operator*(double s, const OperatorMatrix& a) { return {a.space_, s * a.entries_}; }

  /// max |A - A^dagger|
  double hermiticity_error() const { return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff(); }

 private:
  void require_same(const OperatorMatrix& o) const {
    if (!(space_ == o.space_)) throw InvalidInput("operators live on different spaces");
  }

  HilbertSpace space_;
  CMatrix entries_;
};

class Ket {
 public:
  Ket(HilbertSpace space, CVector amplitudes) : space_(space), amplitudes_(std::move(amplitudes)) {
    if (amplitudes_.size() != space_.total_dim()) throw InvalidInput("ket dimension mismatch");
  }

  static Ket basis(HilbertSpace space, Level level, int n) {
    CVector v = CVector::Zero(space.total_dim());
    v(space.index(level, n)) = 1.0;
    return {space, std::move(v)};
  }

  const HilbertSpace& space() const { return space_; }
  const CVector& amplitudes() const { return amplitudes_; }
  double norm() const { return amplitudes_.norm(); }

  Ket normalized() const {
    const double n = norm();
    if (n == 0.0) throw InvalidInput("cannot normalize the zero vector");
    return {space_, amplitudes_ / n};
  }

  /// Total probability in an electronic level, summed over Fock states.
  double level_population(Level level) const {
    const int n = space_.fock_cutoff();
    return amplitudes_.segment(static_cast<int>(level) * n, n).squaredNorm();
  }

 private:
  HilbertSpace space_;
  CVector amplitudes_;
};

class DensityMatrixFull {
 public:
  DensityMatrixFull(HilbertSpace space, CMatrix entries) : space_(space), entries_(std::move(entries)) {
    if (entries_.rows() != space_.total_dim() || entries_.cols() != space_.total_dim())
      throw InvalidInput("density matrix dimension mismatch");
  }

  static DensityMatrixFull pure(const Ket& psi) {
    return {psi.space(), psi.amplitudes() * psi.amplitudes().adjoint()};
  }

  const HilbertSpace& space() const { return space_; }
  const CMatrix& entries() const { return entries_; }

  double trace() const { return entries_.trace().real(); }
  double hermiticity_error() const { return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (entries_ + entries_.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  bool is_valid() const {
    return hermiticity_error() <= 1e-10 && std::abs(trace() - 1.0) <= 1e-9 && min_eigenvalue() >= -1e-9;
  }

  /// Electronic populations after tracing out the phonon.
  std::array<double, 3> level_populations() const {
    const int n = space_.fock_cutoff();
    std::array<double, 3> p{};
    for (int l = 0; l < 3; ++l) p[l] = entries_.diagonal().segment(l * n, n).real().sum();
    return p;
  }

  /// Population summed over Fock states n >= n_min, all electronic levels.
  double population_above(int n_min) const {
    double s = 0.0;
    for (int i = 0; i < space_.total_dim(); ++i)
      if (space_.decompose(i).second >= n_min) s += entries_(i, i).real();
    return s;
  }

 private:
  HilbertSpace space_;
  CMatrix entries_;
};

// ---- factor-space building blocks -----------------------------------------

namespace phonon {

/// b|n> = sqrt(n)|n-1> on the truncated space.
inline CMatrix annihilation(int cutoff) {
  CMatrix b = CMatrix::Zero(cutoff, cutoff);
  for (int n = 1; n < cutoff; ++n) b(n - 1, n) = std::sqrt(static_cast<double>(n));
  return b;
}

inline CMatrix creation(int cutoff) { return annihilation(cutoff).adjoint(); }

inline CMatrix number(int cutoff) {
  CMatrix nb = CMatrix::Zero(cutoff, cutoff);
  for (int n = 0; n < cutoff; ++n) nb(n, n) = static_cast<double>(n);
  return nb;
}

inline CMatrix identity(int cutoff) { return CMatrix::Identity(cutoff, cutoff); }

/// (-1)^{b^dagger b}; conjugation by it maps b -> -b.
inline CMatrix parity(int cutoff) {
  CMatrix p = CMatrix::Zero(cutoff, cutoff);
  for (int n = 0; n < cutoff; ++n) p(n, n) = (n % 2 == 0) ? 1.0 : -1.0;
  return p;
}

/// exp[alpha (b^dagger - b)] on the truncated space. The truncated generator
/// is anti-Hermitian, so the result is exactly unitary; it agrees with the
/// infinite-dimensional displacement on the low-Fock block.
inline CMatrix displacement(double alpha, int cutoff) {
  if (alpha == 0.0) return identity(cutoff);
  const CMatrix b = annihilation(cutoff);
  const CMatrix herm = cplx(0.0, alpha) * (b.adjoint() - b);  // i * generator
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm);
  const CVector phases = (-cplx(0.0, 1.0) * es.eigenvalues().cast<cplx>()).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

/// The k-th diagonal band of m: entries (r, c) with r - c == k, zero elsewhere.
inline CMatrix band(const CMatrix& m, int k) {
  CMatrix out = CMatrix::Zero(m.rows(), m.cols());
  for (int c = 0; c < m.cols(); ++c) {
    const int r = c + k;
    if (r >= 0 && r < m.rows()) out(r, c) = m(r, c);
  }
  return out;
}

}  // namespace phonon

namespace electronic {

/// |to><from| as a 3x3 matrix.
inline CMatrix transition(Level to, Level from) {
  CMatrix m = CMatrix::Zero(3, 3);
  m(static_cast<int>(to), static_cast<int>(from)) = 1.0;
  return m;
}

inline CMatrix projector(Level level) { return transition(level, level); }

inline CMatrix identity() { return CMatrix::Identity(3, 3); }

}  // namespace electronic

/// Kronecker product electronic (x) phonon in the electronic-major convention.
inline OperatorMatrix tensor_embed(const CMatrix& electronic_op, const CMatrix& phonon_op,
                                   HilbertSpace space) {
  const int n = space.fock_cutoff();
  if (electronic_op.rows() != 3 || electronic_op.cols() != 3)
    throw InvalidInput("electronic operand must be 3x3");
  if (phonon_op.rows() != n || phonon_op.cols() != n)
    throw InvalidInput("phonon operand does not match the Fock cutoff");
  CMatrix out(3 * n, 3 * n);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out.block(i * n, j * n, n, n) = electronic_op(i, j) * phonon_op;
  return {space, std::move(out)};
}

/// identity_3 (x) exp[alpha (b^dagger - b)].
inline OperatorMatrix displacement_operator(double alpha, HilbertSpace space) {
  return tensor_embed(electronic::identity(), phonon::displacement(alpha, space.fock_cutoff()), space);
}

/// Basis indices with Fock number n <= max_n (all electronic levels).
inline std::vector<int> low_fock_indices(HilbertSpace space, int max_n) {
  std::vector<int> idx;
  for (int l = 0; l < 3; ++l)
    for (int n = 0; n <= max_n && n < space.fock_cutoff(); ++n) idx.push_back(l * space.fock_cutoff() + n);
  return idx;
}

/// P m P restricted to the n <= max_n block.
inline CMatrix restrict_to_low_fock(const CMatrix& m, HilbertSpace space, int max_n) {
  const auto idx = low_fock_indices(space, max_n);
  const int k = static_cast<int>(idx.size());
  CMatrix out(k, k);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) out(r, c) = m(idx[r], idx[c]);
  return out;
}

/// Reruns `observable` at cutoffs N and N + extra and reports whether the
/// relative change is below tol.
struct ConvergenceReport {
  double value;
  double value_extended;
  double relative_change;
  bool converged;
};

inline ConvergenceReport check_fock_convergence(const std::function<double(int)>& observable, int cutoff,
                                                int extra = 5, double tol = 1e-6) {
  const double a = observable(cutoff);
  const double b = observable(cutoff + extra);
  const double scale = std::max(std::abs(b), 1e-300);
  const double rel = std::abs(a - b) / scale;
  return {a, b, rel, rel < tol};
}

}  // namespace sawspin
