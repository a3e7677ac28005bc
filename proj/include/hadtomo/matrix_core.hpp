#pragma once

// Dense complex-matrix substrate for phase-damping channel tomography:
// Hadamard products, trace pairings, Hermitian operator bases, numerical
// rank, and density-matrix handling. Everything is a pure function over
// small (n <= ~16) matrices; Eigen does the heavy lifting.

#include <Eigen/Dense>

#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hadtomo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

namespace tol {
// Double-precision headroom for eigenproblems at the dimensions we target.
inline constexpr double hermitian = 1e-10;
inline constexpr double trace = 1e-10;
inline constexpr double psd = 1e-9;
// Relative singular-value threshold; robust to the exponential-decay
// conditioning typical of sampled channel trajectories.
inline constexpr double rank = 1e-9;
inline constexpr double unit_diagonal = 1e-10;
}  // namespace tol

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation (negative time,
// tabulated signal evaluated off its table, degenerate denominators).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Violation of density-matrix (or observable) invariants.
class StateError : public Error {
 public:
  using Error::Error;
};

class DecompositionError : public Error {
 public:
  DecompositionError(const std::string& what, double offending_time)
      : Error(what), time(offending_time) {}
  double time;
};

class SolvabilityError : public Error {
 public:
  using Error::Error;
};

class CompletenessError : public Error {
 public:
  CompletenessError(const std::string& what, int missing)
      : Error(what), deficit(missing) {}
  int deficit;
};

inline bool all_finite(const ComplexMatrix& m) {
  return m.array().isFinite().all();
}

inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Largest entrywise deviation from M = M^dagger.
inline double hermiticity_defect(const ComplexMatrix& m) {
  return max_abs(m - m.adjoint());
}

inline bool is_hermitian(const ComplexMatrix& m, double eps = tol::hermitian) {
  return m.rows() == m.cols() && hermiticity_defect(m) <= eps;
}

inline void require_square(const ComplexMatrix& m, const char* who) {
  if (m.rows() != m.cols())
    throw DimensionError(std::string(who) + ": matrix must be square, got " +
                         std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
}

inline void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b,
                               const char* who) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(who) + ": shape mismatch " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()));
}

inline ComplexMatrix identity_matrix(Eigen::Index n) {
  return ComplexMatrix::Identity(n, n);
}

/// All-ones matrix J, the identity element of the Hadamard product.
inline ComplexMatrix ones_matrix(Eigen::Index n) {
  return ComplexMatrix::Ones(n, n);
}

inline ComplexMatrix pauli_x() {
  ComplexMatrix s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

inline ComplexMatrix pauli_y() {
  ComplexMatrix s(2, 2);
  s << 0, Complex(0, -1), Complex(0, 1), 0;
  return s;
}

inline ComplexMatrix pauli_z() {
  ComplexMatrix s(2, 2);
  s << 1, 0, 0, -1;
  return s;
}

/// Entrywise (Hadamard) product of two equal-shape matrices.
inline ComplexMatrix hadamard(const ComplexMatrix& a, const ComplexMatrix& b) {
  require_same_shape(a, b, "hadamard");
  return a.cwiseProduct(b);
}

/// Hermitian positive-semidefinite unit-trace matrix; the quantum state.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m) : mat_(std::move(m)) {
    require_square(mat_, "DensityMatrix");
    if (mat_.rows() < 1) throw DimensionError("DensityMatrix: empty matrix");
    if (!all_finite(mat_)) throw StateError("DensityMatrix: non-finite entries");
    const double herm = hermiticity_defect(mat_);
    if (herm > tol::hermitian)
      throw StateError("DensityMatrix: not Hermitian, defect " +
                       std::to_string(herm));
    const double tr_err = std::abs(mat_.trace() - Complex(1.0));
    if (tr_err > tol::trace)
      throw StateError("DensityMatrix: trace deviates from 1 by " +
                       std::to_string(tr_err));
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(
        ((mat_ + mat_.adjoint()) / 2.0).eval(), Eigen::EigenvaluesOnly);
    min_eigenvalue_ = es.eigenvalues().minCoeff();
    if (min_eigenvalue_ < -tol::psd)
      throw StateError("DensityMatrix: not positive semidefinite, min "
                       "eigenvalue " +
                       std::to_string(min_eigenvalue_));
  }

  Eigen::Index dim() const { return mat_.rows(); }
  const ComplexMatrix& matrix() const { return mat_; }
  double min_eigenvalue() const { return min_eigenvalue_; }

 private:
  ComplexMatrix mat_;
  double min_eigenvalue_;
};

/// Labeled Hermitian operator whose expectation Tr(Q rho) is measurable.
class Observable {
 public:
  explicit Observable(ComplexMatrix m, std::string label = "")
      : mat_(std::move(m)), label_(std::move(label)) {
    require_square(mat_, "Observable");
    if (!all_finite(mat_)) throw StateError("Observable: non-finite entries");
    if (!is_hermitian(mat_))
      throw StateError("Observable '" + label_ + "': not Hermitian");
  }

  Eigen::Index dim() const { return mat_.rows(); }
  const ComplexMatrix& matrix() const { return mat_; }
  const std::string& label() const { return label_; }

 private:
  ComplexMatrix mat_;
  std::string label_;
};

/// Tr(M rho); real up to rounding when M is Hermitian.
inline Complex trace_pair(const ComplexMatrix& m, const ComplexMatrix& rho) {
  require_square(m, "trace_pair");
  require_same_shape(m, rho, "trace_pair");
  return (m * rho).trace();
}

inline Complex trace_pair(const ComplexMatrix& m, const DensityMatrix& rho) {
  return trace_pair(m, rho.matrix());
}

inline Complex trace_pair(const Observable& q, const DensityMatrix& rho) {
  return trace_pair(q.matrix(), rho.matrix());
}

// Trace transport across a Hadamard product: Tr{A^T (B o C)} and
// Tr{(A^T o B^T) C} computed along their own routes. The two values agree
// for any equal-shape triple; returning both makes the identity testable.
inline std::pair<Complex, Complex> hadamard_trace_transport(
    const ComplexMatrix& a, const ComplexMatrix& b, const ComplexMatrix& c) {
  require_same_shape(a, b, "hadamard_trace_transport");
  require_same_shape(b, c, "hadamard_trace_transport");
  const Complex lhs = (a.transpose() * b.cwiseProduct(c)).trace();
  const Complex rhs =
      (a.transpose().cwiseProduct(b.transpose()) * c).trace();
  return {lhs, rhs};
}

/// Identity plus the n^2 - 1 traceless generalized Gell-Mann generators,
/// normalized so Tr(G_a G_b) = 2 delta_ab for a,b > 0 (Pauli-compatible
/// at n = 2). Pairwise orthogonal under the Hilbert-Schmidt pairing.
struct HermitianBasis {
  Eigen::Index dim = 0;
  std::vector<ComplexMatrix> operators;
};

inline HermitianBasis hermitian_basis(Eigen::Index n) {
  if (n < 2) throw DomainError("hermitian_basis: need dimension >= 2");
  HermitianBasis basis;
  basis.dim = n;
  basis.operators.reserve(static_cast<std::size_t>(n * n));
  basis.operators.push_back(identity_matrix(n));
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index k = j + 1; k < n; ++k) {
      ComplexMatrix sym = ComplexMatrix::Zero(n, n);
      sym(j, k) = 1.0;
      sym(k, j) = 1.0;
      basis.operators.push_back(sym);
      ComplexMatrix asym = ComplexMatrix::Zero(n, n);
      asym(j, k) = Complex(0, -1);
      asym(k, j) = Complex(0, 1);
      basis.operators.push_back(asym);
    }
  }
  for (Eigen::Index l = 1; l < n; ++l) {
    ComplexMatrix diag = ComplexMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < l; ++j) diag(j, j) = 1.0;
    diag(l, l) = -static_cast<double>(l);
    diag *= std::sqrt(2.0 / (static_cast<double>(l) * (l + 1)));
    basis.operators.push_back(diag);
  }
  return basis;
}

inline ComplexVector vectorize(const ComplexMatrix& m) {
  return Eigen::Map<const ComplexVector>(m.data(), m.size());
}

/// Count of singular values above tol * sigma_max after stacking the
/// matrices as flat vectors; 0 for all-zero input.
inline int numerical_rank(const std::vector<ComplexMatrix>& mats,
                          double eps = tol::rank) {
  if (mats.empty()) throw DimensionError("numerical_rank: empty list");
  const Eigen::Index rows = mats.front().rows();
  const Eigen::Index cols = mats.front().cols();
  ComplexMatrix stacked(rows * cols, static_cast<Eigen::Index>(mats.size()));
  for (std::size_t i = 0; i < mats.size(); ++i) {
    if (mats[i].rows() != rows || mats[i].cols() != cols)
      throw DimensionError("numerical_rank: non-uniform shapes in list");
    stacked.col(static_cast<Eigen::Index>(i)) = vectorize(mats[i]);
  }
  Eigen::JacobiSVD<ComplexMatrix> svd(stacked);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > eps * sv(0)) ++rank;
  return rank;
}

/// Real numerical rank of a set of Hermitian matrices inside the n^2
/// dimensional real vector space of Hermitian operators.
inline int numerical_rank_hermitian(const std::vector<ComplexMatrix>& mats,
                                    double eps = tol::rank) {
  if (mats.empty()) throw DimensionError("numerical_rank_hermitian: empty list");
  const Eigen::Index n = mats.front().rows();
  RealMatrix stacked(n * n, static_cast<Eigen::Index>(mats.size()));
  for (std::size_t i = 0; i < mats.size(); ++i) {
    if (mats[i].rows() != n || mats[i].cols() != n)
      throw DimensionError("numerical_rank_hermitian: non-uniform shapes");
    // Coordinates: diagonal, then re/im of the upper triangle.
    RealVector v(n * n);
    Eigen::Index at = 0;
    for (Eigen::Index j = 0; j < n; ++j) v(at++) = mats[i](j, j).real();
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = j + 1; k < n; ++k) {
        v(at++) = mats[i](j, k).real();
        v(at++) = mats[i](j, k).imag();
      }
    stacked.col(static_cast<Eigen::Index>(i)) = v;
  }
  Eigen::JacobiSVD<RealMatrix> svd(stacked);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > eps * sv(0)) ++rank;
  return rank;
}

/// Project an approximately Hermitian matrix onto the density-matrix set:
/// symmetrize, clip negative eigenvalues, renormalize the trace.
/// Idempotent on valid density matrices.
inline DensityMatrix nearest_density(const ComplexMatrix& h) {
  require_square(h, "nearest_density");
  if (!all_finite(h)) throw StateError("nearest_density: non-finite entries");
  const ComplexMatrix sym = (h + h.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(sym);
  if (es.info() != Eigen::Success)
    throw StateError("nearest_density: eigendecomposition failed");
  RealVector vals = es.eigenvalues().cwiseMax(0.0);
  const double total = vals.sum();
  if (total <= 0.0)
    throw StateError("nearest_density: degenerate input, nothing left after "
                     "clipping negative eigenvalues");
  vals /= total;
  ComplexMatrix out = es.eigenvectors() * vals.asDiagonal() *
                      es.eigenvectors().adjoint();
  // Round off the rebuild noise so the result passes strict validation.
  out = (out + out.adjoint()) / 2.0;
  out /= out.trace().real();
  return DensityMatrix(out);
}

}  // namespace hadtomo
