#pragma once

// Dense complex numerics shared by the rest of the library. Everything here is
// a pure function of its inputs.

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qsw {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using StateVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr double kStructuralTol = 1e-10;
inline constexpr double kNormalizationTol = 1e-12;

/// Base class for every error raised by the library.
class QswError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public QswError {
 public:
  using QswError::QswError;
};

class NotHermitianError : public QswError {
 public:
  using QswError::QswError;
};

/// Largest entry magnitude, the norm used for every structural tolerance.
inline double max_abs(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool is_square(const ComplexMatrix& m) {
  return m.rows() == m.cols() && m.rows() >= 1;
}

inline double hermiticity_defect(const ComplexMatrix& m) {
  if (!is_square(m)) {
    throw DimensionError("hermiticity check needs a square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  return max_abs(m - m.adjoint());
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = kStructuralTol) {
  return hermiticity_defect(m) <= tol;
}

inline double unitarity_defect(const ComplexMatrix& u) {
  return max_abs(u.adjoint() * u - ComplexMatrix::Identity(u.cols(), u.cols()));
}

struct HermitianEigen {
  RealVector values;     // ascending
  ComplexMatrix vectors; // columns are eigenvectors, unitary
};

/// Spectral decomposition M = V diag(values) V^dagger. The input is
/// symmetrized before decomposition so sub-tolerance asymmetry cannot leak
/// into the eigenvectors.
inline HermitianEigen eig_hermitian(const ComplexMatrix& m, double tol = kStructuralTol) {
  const double defect = hermiticity_defect(m);
  if (defect > tol) {
    throw NotHermitianError("matrix is not Hermitian (defect " + std::to_string(defect) + ")");
  }
  const ComplexMatrix sym = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
  if (solver.info() != Eigen::Success) {
    throw QswError("Hermitian eigensolver failed to converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// exp(-i H t) for Hermitian H, via the eigendecomposition of H.
inline ComplexMatrix propagator(const ComplexMatrix& hamiltonian, double t) {
  if (t == 0.0) {
    if (!is_hermitian(hamiltonian)) throw NotHermitianError("propagator needs a Hermitian Hamiltonian");
    return ComplexMatrix::Identity(hamiltonian.rows(), hamiltonian.cols());
  }
  const HermitianEigen eig = eig_hermitian(hamiltonian);
  Eigen::VectorXcd phases(eig.values.size());
  for (Eigen::Index k = 0; k < eig.values.size(); ++k) {
    phases(k) = std::exp(Complex(0.0, -eig.values(k) * t));
  }
  return eig.vectors * phases.asDiagonal() * eig.vectors.adjoint();
}

inline double min_eigenvalue(const ComplexMatrix& m, double tol = kStructuralTol) {
  return eig_hermitian(m, tol).values(0);
}

/// Half the trace norm of A - B. Accepts any pair of equally sized Hermitian
/// matrices; callers normally pass density matrices.
inline double trace_distance(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("trace_distance: dimension mismatch " + std::to_string(a.rows()) +
                         " vs " + std::to_string(b.rows()));
  }
  const HermitianEigen eig = eig_hermitian(a - b);
  return 0.5 * eig.values.cwiseAbs().sum();
}

inline ComplexMatrix outer(const StateVector& psi) { return psi * psi.adjoint(); }

}  // namespace qsw
