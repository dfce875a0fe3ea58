#pragma once

// Walk definition (vertex count, coherent couplings, incoherent rates, alpha)
// and the vertex-space density matrix.
//
// Library indices are 0-based. File formats and the CLI use 1-based vertex
// labels; the conversion happens in io.hpp only.

#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "qsw/linalg.hpp"

namespace qsw {

class InvalidStateError : public QswError {
 public:
  using QswError::QswError;
};

class InvalidGraphError : public QswError {
 public:
  using QswError::QswError;
};

/// Hermitian, unit-trace, positive semidefinite N x N matrix.
class DensityMatrix {
 public:
  struct Defects {
    double hermiticity = 0.0;
    double trace = 0.0;          // |Tr rho - 1|
    double min_eigenvalue = 0.0; // of the Hermitian part
  };

  /// Validating constructor; throws InvalidStateError on any violated invariant.
  static DensityMatrix from_matrix(ComplexMatrix m, double tol = kStructuralTol) {
    if (!is_square(m)) throw InvalidStateError("density matrix must be square and non-empty");
    const Defects d = defects_of(m);
    if (d.hermiticity > tol || d.trace > tol || d.min_eigenvalue < -tol) {
      std::ostringstream os;
      os << "invalid density matrix: hermiticity defect " << d.hermiticity << ", trace defect "
         << d.trace << ", min eigenvalue " << d.min_eigenvalue;
      throw InvalidStateError(os.str());
    }
    return DensityMatrix(std::move(m));
  }

  /// Wraps the output of a trace-preserving completely positive map applied
  /// to a valid state. No checks; use defects() to certify.
  static DensityMatrix trusted(ComplexMatrix m) { return DensityMatrix(std::move(m)); }

  /// |psi><psi| / <psi|psi>.
  static DensityMatrix pure(const StateVector& psi) {
    const double n2 = psi.squaredNorm();
    if (!(n2 > kNormalizationTol)) throw InvalidStateError("pure state has zero norm");
    return DensityMatrix(outer(psi) / n2);
  }

  static DensityMatrix basis(Eigen::Index dim, Eigen::Index vertex) {
    if (vertex < 0 || vertex >= dim) throw InvalidStateError("basis vertex out of range");
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    m(vertex, vertex) = 1.0;
    return DensityMatrix(std::move(m));
  }

  static DensityMatrix maximally_mixed(Eigen::Index dim) {
    return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  Eigen::Index dim() const { return matrix_.rows(); }
  const ComplexMatrix& matrix() const { return matrix_; }

  RealVector populations() const { return matrix_.diagonal().real(); }
  double trace() const { return matrix_.trace().real(); }
  double purity() const { return (matrix_ * matrix_).trace().real(); }

  Defects defects() const { return defects_of(matrix_); }

 private:
  explicit DensityMatrix(ComplexMatrix m) : matrix_(std::move(m)) {}

  static Defects defects_of(const ComplexMatrix& m) {
    Defects d;
    d.hermiticity = hermiticity_defect(m);
    d.trace = std::abs(m.trace() - Complex(1.0, 0.0));
    const ComplexMatrix sym = 0.5 * (m + m.adjoint());
    d.min_eigenvalue = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(sym, Eigen::EigenvaluesOnly)
                           .eigenvalues()(0);
    return d;
  }

  ComplexMatrix matrix_;
};

inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  return trace_distance(a.matrix(), b.matrix());
}

/// A discrete-time quantum stochastic walk.
///
/// hamiltonian(m, n) holds the coupling g_nm of the edge n -> m, so the
/// Hamiltonian is sum g_nm |m><n| + h.c. kappa(n, m) is the probability per
/// step of an incoherent jump n -> m; diagonal entries are self-loops.
/// Rows of kappa must sum to 1 - alpha.
class QswGraph {
 public:
  QswGraph(double alpha, ComplexMatrix hamiltonian, RealMatrix kappa,
           bool allow_complex_couplings = false)
      : alpha_(alpha),
        hamiltonian_(std::move(hamiltonian)),
        kappa_(std::move(kappa)),
        allow_complex_(allow_complex_couplings) {
    if (!is_square(hamiltonian_) || kappa_.rows() != hamiltonian_.rows() ||
        kappa_.cols() != hamiltonian_.rows()) {
      throw InvalidGraphError("graph needs N >= 1 and N x N coupling and rate matrices");
    }
  }

  Eigen::Index n_vertices() const { return hamiltonian_.rows(); }
  double alpha() const { return alpha_; }
  const ComplexMatrix& couplings() const { return hamiltonian_; }
  const RealMatrix& kappa() const { return kappa_; }
  double kappa(Eigen::Index from, Eigen::Index to) const { return kappa_(from, to); }
  bool allows_complex_couplings() const { return allow_complex_; }

 private:
  double alpha_;
  ComplexMatrix hamiltonian_;
  RealMatrix kappa_;
  bool allow_complex_;
};

/// Edge-by-edge construction of a QswGraph.
class GraphBuilder {
 public:
  GraphBuilder(Eigen::Index n_vertices, double alpha)
      : alpha_(alpha),
        hamiltonian_(ComplexMatrix::Zero(n_vertices, n_vertices)),
        kappa_(RealMatrix::Zero(n_vertices, n_vertices)) {
    if (n_vertices < 1) throw InvalidGraphError("graph needs at least one vertex");
  }

  /// Coherent edge from -> to with coupling g; the Hermitian partner is mirrored.
  GraphBuilder& coupling(Eigen::Index from, Eigen::Index to, Complex g) {
    check_index(from);
    check_index(to);
    hamiltonian_(to, from) = g;
    hamiltonian_(from, to) = std::conj(g);
    return *this;
  }

  GraphBuilder& rate(Eigen::Index from, Eigen::Index to, double kappa) {
    check_index(from);
    check_index(to);
    kappa_(from, to) = kappa;
    return *this;
  }

  GraphBuilder& allow_complex_couplings(bool allow = true) {
    allow_complex_ = allow;
    return *this;
  }

  QswGraph build() const { return QswGraph(alpha_, hamiltonian_, kappa_, allow_complex_); }

 private:
  void check_index(Eigen::Index v) const {
    if (v < 0 || v >= hamiltonian_.rows()) {
      throw InvalidGraphError("vertex index " + std::to_string(v) + " out of range");
    }
  }

  double alpha_;
  ComplexMatrix hamiltonian_;
  RealMatrix kappa_;
  bool allow_complex_ = false;
};

struct Violation {
  enum class Kind { Alpha, NegativeRate, RateAboveOne, RowSum, NonHermitianCouplings, ComplexCouplings };
  Kind kind;
  Eigen::Index row = -1;
  Eigen::Index col = -1;
  double defect = 0.0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const {
    std::string out;
    for (const auto& v : violations) out += v.message + "\n";
    return out;
  }
};

/// Checks every QswGraph invariant. Violations are returned, never thrown.
/// Messages use 1-based vertex labels.
inline ValidationReport validate(const QswGraph& g, double tol = 1e-9) {
  ValidationReport report;
  auto add = [&](Violation::Kind kind, Eigen::Index r, Eigen::Index c, double defect,
                 std::string msg) {
    report.violations.push_back({kind, r, c, defect, std::move(msg)});
  };
  const Eigen::Index n = g.n_vertices();

  if (!(g.alpha() >= 0.0 && g.alpha() <= 1.0)) {
    const double d = g.alpha() < 0.0 ? -g.alpha() : g.alpha() - 1.0;
    add(Violation::Kind::Alpha, -1, -1, d, "alpha = " + std::to_string(g.alpha()) + " outside [0, 1]");
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      const double k = g.kappa(r, c);
      const std::string where = "(" + std::to_string(r + 1) + "," + std::to_string(c + 1) + ")";
      if (!(k >= 0.0)) {
        add(Violation::Kind::NegativeRate, r, c, -k, "kappa" + where + " = " + std::to_string(k) + " is negative");
      } else if (k > 1.0) {
        add(Violation::Kind::RateAboveOne, r, c, k - 1.0, "kappa" + where + " = " + std::to_string(k) + " exceeds 1");
      }
    }
  }
  for (Eigen::Index r = 0; r < n; ++r) {
    const double sum = g.kappa().row(r).sum();
    const double defect = std::abs(sum - (1.0 - g.alpha()));
    if (!(defect <= tol)) {
      std::ostringstream os;
      os.precision(17);
      os << "row " << r + 1 << ": sum of kappa = " << sum << ", expected 1 - alpha = "
         << 1.0 - g.alpha() << " (defect " << defect << ")";
      add(Violation::Kind::RowSum, r, -1, defect, os.str());
    }
  }
  const double herm = hermiticity_defect(g.couplings());
  if (herm > tol) {
    add(Violation::Kind::NonHermitianCouplings, -1, -1, herm,
        "coherent couplings are not Hermitian (defect " + std::to_string(herm) + ")");
  }
  if (!g.allows_complex_couplings()) {
    const double imag = g.couplings().imag().cwiseAbs().maxCoeff();
    if (imag > tol) {
      add(Violation::Kind::ComplexCouplings, -1, -1, imag,
          "complex coherent couplings present (max |Im g| = " + std::to_string(imag) +
              ") but complex couplings are not enabled");
    }
  }
  return report;
}

inline void require_valid(const QswGraph& g) {
  const ValidationReport report = validate(g);
  if (!report.ok()) throw InvalidGraphError("invalid graph:\n" + report.to_string());
}

/// Graph Hamiltonian sum g_nm (|m><n| + h.c.).
inline ComplexMatrix graph_hamiltonian(const QswGraph& g) {
  require_valid(g);
  return 0.5 * (g.couplings() + g.couplings().adjoint());
}

}  // namespace qsw
