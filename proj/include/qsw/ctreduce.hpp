#pragma once

// Continuous-time QSWs with jump operators |m><n| and their reduction to a
// discrete-time walk. The Lindblad equation in this convention is
//
//   d rho/dt = (1 - w)(-i[H, rho]) + w sum_nm gamma_nm (|m><n| rho |n><m| - 1/2 {|n><n|, rho}).
//
// A reduction exists iff every row of gamma has the same sum gamma; then
// dt = 1/gamma, kappa_nm = w gamma_nm dt and alpha = 1 - w give a discrete
// step that matches exp(L dt) to first order in dt.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "qsw/channel.hpp"
#include "qsw/fit.hpp"
#include "qsw/graph.hpp"
#include "qsw/linalg.hpp"

namespace qsw {

class ReductionError : public QswError {
 public:
  using QswError::QswError;
};

inline constexpr const char* kUniformRowCondition =
    "a discrete-time reduction requires equal Lindblad row sums: "
    "sum_m gamma_nm = gamma for every vertex n";

struct LindbladSpec {
  ComplexMatrix hamiltonian;  // Hermitian N x N
  RealMatrix rates;           // rates(n, m) = gamma_nm for the jump n -> m
  double omega = 0.0;

  Eigen::Index n_vertices() const { return hamiltonian.rows(); }
};

inline std::vector<std::string> spec_violations(const LindbladSpec& spec, double tol = kStructuralTol) {
  std::vector<std::string> out;
  if (!is_square(spec.hamiltonian)) {
    out.push_back("hamiltonian must be a non-empty square matrix");
    return out;
  }
  if (spec.rates.rows() != spec.n_vertices() || spec.rates.cols() != spec.n_vertices()) {
    out.push_back("rate matrix must be N x N");
    return out;
  }
  const double herm = hermiticity_defect(spec.hamiltonian);
  if (herm > tol) out.push_back("hamiltonian is not Hermitian (defect " + std::to_string(herm) + ")");
  for (Eigen::Index n = 0; n < spec.n_vertices(); ++n) {
    for (Eigen::Index m = 0; m < spec.n_vertices(); ++m) {
      if (!(spec.rates(n, m) >= 0.0)) {
        out.push_back("gamma(" + std::to_string(n + 1) + "," + std::to_string(m + 1) + ") is negative");
      }
    }
  }
  if (!(spec.omega >= 0.0 && spec.omega <= 1.0)) out.push_back("omega outside [0, 1]");
  return out;
}

inline void require_valid(const LindbladSpec& spec) {
  const auto v = spec_violations(spec);
  if (!v.empty()) {
    std::string msg = "invalid Lindblad spec:";
    for (const auto& s : v) msg += "\n" + s;
    throw ReductionError(msg);
  }
}

struct UniformRate {
  enum class Status { Uniform, NonUniform, NoDissipation };
  Status status = Status::Uniform;
  double gamma = 0.0;               // common row sum when Uniform
  std::vector<double> row_sums;
  std::vector<Eigen::Index> deviating_rows;  // rows differing from row 0

  bool ok() const { return status == Status::Uniform; }
  std::string message() const {
    std::ostringstream os;
    os.precision(17);
    switch (status) {
      case Status::Uniform:
        os << "uniform row sum gamma = " << gamma;
        break;
      case Status::NoDissipation:
        os << "all Lindblad rates are zero: there is no incoherent part and dt = 1/gamma is undefined";
        break;
      case Status::NonUniform:
        os << kUniformRowCondition << "; row sums are";
        for (std::size_t n = 0; n < row_sums.size(); ++n) os << " row " << n + 1 << " = " << row_sums[n] << ";";
        os << " deviating rows:";
        for (auto r : deviating_rows) os << " " << r + 1;
        break;
    }
    return os.str();
  }
};

inline UniformRate uniform_rate(const LindbladSpec& spec, double tol = 1e-9) {
  UniformRate r;
  const Eigen::Index n = spec.n_vertices();
  for (Eigen::Index i = 0; i < n; ++i) r.row_sums.push_back(spec.rates.row(i).sum());
  for (Eigen::Index i = 1; i < n; ++i) {
    if (std::abs(r.row_sums[static_cast<std::size_t>(i)] - r.row_sums[0]) > tol) r.deviating_rows.push_back(i);
  }
  bool all_zero = true;
  for (double s : r.row_sums) all_zero = all_zero && std::abs(s) <= tol;
  if (!r.deviating_rows.empty()) {
    r.status = UniformRate::Status::NonUniform;
  } else if (all_zero) {
    r.status = UniformRate::Status::NoDissipation;
  } else {
    r.gamma = r.row_sums[0];
  }
  return r;
}

struct ReductionResult {
  QswGraph graph;
  double dt;
};

inline ReductionResult reduce_to_discrete(const LindbladSpec& spec) {
  require_valid(spec);
  const UniformRate rate = uniform_rate(spec);
  if (!rate.ok()) throw ReductionError(rate.message());
  const double dt = 1.0 / rate.gamma;
  const RealMatrix p = spec.rates * dt;
  const RealMatrix kappa = spec.omega * p;
  const bool complex_h = spec.hamiltonian.imag().cwiseAbs().maxCoeff() > 0.0;
  QswGraph g(1.0 - spec.omega, spec.hamiltonian, kappa, complex_h);
  const ValidationReport report = validate(g);
  if (!report.ok()) throw ReductionError("reduced graph failed validation:\n" + report.to_string());
  return {std::move(g), dt};
}

/// Copy of spec with every rate multiplied by s.
inline LindbladSpec scale_rates(LindbladSpec spec, double s) {
  spec.rates *= s;
  return spec;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Column-stacked vec and its inverse.
inline Eigen::VectorXcd vectorize(const ComplexMatrix& m) {
  return Eigen::Map<const Eigen::VectorXcd>(m.data(), m.size());
}

inline ComplexMatrix unvectorize(const Eigen::VectorXcd& v, Eigen::Index dim) {
  return Eigen::Map<const ComplexMatrix>(v.data(), dim, dim);
}

/// Generator L_w acting on column-stacked rho, using vec(A X B) = (B^T (x) A) vec(X).
inline ComplexMatrix liouvillian_superoperator(const LindbladSpec& spec) {
  require_valid(spec);
  const Eigen::Index n = spec.n_vertices();
  const ComplexMatrix id = ComplexMatrix::Identity(n, n);
  const ComplexMatrix& h = spec.hamiltonian;
  const Complex minus_i(0.0, -1.0);

  ComplexMatrix l = (1.0 - spec.omega) * minus_i * (kron(id, h) - kron(h.transpose(), id));
  for (Eigen::Index from = 0; from < n; ++from) {
    for (Eigen::Index to = 0; to < n; ++to) {
      const double gamma = spec.rates(from, to);
      if (gamma == 0.0) continue;
      ComplexMatrix jump = ComplexMatrix::Zero(n, n);
      jump(to, from) = 1.0;
      const ComplexMatrix jj = jump.adjoint() * jump;
      l += spec.omega * gamma *
           (kron(jump.conjugate(), jump) - 0.5 * kron(id, jj) - 0.5 * kron(jj.transpose(), id));
    }
  }
  return l;
}

/// Right-hand side of the master equation evaluated in operator form.
inline ComplexMatrix lindblad_rhs(const LindbladSpec& spec, const ComplexMatrix& rho) {
  const Eigen::Index n = spec.n_vertices();
  const Complex minus_i(0.0, -1.0);
  ComplexMatrix out = (1.0 - spec.omega) * minus_i * (spec.hamiltonian * rho - rho * spec.hamiltonian);
  for (Eigen::Index from = 0; from < n; ++from) {
    for (Eigen::Index to = 0; to < n; ++to) {
      const double gamma = spec.rates(from, to);
      if (gamma == 0.0) continue;
      // |to><from| rho |from><to| - 1/2 {|from><from|, rho}
      ComplexMatrix term = ComplexMatrix::Zero(n, n);
      term(to, to) += rho(from, from);
      term.row(from) -= 0.5 * rho.row(from);
      term.col(from) -= 0.5 * rho.col(from);
      out += spec.omega * gamma * term;
    }
  }
  return out;
}

/// exp(L_w t) rho.
inline DensityMatrix exact_lindblad_propagate(const LindbladSpec& spec, const DensityMatrix& rho, double t) {
  if (!(t >= 0.0)) throw QswError("propagation time must be non-negative");
  if (rho.dim() != spec.n_vertices()) throw DimensionError("state/spec dimension mismatch");
  if (t == 0.0) return rho;
  const ComplexMatrix l = liouvillian_superoperator(spec) * t;
  const ComplexMatrix prop = l.exp();
  return DensityMatrix::trusted(unvectorize(prop * vectorize(rho.matrix()), rho.dim()));
}

/// (1 - w)(rho + dt H rho) + w(rho + dt Lambda rho), evaluated literally.
/// Not guaranteed positive or trace preserving, so a bare matrix is returned.
inline ComplexMatrix first_order_step(const LindbladSpec& spec, const DensityMatrix& rho, double dt) {
  require_valid(spec);
  if (!(dt > 0.0)) throw QswError("time step must be positive");
  if (rho.dim() != spec.n_vertices()) throw DimensionError("state/spec dimension mismatch");
  return rho.matrix() + dt * lindblad_rhs(spec, rho.matrix());
}

/// Trace distance between one reduced discrete step and exact propagation
/// over the same dt = 1/gamma.
inline double reduction_step_error(const LindbladSpec& spec, const DensityMatrix& rho) {
  const ReductionResult red = reduce_to_discrete(spec);
  const DensityMatrix discrete = apply(build_step_channel(red.graph, red.dt), rho);
  return trace_distance(discrete, exact_lindblad_propagate(spec, rho, red.dt));
}

struct ReductionErrorRow {
  double scale;
  double dt;
  double trace_distance;
};

struct ReductionErrorTable {
  std::vector<ReductionErrorRow> rows;
  double loglog_slope_vs_dt = 0.0;
};

/// Per-step reduction error with all rates scaled by each s (dt = 1/(s gamma)).
inline ReductionErrorTable reduction_error_table(const LindbladSpec& spec, const DensityMatrix& rho,
                                                 const std::vector<double>& scales = {1, 2, 4, 8}) {
  ReductionErrorTable table;
  std::vector<double> dts;
  std::vector<double> errs;
  for (double s : scales) {
    const LindbladSpec scaled = scale_rates(spec, s);
    const double dt = reduce_to_discrete(scaled).dt;
    const double err = reduction_step_error(scaled, rho);
    table.rows.push_back({s, dt, err});
    dts.push_back(dt);
    errs.push_back(err);
  }
  if (scales.size() >= 2) table.loglog_slope_vs_dt = loglog_slope(dts, errs);
  return table;
}

}  // namespace qsw
