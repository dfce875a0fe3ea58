#pragma once

// Trajectory protocol for one QSW time step on the 2N-dimensional
// vertex + ancilla space:
//
//   1. couple every vertex m to its ancilla a_m for a rotation angle
//      arccos(sqrt(alpha)), diverting weight 1 - alpha into the ancillae;
//   2. evolve the vertex block under the graph Hamiltonian for dt;
//   3. measure all ancillae. If one is occupied (a_i), pick a target vertex j
//      with probability kappa_ij / sum_j kappa_ij and move the excitation there.
//
// Basis order is [vertex 0..N-1, ancilla 0..N-1]; ancilla a_i sits at index N + i.
// The ensemble average of step() is exactly the channel of build_step_channel;
// enumerate_step_channel writes that average out as an operator sum.

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "qsw/channel.hpp"
#include "qsw/graph.hpp"
#include "qsw/linalg.hpp"
#include "qsw/random.hpp"

namespace qsw {

/// Pure state on vertices + ancillae.
class ExtendedState {
 public:
  ExtendedState(Eigen::Index n_vertices, StateVector amplitudes)
      : n_(n_vertices), amps_(std::move(amplitudes)) {
    if (n_ < 1 || amps_.size() != 2 * n_) {
      throw DimensionError("extended state needs 2N amplitudes");
    }
  }

  static ExtendedState vertex(Eigen::Index n_vertices, Eigen::Index v) {
    StateVector a = StateVector::Zero(2 * n_vertices);
    a(v) = 1.0;
    return ExtendedState(n_vertices, std::move(a));
  }

  static ExtendedState ancilla(Eigen::Index n_vertices, Eigen::Index i) {
    StateVector a = StateVector::Zero(2 * n_vertices);
    a(n_vertices + i) = 1.0;
    return ExtendedState(n_vertices, std::move(a));
  }

  Eigen::Index n_vertices() const { return n_; }
  const StateVector& amplitudes() const { return amps_; }
  auto vertex_block() const { return amps_.head(n_); }
  auto ancilla_block() const { return amps_.tail(n_); }

  double norm2() const { return amps_.squaredNorm(); }
  double max_ancilla_amplitude() const { return ancilla_block().cwiseAbs().maxCoeff(); }

  /// Normalized with empty ancillae, the form required between steps.
  bool at_step_boundary(double tol = kStructuralTol) const {
    return std::abs(norm2() - 1.0) <= tol && max_ancilla_amplitude() <= tol;
  }

  friend bool operator==(const ExtendedState& a, const ExtendedState& b) {
    return a.n_ == b.n_ && a.amps_.size() == b.amps_.size() && a.amps_ == b.amps_;
  }

 private:
  Eigen::Index n_;
  StateVector amps_;
};

/// Zero-pads a vertex state into the extended space.
inline ExtendedState embed(const StateVector& psi) {
  const Eigen::Index n = psi.size();
  StateVector a = StateVector::Zero(2 * n);
  a.head(n) = psi;
  return ExtendedState(n, std::move(a));
}

/// Places rho in the vertex-vertex block of a 2N x 2N density matrix.
inline DensityMatrix embed(const DensityMatrix& rho) {
  const Eigen::Index n = rho.dim();
  ComplexMatrix m = ComplexMatrix::Zero(2 * n, 2 * n);
  m.topLeftCorner(n, n) = rho.matrix();
  return DensityMatrix::trusted(std::move(m));
}

/// Rotation angle g * dt_init of the vertex-ancilla coupling.
inline double init_angle(double alpha) { return std::acos(std::sqrt(alpha)); }

/// exp(-i H_init dt_init) with H_init = g sum_m (|m><a_m| + h.c.) and
/// g dt_init = arccos(sqrt(alpha)). On an ancilla-free state the vertex
/// amplitudes scale by sqrt(alpha) and a_m gains -i sqrt(1 - alpha) psi_m.
inline ComplexMatrix init_unitary(const QswGraph& g) {
  require_valid(g);
  const Eigen::Index n = g.n_vertices();
  ComplexMatrix h = ComplexMatrix::Zero(2 * n, 2 * n);
  for (Eigen::Index m = 0; m < n; ++m) {
    h(m, n + m) = 1.0;
    h(n + m, m) = 1.0;
  }
  return propagator(h, init_angle(g.alpha()));
}

/// Graph propagator on the vertex block, identity on the ancillae.
inline ComplexMatrix coherent_unitary(const QswGraph& g, double dt) {
  if (!(dt >= 0.0)) throw QswError("time step must be non-negative");
  const Eigen::Index n = g.n_vertices();
  ComplexMatrix u = ComplexMatrix::Identity(2 * n, 2 * n);
  u.topLeftCorner(n, n) = propagator(graph_hamiltonian(g), dt);
  return u;
}

/// Result of measuring the ancillae: either all empty or the excitation
/// found in ancilla a_i.
struct Branch {
  std::optional<Eigen::Index> ancilla;

  static Branch empty() { return {}; }
  static Branch at_ancilla(Eigen::Index i) { return {i}; }
  bool is_empty() const { return !ancilla.has_value(); }

  friend bool operator==(const Branch&, const Branch&) = default;
};

struct MeasurementResult {
  Branch branch;
  ExtendedState post_state;
};

inline constexpr double kDegenerateNorm = 1e-12;

/// Projective measurement of ancilla occupation (N + 1 outcomes).
template <std::uniform_random_bit_generator Rng>
MeasurementResult measure_ancillae(const ExtendedState& s, Rng& rng) {
  const Eigen::Index n = s.n_vertices();
  const double total = s.norm2();
  if (!(total >= kDegenerateNorm)) throw QswError("measure_ancillae: degenerate state");

  std::vector<double> weights(static_cast<std::size_t>(n + 1));
  weights[0] = s.vertex_block().squaredNorm();
  for (Eigen::Index i = 0; i < n; ++i) weights[static_cast<std::size_t>(i + 1)] = std::norm(s.amplitudes()(n + i));

  const std::size_t outcome = sample_index(std::span<const double>(weights), rng);
  if (outcome == 0) {
    StateVector a = StateVector::Zero(2 * n);
    a.head(n) = s.vertex_block() / std::sqrt(weights[0]);
    return {Branch::empty(), ExtendedState(n, std::move(a))};
  }
  const Eigen::Index i = static_cast<Eigen::Index>(outcome) - 1;
  return {Branch::at_ancilla(i), ExtendedState::ancilla(n, i)};
}

/// P(j | i) = kappa_ij / sum_j kappa_ij for a measured ancilla a_i.
inline std::vector<double> feed_forward_distribution(const QswGraph& g, Eigen::Index i) {
  const double row = g.kappa().row(i).sum();
  if (!(row > 0.0)) {
    throw QswError("feed-forward from ancilla " + std::to_string(i + 1) +
                   ": row has no incoherent weight (alpha = 1), branch is impossible");
  }
  std::vector<double> p(static_cast<std::size_t>(g.n_vertices()));
  for (Eigen::Index j = 0; j < g.n_vertices(); ++j) p[static_cast<std::size_t>(j)] = g.kappa(i, j) / row;
  return p;
}

template <std::uniform_random_bit_generator Rng>
Eigen::Index feed_forward(Eigen::Index branch_i, const QswGraph& g, Rng& rng) {
  const std::vector<double> p = feed_forward_distribution(g, branch_i);
  return static_cast<Eigen::Index>(sample_index(std::span<const double>(p), rng));
}

struct StepOutcome {
  Branch branch;
  std::optional<Eigen::Index> feedforward_target;  // set iff branch is an ancilla
  ExtendedState post_state;
};

/// One validated graph and time step with the protocol unitaries precomputed.
/// Stateless after construction; step() may be called concurrently with
/// independent random streams.
class StepProtocol {
 public:
  StepProtocol(QswGraph graph, double dt)
      : graph_(std::move(graph)),
        dt_(dt),
        unitary_(coherent_unitary(graph_, dt) * init_unitary(graph_)) {
    if (!(dt > 0.0)) throw QswError("time step must be positive");
    if (graph_.alpha() < 1.0) {
      for (Eigen::Index i = 0; i < graph_.n_vertices(); ++i) {
        feed_forward_.push_back(feed_forward_distribution(graph_, i));
      }
    }
  }

  const QswGraph& graph() const { return graph_; }
  double dt() const { return dt_; }

  /// U_coh * U_init, applied before the measurement.
  const ComplexMatrix& pre_measurement_unitary() const { return unitary_; }

  template <std::uniform_random_bit_generator Rng>
  StepOutcome step(const ExtendedState& s, Rng& rng) const {
    if (s.n_vertices() != graph_.n_vertices()) throw DimensionError("step: state/graph size mismatch");
    if (!s.at_step_boundary()) throw QswError("step: input must be normalized with empty ancillae");
    const ExtendedState evolved(s.n_vertices(), unitary_ * s.amplitudes());
    MeasurementResult m = measure_ancillae(evolved, rng);
    if (m.branch.is_empty()) return {m.branch, std::nullopt, std::move(m.post_state)};

    const Eigen::Index i = *m.branch.ancilla;
    if (feed_forward_.empty()) throw QswError("step: ancilla occupied although alpha = 1");
    const auto& p = feed_forward_[static_cast<std::size_t>(i)];
    const auto j = static_cast<Eigen::Index>(sample_index(std::span<const double>(p), rng));
    return {m.branch, j, ExtendedState::vertex(graph_.n_vertices(), j)};
  }

 private:
  QswGraph graph_;
  double dt_;
  ComplexMatrix unitary_;
  std::vector<std::vector<double>> feed_forward_;
};

template <std::uniform_random_bit_generator Rng>
StepOutcome step(const ExtendedState& s, const QswGraph& g, double dt, Rng& rng) {
  return StepProtocol(g, dt).step(s, rng);
}

struct MeasurementOperator {
  enum class Kind { NoAncilla, AncillaFeedForward, AncillaUnreachable };
  Kind kind;
  Eigen::Index ancilla = -1;  // i of a_i
  Eigen::Index target = -1;   // j, for AncillaFeedForward
  ComplexMatrix matrix;
};

/// Measurement + feed-forward operators on the 2N space:
///   M_0 = projector on the vertices,
///   M^{a_i}_j = sqrt(P(j|i)) F^{a_i}_j M_{a_i} for every kappa_ij > 0,
/// where M_{a_i} projects on |a_i> and F^{a_i}_j swaps |a_i> and |j>.
/// The square root makes sum M^dagger M = I. When alpha = 1 no feed-forward
/// is defined and the bare projectors M_{a_i} are listed instead (kind
/// AncillaUnreachable); they never fire on states reached by the protocol.
struct MeasurementOps {
  Eigen::Index n_vertices = 0;
  std::vector<MeasurementOperator> operators;

  double completeness_defect() const {
    ComplexMatrix acc = -ComplexMatrix::Identity(2 * n_vertices, 2 * n_vertices);
    for (const auto& op : operators) acc += op.matrix.adjoint() * op.matrix;
    return max_abs(acc);
  }
};

/// Projector onto ancilla a_i.
inline ComplexMatrix ancilla_projector(Eigen::Index n, Eigen::Index i) {
  ComplexMatrix p = ComplexMatrix::Zero(2 * n, 2 * n);
  p(n + i, n + i) = 1.0;
  return p;
}

/// Permutation exchanging |a_i> and |j>, identity elsewhere.
inline ComplexMatrix feed_forward_permutation(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
  ComplexMatrix f = ComplexMatrix::Identity(2 * n, 2 * n);
  f(n + i, n + i) = 0.0;
  f(j, j) = 0.0;
  f(n + i, j) = 1.0;
  f(j, n + i) = 1.0;
  return f;
}

inline MeasurementOps build_measurement_ops(const QswGraph& g) {
  require_valid(g);
  const Eigen::Index n = g.n_vertices();
  MeasurementOps ops{n, {}};

  ComplexMatrix m0 = ComplexMatrix::Zero(2 * n, 2 * n);
  m0.topLeftCorner(n, n).setIdentity();
  ops.operators.push_back({MeasurementOperator::Kind::NoAncilla, -1, -1, std::move(m0)});

  for (Eigen::Index i = 0; i < n; ++i) {
    const ComplexMatrix proj = ancilla_projector(n, i);
    if (!(g.kappa().row(i).sum() > 0.0)) {
      ops.operators.push_back({MeasurementOperator::Kind::AncillaUnreachable, i, -1, proj});
      continue;
    }
    const std::vector<double> p = feed_forward_distribution(g, i);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double pj = p[static_cast<std::size_t>(j)];
      if (pj <= 0.0) continue;
      ops.operators.push_back({MeasurementOperator::Kind::AncillaFeedForward, i, j,
                               std::sqrt(pj) * feed_forward_permutation(n, i, j) * proj});
    }
  }
  return ops;
}

/// Every branch of one protocol step as an operator sum on the 2N space:
/// {M_0 U_coh U_init} and {M^{a_i}_j U_coh U_init}. Applied to an embedded
/// rho the vertex block equals build_step_channel(g, dt) applied to rho and
/// every ancilla row and column vanishes.
inline KrausChannel enumerate_step_channel(const QswGraph& g, double dt) {
  const ComplexMatrix pre = coherent_unitary(g, dt) * init_unitary(g);
  const MeasurementOps mops = build_measurement_ops(g);
  std::vector<KrausOperator> ops;
  ops.reserve(mops.operators.size());
  for (const auto& m : mops.operators) {
    KrausTag tag = KrausTag::other();
    if (m.kind == MeasurementOperator::Kind::NoAncilla) tag = KrausTag::coherent();
    if (m.kind == MeasurementOperator::Kind::AncillaFeedForward) tag = KrausTag::incoherent(m.ancilla, m.target);
    ops.push_back({m.matrix * pre, tag});
  }
  return KrausChannel(2 * g.n_vertices(), std::move(ops));
}

/// Vertex-vertex block of an extended density matrix.
inline ComplexMatrix vertex_block(const ComplexMatrix& extended) {
  const Eigen::Index n = extended.rows() / 2;
  return extended.topLeftCorner(n, n);
}

/// Largest magnitude in any ancilla row or column.
inline double max_ancilla_entry(const ComplexMatrix& extended) {
  const Eigen::Index n = extended.rows() / 2;
  return std::max(max_abs(extended.bottomRows(n)), max_abs(extended.rightCols(n)));
}

}  // namespace qsw
