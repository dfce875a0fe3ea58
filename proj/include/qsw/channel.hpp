#pragma once

// Exact one-step evolution of a discrete-time QSW as a Kraus channel,
// certification helpers (completeness, Choi matrix) and single-shot Kraus
// sampling.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qsw/graph.hpp"
#include "qsw/linalg.hpp"
#include "qsw/random.hpp"

namespace qsw {

struct KrausTag {
  enum class Kind { Coherent, Incoherent, Other };
  Kind kind = Kind::Other;
  Eigen::Index from = -1;  // incoherent jumps only
  Eigen::Index to = -1;

  static KrausTag coherent() { return {Kind::Coherent, -1, -1}; }
  static KrausTag incoherent(Eigen::Index from, Eigen::Index to) { return {Kind::Incoherent, from, to}; }
  static KrausTag other() { return {}; }
};

struct KrausOperator {
  ComplexMatrix matrix;
  KrausTag tag;
};

/// A CPTP map rho -> sum_j K_j rho K_j^dagger. Operators are stored with their
/// weights absorbed (sqrt(alpha) U, sqrt(kappa) |m><n|).
class KrausChannel {
 public:
  explicit KrausChannel(Eigen::Index dim, std::vector<KrausOperator> ops = {})
      : dim_(dim), ops_(std::move(ops)) {
    if (dim_ < 1) throw DimensionError("channel dimension must be >= 1");
    for (const auto& op : ops_) {
      if (op.matrix.rows() != dim_ || op.matrix.cols() != dim_) {
        throw DimensionError("Kraus operator shape does not match channel dimension");
      }
    }
  }

  Eigen::Index dim() const { return dim_; }
  const std::vector<KrausOperator>& operators() const { return ops_; }
  std::size_t size() const { return ops_.size(); }

 private:
  Eigen::Index dim_;
  std::vector<KrausOperator> ops_;
};

/// max-norm of sum_j K_j^dagger K_j - I.
inline double completeness_defect(const KrausChannel& ch) {
  ComplexMatrix acc = -ComplexMatrix::Identity(ch.dim(), ch.dim());
  for (const auto& op : ch.operators()) acc += op.matrix.adjoint() * op.matrix;
  return max_abs(acc);
}

/// One QSW time step: sqrt(alpha) U(dt) plus sqrt(kappa_nm) |m><n| for every
/// positive rate.
inline KrausChannel build_step_channel(const QswGraph& g, double dt) {
  require_valid(g);
  if (!(dt > 0.0)) throw QswError("time step must be positive");
  const Eigen::Index n = g.n_vertices();
  std::vector<KrausOperator> ops;
  if (g.alpha() > 0.0) {
    ops.push_back({std::sqrt(g.alpha()) * propagator(graph_hamiltonian(g), dt), KrausTag::coherent()});
  }
  for (Eigen::Index from = 0; from < n; ++from) {
    for (Eigen::Index to = 0; to < n; ++to) {
      const double k = g.kappa(from, to);
      if (k <= 0.0) continue;
      ComplexMatrix jump = ComplexMatrix::Zero(n, n);
      jump(to, from) = std::sqrt(k);
      ops.push_back({std::move(jump), KrausTag::incoherent(from, to)});
    }
  }
  return KrausChannel(n, std::move(ops));
}

inline ComplexMatrix apply(const KrausChannel& ch, const ComplexMatrix& rho) {
  if (rho.rows() != ch.dim() || rho.cols() != ch.dim()) {
    throw DimensionError("channel of dimension " + std::to_string(ch.dim()) +
                         " applied to state of dimension " + std::to_string(rho.rows()));
  }
  ComplexMatrix out = ComplexMatrix::Zero(ch.dim(), ch.dim());
  for (const auto& op : ch.operators()) out.noalias() += op.matrix * rho * op.matrix.adjoint();
  return out;
}

inline DensityMatrix apply(const KrausChannel& ch, const DensityMatrix& rho) {
  return DensityMatrix::trusted(apply(ch, rho.matrix()));
}

/// [rho0, B[rho0], ..., B^n[rho0]].
inline std::vector<DensityMatrix> iterate(const KrausChannel& ch, const DensityMatrix& rho0,
                                          std::size_t n_steps) {
  if (rho0.dim() != ch.dim()) throw DimensionError("iterate: state/channel dimension mismatch");
  std::vector<DensityMatrix> out;
  out.reserve(n_steps + 1);
  out.push_back(rho0);
  for (std::size_t k = 0; k < n_steps; ++k) out.push_back(apply(ch, out.back()));
  return out;
}

/// Choi matrix sum_j vec(K_j) vec(K_j)^dagger with column-stacked vec, so the
/// composite index is (output row) + dim * (input column).
inline ComplexMatrix choi_matrix(const KrausChannel& ch) {
  const Eigen::Index d = ch.dim();
  ComplexMatrix choi = ComplexMatrix::Zero(d * d, d * d);
  for (const auto& op : ch.operators()) {
    const Eigen::Map<const Eigen::VectorXcd> v(op.matrix.data(), d * d);
    choi.noalias() += v * v.adjoint();
  }
  return choi;
}

/// Traces out the output index of a Choi matrix built by choi_matrix. Equals
/// the identity iff the channel is trace preserving.
inline ComplexMatrix choi_partial_trace_output(const ComplexMatrix& choi, Eigen::Index dim) {
  if (choi.rows() != dim * dim || choi.cols() != dim * dim) {
    throw DimensionError("Choi matrix shape does not match dimension");
  }
  ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index jp = 0; jp < dim; ++jp) {
      Complex acc = 0.0;
      for (Eigen::Index i = 0; i < dim; ++i) acc += choi(i + dim * j, i + dim * jp);
      out(j, jp) = acc;
    }
  }
  return out;
}

inline constexpr double kZeroBranchProbability = 1e-15;

/// Tr[K_j^dagger K_j rho] for every operator.
inline std::vector<double> branch_probabilities(const KrausChannel& ch, const DensityMatrix& rho) {
  if (rho.dim() != ch.dim()) throw DimensionError("branch_probabilities: dimension mismatch");
  std::vector<double> p;
  p.reserve(ch.size());
  for (const auto& op : ch.operators()) {
    p.push_back((op.matrix.adjoint() * op.matrix * rho.matrix()).trace().real());
  }
  return p;
}

struct SampledKraus {
  std::size_t index = 0;
  double probability = 0.0;
  ComplexMatrix normalized_operator;  // K_j / sqrt(P_j)
};

/// Draws branch j with probability Tr[K_j^dagger K_j rho].
template <std::uniform_random_bit_generator Rng>
SampledKraus sample_kraus(const KrausChannel& ch, const DensityMatrix& rho, Rng& rng) {
  std::vector<double> p = branch_probabilities(ch, rho);
  bool any = false;
  for (double& x : p) {
    if (x < kZeroBranchProbability) x = 0.0;
    any = any || x > 0.0;
  }
  if (!any) throw QswError("sample_kraus: every branch has zero probability");
  const std::size_t j = sample_index(std::span<const double>(p), rng);
  return {j, p[j], ch.operators()[j].matrix / std::sqrt(p[j])};
}

}  // namespace qsw
