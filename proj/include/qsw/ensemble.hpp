#pragma once

// Monte Carlo ensembles of protocol trajectories and their convergence to the
// exact channel iterate.
//
// Trajectory t of an ensemble draws every random number from
// trajectory_stream(master_seed, t), and trajectories are summed in fixed
// blocks reduced in block order, so results are bit-identical for any
// number of worker threads.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "qsw/channel.hpp"
#include "qsw/graph.hpp"
#include "qsw/linalg.hpp"
#include "qsw/protocol.hpp"
#include "qsw/random.hpp"

namespace qsw {

enum class RecordMode { Populations, FullDensityMatrix };

struct EnsembleConfig {
  std::size_t n_trajectories = 1;
  std::size_t n_steps = 0;
  double dt = 1.0;
  std::uint64_t master_seed = 0;
  RecordMode record_mode = RecordMode::FullDensityMatrix;

  void check() const {
    if (n_trajectories < 1) throw QswError("ensemble needs at least one trajectory");
    if (!(dt > 0.0)) throw QswError("time step must be positive");
  }
};

struct EnsembleResult {
  std::vector<DensityMatrix> per_step_average;  // empty in Populations mode
  std::vector<RealVector> per_step_populations;
  std::size_t trajectories_used = 0;
  std::uint64_t seed = 0;
};

namespace detail {

template <std::uniform_random_bit_generator Rng>
std::vector<ExtendedState> run_steps(const StepProtocol& protocol, ExtendedState s, std::size_t n_steps,
                                     Rng& rng) {
  std::vector<ExtendedState> out;
  out.reserve(n_steps + 1);
  out.push_back(std::move(s));
  for (std::size_t k = 0; k < n_steps; ++k) out.push_back(protocol.step(out.back(), rng).post_state);
  return out;
}

inline constexpr std::size_t kBlockSize = 256;

}  // namespace detail

/// One trajectory from a pure initial vertex state.
inline std::vector<ExtendedState> run_trajectory(const QswGraph& g, const StateVector& initial,
                                                 const EnsembleConfig& cfg, std::uint64_t traj_index) {
  cfg.check();
  if (std::abs(initial.squaredNorm() - 1.0) > kStructuralTol) throw InvalidStateError("initial state is not normalized");
  if (initial.size() != g.n_vertices()) throw DimensionError("initial state/graph size mismatch");
  const StepProtocol protocol(g, cfg.dt);
  RandomStream rng = trajectory_stream(cfg.master_seed, traj_index);
  return detail::run_steps(protocol, embed(initial), cfg.n_steps, rng);
}

/// Averages M trajectories. A mixed rho0 is unravelled into its eigen-ensemble:
/// each trajectory first draws an eigenvector with probability equal to its
/// eigenvalue from its own stream.
inline EnsembleResult run_ensemble(const QswGraph& g, const DensityMatrix& rho0, const EnsembleConfig& cfg,
                                   unsigned threads = 1) {
  cfg.check();
  const Eigen::Index n = g.n_vertices();
  if (rho0.dim() != n) throw DimensionError("initial state/graph size mismatch");
  const StepProtocol protocol(g, cfg.dt);

  const HermitianEigen eig = eig_hermitian(rho0.matrix());
  std::vector<double> weights(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k) weights[static_cast<std::size_t>(k)] = std::max(0.0, eig.values(k));
  const bool pure = eig.values(n - 1) >= 1.0 - kNormalizationTol;
  const bool full = cfg.record_mode == RecordMode::FullDensityMatrix;
  const std::size_t steps = cfg.n_steps + 1;

  // Per-block sums; block b covers trajectories [b * kBlockSize, (b + 1) * kBlockSize).
  struct Accumulator {
    std::vector<ComplexMatrix> rho;
    std::vector<RealVector> pops;
  };
  const std::size_t n_blocks = (cfg.n_trajectories + detail::kBlockSize - 1) / detail::kBlockSize;
  std::vector<Accumulator> blocks(n_blocks);

  auto run_block = [&](std::size_t b) {
    Accumulator acc;
    acc.pops.assign(steps, RealVector::Zero(n));
    if (full) acc.rho.assign(steps, ComplexMatrix::Zero(n, n));
    const std::size_t begin = b * detail::kBlockSize;
    const std::size_t end = std::min(cfg.n_trajectories, begin + detail::kBlockSize);
    for (std::size_t t = begin; t < end; ++t) {
      RandomStream rng = trajectory_stream(cfg.master_seed, t);
      Eigen::Index pick = n - 1;
      if (!pure) pick = static_cast<Eigen::Index>(sample_index(std::span<const double>(weights), rng));
      ExtendedState s = embed(StateVector(eig.vectors.col(pick)));
      for (std::size_t k = 0; k < steps; ++k) {
        if (k > 0) s = protocol.step(s, rng).post_state;
        const auto v = s.vertex_block();
        acc.pops[k] += v.cwiseAbs2();
        if (full) acc.rho[k].noalias() += v * v.adjoint();
      }
    }
    blocks[b] = std::move(acc);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n_blocks)));
  if (workers == 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < n_blocks; b = next++) run_block(b);
      });
    }
  }

  EnsembleResult result;
  result.trajectories_used = cfg.n_trajectories;
  result.seed = cfg.master_seed;
  const double inv_m = 1.0 / static_cast<double>(cfg.n_trajectories);
  for (std::size_t k = 0; k < steps; ++k) {
    RealVector pops = RealVector::Zero(n);
    ComplexMatrix rho = ComplexMatrix::Zero(n, n);
    for (const auto& blk : blocks) {
      pops += blk.pops[k];
      if (full) rho += blk.rho[k];
    }
    result.per_step_populations.push_back(pops * inv_m);
    if (full) result.per_step_average.push_back(DensityMatrix::trusted(rho * inv_m));
  }
  return result;
}

struct ConvergenceReport {
  std::vector<double> per_step;  // trace distance to the exact iterate
  double max_trace_distance = 0.0;
  double mean_trace_distance = 0.0;
  /// c in mean distance ~ c / sqrt(M).
  double inv_sqrt_m_coefficient = 0.0;
  std::size_t trajectories = 0;
  std::uint64_t seed = 0;
};

inline ConvergenceReport convergence_report(const EnsembleResult& result, const std::vector<DensityMatrix>& exact) {
  if (result.per_step_average.empty()) {
    throw QswError("convergence_report needs an ensemble recorded with full density matrices");
  }
  if (result.per_step_average.size() != exact.size()) throw DimensionError("convergence_report: step count mismatch");
  ConvergenceReport r;
  r.trajectories = result.trajectories_used;
  r.seed = result.seed;
  double sum = 0.0;
  for (std::size_t k = 0; k < exact.size(); ++k) {
    const double d = trace_distance(result.per_step_average[k], exact[k]);
    r.per_step.push_back(d);
    r.max_trace_distance = std::max(r.max_trace_distance, d);
    sum += d;
  }
  r.mean_trace_distance = sum / static_cast<double>(exact.size());
  r.inv_sqrt_m_coefficient = r.mean_trace_distance * std::sqrt(static_cast<double>(r.trajectories));
  return r;
}

}  // namespace qsw
