#pragma once

// Random instance generators and brute-force oracles shared by the unit and
// acceptance suites. Nothing here calls into the code paths it is used to check.

#include <cmath>
#include <complex>
#include <random>

#include "qsw/qsw.hpp"

namespace qsw::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline ComplexMatrix random_complex(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> nd;
  ComplexMatrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = Complex(nd(rng), nd(rng));
  return m;
}

inline ComplexMatrix random_hermitian(Rng& rng, Eigen::Index n) {
  const ComplexMatrix a = random_complex(rng, n, n);
  return 0.5 * (a + a.adjoint());
}

/// Random full-rank mixed state (Ginibre).
inline DensityMatrix random_density(Rng& rng, Eigen::Index n) {
  const ComplexMatrix a = random_complex(rng, n, n);
  ComplexMatrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix::from_matrix(0.5 * (rho + rho.adjoint()));
}

inline StateVector random_pure(Rng& rng, Eigen::Index n) {
  StateVector psi = random_complex(rng, n, 1);
  return psi / psi.norm();
}

/// Random walk satisfying every graph invariant: random sparse couplings and
/// random sparse kappa rows rescaled to 1 - alpha.
inline QswGraph random_graph(Rng& rng, Eigen::Index n, bool complex_couplings = false,
                             std::optional<double> alpha = std::nullopt) {
  const double a = alpha ? *alpha : uniform(rng);
  GraphBuilder b(n, a);
  b.allow_complex_couplings(complex_couplings);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      if (uniform(rng) < 0.4) continue;
      const double im = complex_couplings ? uniform(rng, -1.0, 1.0) : 0.0;
      b.coupling(i, j, Complex(uniform(rng, -2.0, 2.0), im));
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> w(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& x : w) {
      x = uniform(rng) < 0.3 ? 0.0 : uniform(rng);
      sum += x;
    }
    if (sum == 0.0) {
      w[static_cast<std::size_t>((i + 1) % n)] = 1.0;
      sum = 1.0;
    }
    for (Eigen::Index j = 0; j < n; ++j) b.rate(i, j, (1.0 - a) * w[static_cast<std::size_t>(j)] / sum);
  }
  return b.build();
}

/// The two-vertex graph with a real coupling and rates kappa_11, kappa_12, kappa_21, kappa_22.
inline QswGraph two_vertex(double alpha, double g_coh, double k11, double k12, double k21, double k22) {
  return GraphBuilder(2, alpha)
      .coupling(0, 1, g_coh)
      .rate(0, 0, k11)
      .rate(0, 1, k12)
      .rate(1, 0, k21)
      .rate(1, 1, k22)
      .build();
}

/// exp(-i H t) by direct Taylor summation with scaling and squaring; an
/// independent check of the eigendecomposition route.
inline ComplexMatrix series_propagator(const ComplexMatrix& h, double t) {
  const ComplexMatrix a = Complex(0.0, -t) * h;
  int squarings = 0;
  double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  while (norm > 0.5) {
    norm /= 2.0;
    ++squarings;
  }
  const ComplexMatrix scaled = a / std::pow(2.0, squarings);
  ComplexMatrix term = ComplexMatrix::Identity(h.rows(), h.cols());
  ComplexMatrix sum = term;
  for (int k = 1; k < 40; ++k) {
    term = term * scaled / static_cast<double>(k);
    sum += term;
  }
  for (int s = 0; s < squarings; ++s) sum = sum * sum;
  return sum;
}

/// Discrete QSW step written straight from its definition:
/// alpha U rho U^dagger + sum_nm kappa_nm rho_nn |m><m|.
inline ComplexMatrix qsw_step_oracle(const QswGraph& g, const ComplexMatrix& u, const ComplexMatrix& rho) {
  ComplexMatrix out = g.alpha() * u * rho * u.adjoint();
  for (Eigen::Index n = 0; n < g.n_vertices(); ++n)
    for (Eigen::Index m = 0; m < g.n_vertices(); ++m) out(m, m) += g.kappa(n, m) * rho(n, n);
  return out;
}

inline LindbladSpec make_spec(ComplexMatrix h, RealMatrix rates, double omega) {
  LindbladSpec s;
  s.hamiltonian = std::move(h);
  s.rates = std::move(rates);
  s.omega = omega;
  return s;
}

/// Rates with every row summing to row_sum, random otherwise.
inline LindbladSpec random_uniform_spec(Rng& rng, Eigen::Index n, double row_sum, double omega) {
  RealMatrix r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) r(i, j) = uniform(rng);
    r.row(i) *= row_sum / r.row(i).sum();
  }
  return make_spec(random_hermitian(rng, n), r, omega);
}

/// Master-equation right-hand side summed index by index.
inline ComplexMatrix rhs_elementwise(const LindbladSpec& s, const ComplexMatrix& rho) {
  const Eigen::Index n = s.n_vertices();
  ComplexMatrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Complex comm = 0.0;
      for (Eigen::Index k = 0; k < n; ++k) comm += s.hamiltonian(i, k) * rho(k, j) - rho(i, k) * s.hamiltonian(k, j);
      Complex diss = 0.0;
      for (Eigen::Index a = 0; a < n; ++a) {      // jump source
        for (Eigen::Index b = 0; b < n; ++b) {    // jump target
          const double g = s.rates(a, b);
          const double gain = (i == b && j == b) ? 1.0 : 0.0;
          diss += g * (gain * rho(a, a) - 0.5 * ((i == a ? rho(a, j) : Complex(0.0)) + (j == a ? rho(i, a) : Complex(0.0))));
        }
      }
      out(i, j) = (1.0 - s.omega) * Complex(0.0, -1.0) * comm + s.omega * diss;
    }
  }
  return out;
}

}  // namespace qsw::testing
