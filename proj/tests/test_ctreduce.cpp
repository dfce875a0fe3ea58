#include <gtest/gtest.h>

#include "qsw/ctreduce.hpp"
#include "test_util.hpp"

namespace qsw {
namespace {

using testing::Rng;
using testing::make_spec;
using testing::random_uniform_spec;
using testing::rhs_elementwise;

LindbladSpec two_vertex_spec(double g12, double g21, double omega, double coupling = 0.0) {
  ComplexMatrix h = ComplexMatrix::Zero(2, 2);
  h(0, 1) = h(1, 0) = coupling;
  RealMatrix r = RealMatrix::Zero(2, 2);
  r(0, 1) = g12;
  r(1, 0) = g21;
  return make_spec(h, r, omega);
}

TEST(UniformRate, Examples) {
  const auto r = uniform_rate(two_vertex_spec(2.0, 2.0, 0.5));
  ASSERT_TRUE(r.ok());
  EXPECT_EQ(r.gamma, 2.0);

  const auto bad = uniform_rate(two_vertex_spec(1.0, 2.0, 0.5));
  EXPECT_EQ(bad.status, UniformRate::Status::NonUniform);
  ASSERT_EQ(bad.deviating_rows.size(), 1u);
  EXPECT_EQ(bad.row_sums[0], 1.0);
  EXPECT_EQ(bad.row_sums[1], 2.0);
  EXPECT_NE(bad.message().find("sum_m gamma_nm = gamma"), std::string::npos);
}

TEST(UniformRate, ThreeVertexCycle) {
  RealMatrix r = RealMatrix::Zero(3, 3);
  for (int n = 0; n < 3; ++n) {
    r(n, (n + 1) % 3) = 0.75;
    r(n, (n + 2) % 3) = 0.75;
  }
  const auto res = uniform_rate(make_spec(ComplexMatrix::Zero(3, 3), r, 0.3));
  ASSERT_TRUE(res.ok());
  EXPECT_NEAR(res.gamma, 1.5, 1e-15);
}

TEST(UniformRate, NoDissipationIsDistinct) {
  const auto r = uniform_rate(two_vertex_spec(0.0, 0.0, 0.5));
  EXPECT_EQ(r.status, UniformRate::Status::NoDissipation);
  EXPECT_THROW(reduce_to_discrete(two_vertex_spec(0.0, 0.0, 0.5)), ReductionError);
}

TEST(ReduceToDiscrete, SymmetricTwoVertex) {
  const auto red = reduce_to_discrete(two_vertex_spec(2.0, 2.0, 0.5, 0.3));
  EXPECT_EQ(red.dt, 0.5);
  EXPECT_EQ(red.graph.alpha(), 0.5);
  EXPECT_EQ(red.graph.kappa(0, 1), 0.5);
  EXPECT_EQ(red.graph.kappa(1, 0), 0.5);
  EXPECT_EQ(red.graph.couplings()(0, 1), Complex(0.3, 0.0));
}

TEST(ReduceToDiscrete, CoherentLimit) {
  const auto red = reduce_to_discrete(two_vertex_spec(4.0, 4.0, 0.0));
  EXPECT_EQ(red.graph.alpha(), 1.0);
  EXPECT_EQ(red.graph.kappa().cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(red.dt, 0.25);
}

TEST(ReduceToDiscrete, ClassicalLimit) {
  RealMatrix r(2, 2);
  r << 1.0, 3.0, 2.5, 1.5;
  const auto red = reduce_to_discrete(make_spec(ComplexMatrix::Zero(2, 2), r, 1.0));
  EXPECT_EQ(red.graph.alpha(), 0.0);
  EXPECT_NEAR(red.graph.kappa(0, 1), 0.75, 1e-15);
  EXPECT_NEAR(red.graph.kappa(1, 0), 0.625, 1e-15);
}

TEST(ReduceToDiscrete, RowsOfPSumToOne) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    const double omega = testing::uniform(rng);
    const auto spec = random_uniform_spec(rng, 2 + trial % 5, testing::uniform(rng, 0.1, 10.0), omega);
    const auto red = reduce_to_discrete(spec);
    EXPECT_TRUE(validate(red.graph).ok());
    if (omega > 0.0) {
      const RealVector p_rows = red.graph.kappa().rowwise().sum() / omega;
      EXPECT_LE((p_rows - RealVector::Ones(spec.n_vertices())).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(ReduceToDiscrete, NonUniformRowsRejected) {
  try {
    reduce_to_discrete(two_vertex_spec(1.0, 2.0, 0.5));
    FAIL() << "expected ReductionError";
  } catch (const ReductionError& e) {
    EXPECT_NE(std::string(e.what()).find(kUniformRowCondition), std::string::npos);
  }
}

TEST(ReduceToDiscrete, InvalidSpecRejected) {
  EXPECT_THROW(reduce_to_discrete(two_vertex_spec(-1.0, -1.0, 0.5)), ReductionError);
  EXPECT_THROW(reduce_to_discrete(two_vertex_spec(1.0, 1.0, 1.5)), ReductionError);
}

TEST(Liouvillian, ZeroGenerator) {
  const auto l = liouvillian_superoperator(two_vertex_spec(1.0, 3.0, 0.0));
  EXPECT_EQ(max_abs(l), 0.0);
}

TEST(Liouvillian, MatchesElementwiseOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 4;
    LindbladSpec spec = random_uniform_spec(rng, n, 1.0, testing::uniform(rng));
    spec.rates *= 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) spec.rates(i, j) = testing::uniform(rng) < 0.3 ? 0.0 : testing::uniform(rng, 0.0, 3.0);
    const auto rho = testing::random_density(rng, n);
    const ComplexMatrix expected = rhs_elementwise(spec, rho.matrix());
    const ComplexMatrix via_super = unvectorize(liouvillian_superoperator(spec) * vectorize(rho.matrix()), n);
    EXPECT_LE(max_abs(via_super - expected), 1e-12);
    EXPECT_LE(max_abs(lindblad_rhs(spec, rho.matrix()) - expected), 1e-12);
    EXPECT_LE(std::abs(via_super.trace()), 1e-12);
  }
}

TEST(ExactPropagate, ZeroTime) {
  Rng rng(3);
  const auto rho = testing::random_density(rng, 2);
  EXPECT_EQ(max_abs(exact_lindblad_propagate(two_vertex_spec(1, 1, 0.5, 1), rho, 0.0).matrix() - rho.matrix()), 0.0);
}

TEST(ExactPropagate, TwoStateRelaxation) {
  const double gamma = 1.7;
  for (double omega : {1.0, 0.6}) {
    const auto spec = two_vertex_spec(gamma, gamma, omega);
    for (double t : {0.05, 0.3, 1.0, 4.0}) {
      const double p1 = exact_lindblad_propagate(spec, DensityMatrix::basis(2, 0), t).populations()(0);
      EXPECT_NEAR(p1, 0.5 + 0.5 * std::exp(-2.0 * gamma * omega * t), 1e-8);
    }
  }
}

TEST(ExactPropagate, OutputIsAState) {
  Rng rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto spec = random_uniform_spec(rng, 3, 2.0, testing::uniform(rng));
    const auto rho = testing::random_density(rng, 3);
    for (double t : {0.1, 1.0, 10.0}) {
      const auto out = exact_lindblad_propagate(spec, rho, t);
      const auto d = out.defects();
      EXPECT_LE(d.trace, 1e-10);
      EXPECT_LE(d.hermiticity, 1e-8);
      EXPECT_GE(d.min_eigenvalue, -1e-8);
    }
  }
}

TEST(FirstOrderStep, VanishingStep) {
  Rng rng(5);
  const auto spec = random_uniform_spec(rng, 3, 2.0, 0.4);
  const auto rho = testing::random_density(rng, 3);
  EXPECT_LE(max_abs(first_order_step(spec, rho, 1e-12) - rho.matrix()), 1e-10);
  EXPECT_THROW(first_order_step(spec, rho, 0.0), QswError);
}

TEST(FirstOrderStep, ErrorIsSecondOrderInDt) {
  Rng rng(6);
  const auto spec = random_uniform_spec(rng, 3, 1.5, 0.5);
  const auto rho = testing::random_density(rng, 3);
  std::vector<double> dts = {0.02, 0.01, 0.005};
  std::vector<double> errs;
  for (double dt : dts) {
    errs.push_back(trace_distance(first_order_step(spec, rho, dt), exact_lindblad_propagate(spec, rho, dt).matrix()));
  }
  EXPECT_NEAR(loglog_slope(dts, errs), 2.0, 0.1);
}

TEST(FirstOrderStep, IncoherentPartIsTheKappaChannel) {
  // H = 0, omega = 1, dt = 1/gamma: rho + dt Lambda rho collapses to sum kappa_nm |m><n| rho |n><m|.
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    LindbladSpec spec = random_uniform_spec(rng, 3, testing::uniform(rng, 0.5, 3.0), 1.0);
    spec.hamiltonian.setZero();
    const auto red = reduce_to_discrete(spec);
    const auto rho = testing::random_density(rng, 3);
    ComplexMatrix expected = ComplexMatrix::Zero(3, 3);
    for (Eigen::Index n = 0; n < 3; ++n)
      for (Eigen::Index m = 0; m < 3; ++m) expected(m, m) += red.graph.kappa(n, m) * rho.matrix()(n, n);
    EXPECT_LE(max_abs(first_order_step(spec, rho, red.dt) - expected), 1e-12);
  }
}

TEST(Reduction, SingleStepErrorBoundedByDtSquared) {
  Rng rng(8);
  const auto spec = random_uniform_spec(rng, 3, 1.5, 0.5);
  const auto rho = DensityMatrix::basis(3, 0);
  const auto red = reduce_to_discrete(spec);
  const double err = reduction_step_error(spec, rho);
  EXPECT_GT(err, 0.0);
  // C = err / dt^2 is finite and the discrete step stays a valid state
  EXPECT_LT(err / (red.dt * red.dt), 10.0);
  const auto table = reduction_error_table(spec, rho);
  ASSERT_EQ(table.rows.size(), 4u);
  EXPECT_NEAR(table.rows[3].dt, red.dt / 8.0, 1e-15);
}

}  // namespace
}  // namespace qsw
