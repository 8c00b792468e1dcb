#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <Eigen/LU>

#include "uam/box_ddp.hpp"

namespace uam {
namespace {

// x_{k+1} = x_k + dt u_k with quadratic state/control residuals.
struct SingleIntegrator {
  static constexpr int kNx = 3;
  static constexpr int kNu = 3;
  static constexpr int kNr = 6;
  static constexpr int kNrTerminal = 3;
  using State = Eigen::Vector3d;
  using Control = Eigen::Vector3d;

  int n = 40;
  double dt = 0.05;
  double q = 12.0;
  double r = 0.03;
  double qf = 120.0;
  double u_max = 1e9;

  int horizon() const { return n; }
  State step(const State& x, const Control& u, int) const { return x + dt * u; }
  void linearize(const State&, const Control&, int, Eigen::Matrix3d& a, Eigen::Matrix3d& b) const {
    a.setIdentity();
    b = dt * Eigen::Matrix3d::Identity();
  }
  void stage_residual(const State& x, const Control& u, int, Eigen::Matrix<double, 6, 1>& res,
                      Eigen::Matrix<double, 6, 3>* jx, Eigen::Matrix<double, 6, 3>* ju) const {
    res << std::sqrt(q) * x, std::sqrt(r) * u;
    if (jx) {
      jx->setZero();
      jx->topRows<3>() = std::sqrt(q) * Eigen::Matrix3d::Identity();
    }
    if (ju) {
      ju->setZero();
      ju->bottomRows<3>() = std::sqrt(r) * Eigen::Matrix3d::Identity();
    }
  }
  void terminal_residual(const State& x, Eigen::Vector3d& res, Eigen::Matrix3d* jx) const {
    res = std::sqrt(qf) * x;
    if (jx) *jx = std::sqrt(qf) * Eigen::Matrix3d::Identity();
  }
  Eigen::Vector3d difference(const State& a, const State& b) const { return a - b; }
  void control_bounds(int, Control& lb, Control& ub) const {
    lb.setConstant(-u_max);
    ub.setConstant(u_max);
  }
};

// Discrete Riccati recursion for the same problem.
std::vector<Eigen::Vector3d> lqr_controls(const SingleIntegrator& m, const Eigen::Vector3d& x0) {
  const Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d b = m.dt * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d q = m.q * Eigen::Matrix3d::Identity();
  const Eigen::Matrix3d r = m.r * Eigen::Matrix3d::Identity();
  std::vector<Eigen::Matrix3d> gains(m.n);
  Eigen::Matrix3d p = m.qf * Eigen::Matrix3d::Identity();
  for (int k = m.n - 1; k >= 0; --k) {
    const Eigen::Matrix3d s = r + b.transpose() * p * b;
    gains[k] = s.inverse() * b.transpose() * p * a;
    p = q + a.transpose() * p * a - a.transpose() * p * b * gains[k];
  }
  std::vector<Eigen::Vector3d> us(m.n);
  Eigen::Vector3d x = x0;
  for (int k = 0; k < m.n; ++k) {
    us[k] = -gains[k] * x;
    x = a * x + b * us[k];
  }
  return us;
}

TEST(BoxQpTest, UnconstrainedMatchesLinearSolve) {
  std::mt19937 rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::Matrix<double, 6, 6> l;
    for (int i = 0; i < 36; ++i) l(i) = n(rng);
    const Eigen::Matrix<double, 6, 6> h = l * l.transpose() + Eigen::Matrix<double, 6, 6>::Identity();
    Eigen::Matrix<double, 6, 1> q;
    for (int i = 0; i < 6; ++i) q(i) = n(rng);
    BoxQp<6> qp;
    const Eigen::Matrix<double, 6, 1> big = Eigen::Matrix<double, 6, 1>::Constant(1e9);
    qp.solve(h, q, -big, big, Eigen::Matrix<double, 6, 1>::Zero());
    ASSERT_TRUE(qp.ok);
    EXPECT_LT((qp.x - h.ldlt().solve(-q)).norm(), 1e-9);
  }
}

TEST(BoxQpTest, SatisfiesKktWithActiveBounds) {
  std::mt19937 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Matrix<double, 5, 5> l;
    for (int i = 0; i < 25; ++i) l(i) = n(rng);
    const Eigen::Matrix<double, 5, 5> h = l * l.transpose() + 0.1 * Eigen::Matrix<double, 5, 5>::Identity();
    Eigen::Matrix<double, 5, 1> q;
    for (int i = 0; i < 5; ++i) q(i) = 3.0 * n(rng);
    const Eigen::Matrix<double, 5, 1> lb = Eigen::Matrix<double, 5, 1>::Constant(-0.5);
    const Eigen::Matrix<double, 5, 1> ub = Eigen::Matrix<double, 5, 1>::Constant(0.7);
    BoxQp<5> qp;
    qp.solve(h, q, lb, ub, Eigen::Matrix<double, 5, 1>::Zero());
    ASSERT_TRUE(qp.ok);
    const Eigen::Matrix<double, 5, 1> g = h * qp.x + q;
    for (int i = 0; i < 5; ++i) {
      ASSERT_GE(qp.x(i), lb(i) - 1e-12);
      ASSERT_LE(qp.x(i), ub(i) + 1e-12);
      if (qp.x(i) > lb(i) + 1e-9 && qp.x(i) < ub(i) - 1e-9) {
        EXPECT_NEAR(g(i), 0.0, 1e-7);
      } else if (qp.x(i) <= lb(i) + 1e-9) {
        EXPECT_GE(g(i), -1e-7);
      } else {
        EXPECT_LE(g(i), 1e-7);
      }
    }
  }
}

TEST(BoxDdpTest, LinearQuadraticMatchesRiccati) {
  SingleIntegrator model;
  DdpOptions opt;
  opt.tolerance = 1e-12;
  BoxDdp<SingleIntegrator> solver(model, opt);
  const Eigen::Vector3d x0(0.4, -0.3, 1.2);
  const auto sol = solver.solve(x0, std::vector<Eigen::Vector3d>(model.n, Eigen::Vector3d::Zero()));
  const auto ref = lqr_controls(model, x0);
  double err = 0.0;
  for (int k = 0; k < model.n; ++k) err = std::max(err, (sol.us[k] - ref[k]).cwiseAbs().maxCoeff());
  EXPECT_LT(err, 1e-6);
  EXPECT_TRUE(sol.converged);
}

TEST(BoxDdpTest, RealTimeIterationTakesOneStep) {
  SingleIntegrator model;
  DdpOptions opt;
  opt.mode = SolverMode::kRealTimeIteration;
  BoxDdp<SingleIntegrator> solver(model, opt);
  const auto sol = solver.solve(Eigen::Vector3d(1, 0, 0), std::vector<Eigen::Vector3d>(model.n, Eigen::Vector3d::Zero()));
  EXPECT_EQ(sol.iterations, 1);
}

TEST(BoxDdpTest, BoundsAreRespectedAndBind) {
  SingleIntegrator model;
  model.u_max = 0.5;
  BoxDdp<SingleIntegrator> solver(model, DdpOptions{});
  const auto sol = solver.solve(Eigen::Vector3d(2, -2, 0.1), std::vector<Eigen::Vector3d>(model.n, Eigen::Vector3d::Zero()));
  for (const auto& u : sol.us) EXPECT_LE(u.cwiseAbs().maxCoeff(), 0.5 + 1e-12);
  EXPECT_NEAR(sol.us[0](0), -0.5, 1e-12);
  EXPECT_NEAR(sol.us[0](1), 0.5, 1e-12);
  EXPECT_TRUE(sol.converged);
}

TEST(BoxDdpTest, AdjointGradientMatchesFiniteDifferences) {
  SingleIntegrator model;
  BoxDdp<SingleIntegrator> solver(model, DdpOptions{});
  std::mt19937 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Eigen::Vector3d> us(model.n);
  for (auto& u : us) u = Eigen::Vector3d(n(rng), n(rng), n(rng));
  const Eigen::Vector3d x0(0.2, 0.1, -0.3);
  const auto g = solver.cost_gradient(x0, us);
  const double h = 1e-6;
  for (int k = 0; k < model.n; k += 7) {
    for (int i = 0; i < 3; ++i) {
      auto up = us, um = us;
      up[k](i) += h;
      um[k](i) -= h;
      const double fd = (solver.rollout(x0, up).cost - solver.rollout(x0, um).cost) / (2 * h);
      EXPECT_NEAR(g[k](i), fd, 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

// Same costs, but any nonzero control blows up the rollout.
struct BrittleIntegrator : SingleIntegrator {
  State step(const State& x, const Control& u, int) const {
    if (u.norm() > 0.0) throw std::runtime_error("blow-up");
    return x;
  }
};

TEST(BoxDdpTest, ExhaustedLineSearchThrowsWithLastIterate) {
  BrittleIntegrator model;
  BoxDdp<BrittleIntegrator> solver(model, DdpOptions{});
  const Eigen::Vector3d x0(1.0, 0.0, 0.0);
  try {
    solver.solve(x0, std::vector<Eigen::Vector3d>(model.n, Eigen::Vector3d::Zero()));
    FAIL() << "expected divergence";
  } catch (const BoxDdp<BrittleIntegrator>::Divergence& e) {
    ASSERT_EQ(e.last_iterate.us.size(), static_cast<std::size_t>(model.n));
    EXPECT_TRUE(e.last_iterate.us[0].isZero(0.0));
    EXPECT_TRUE(std::isfinite(e.last_iterate.cost));
  }
}

}  // namespace
}  // namespace uam
