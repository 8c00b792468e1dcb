#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace uam {

enum class SolverMode { kFullConverge, kRealTimeIteration };

struct DdpOptions {
  SolverMode mode = SolverMode::kFullConverge;
  int max_iterations = 100;
  // Projected-gradient tolerance, scaled by max(1, cost).
  double tolerance = 1e-6;
  double mu_init = 1e-6;
  double mu_min = 1e-9;
  double mu_max = 1e10;
  double armijo = 1e-4;
  int max_line_search = 12;
};

template <typename State, int Nu>
struct DdpTrajectory {
  using Control = Eigen::Matrix<double, Nu, 1>;
  std::vector<State> xs;
  std::vector<Control> us;
  double cost = std::numeric_limits<double>::infinity();
  double kkt = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

/// Thrown when no step along the regularized Newton direction decreases the
/// cost; carries the last accepted iterate.
template <typename State, int Nu>
class SolverDivergence : public std::runtime_error {
 public:
  SolverDivergence(const char* what, DdpTrajectory<State, Nu> last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
  DdpTrajectory<State, Nu> last_iterate;
};

/// Projected-Newton solver for min 1/2 x'Hx + q'x subject to lb <= x <= ub.
template <int N>
struct BoxQp {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  using DynMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, N, N>;
  using DynVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, N, 1>;

  Vec x = Vec::Zero();
  Eigen::Matrix<bool, N, 1> free;
  Eigen::LLT<DynMat> llt_free;
  bool ok = false;

  void solve(const Mat& h, const Vec& q, const Vec& lb, const Vec& ub, const Vec& x0) {
    x = x0.cwiseMax(lb).cwiseMin(ub);
    free.setConstant(true);
    ok = false;
    Eigen::Matrix<bool, N, 1> old_free;
    old_free.setConstant(false);
    bool factored = false;
    auto value = [&](const Vec& y) { return 0.5 * y.dot(h * y) + q.dot(y); };
    double f = value(x);
    for (int iter = 0; iter < 100; ++iter) {
      const Vec g = q + h * x;
      for (int i = 0; i < N; ++i) {
        const bool at_lb = x(i) <= lb(i) + 1e-13 && g(i) > 0.0;
        const bool at_ub = x(i) >= ub(i) - 1e-13 && g(i) < 0.0;
        free(i) = !(at_lb || at_ub);
      }
      const int nf = static_cast<int>(free.count());
      if (nf == 0) {
        ok = true;
        llt_free.compute(DynMat());
        return;
      }
      if (!factored || free != old_free) {
        DynMat hf(nf, nf);
        gather(h, hf);
        llt_free.compute(hf);
        if (llt_free.info() != Eigen::Success) return;
        old_free = free;
        factored = true;
      }
      DynVec gf(nf);
      int c = 0;
      for (int i = 0; i < N; ++i)
        if (free(i)) gf(c++) = g(i);
      if (gf.norm() < 1e-12) break;
      const DynVec step_f = -llt_free.solve(gf);
      Vec dir = Vec::Zero();
      c = 0;
      for (int i = 0; i < N; ++i)
        if (free(i)) dir(i) = step_f(c++);
      const double slope = dir.dot(g);
      if (slope >= -1e-15) break;
      double alpha = 1.0;
      Vec candidate;
      double f_new = f;
      bool accepted = false;
      for (int ls = 0; ls < 30; ++ls) {
        candidate = (x + alpha * dir).cwiseMax(lb).cwiseMin(ub);
        f_new = value(candidate);
        if (f_new - f <= 0.1 * alpha * slope) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) break;
      const double decrease = f - f_new;
      x = candidate;
      f = f_new;
      if (decrease < 1e-14 * (1.0 + std::abs(f))) break;
    }
    // Refresh the free set and its factor at the returned point.
    const Vec g = q + h * x;
    for (int i = 0; i < N; ++i) {
      const bool at_lb = x(i) <= lb(i) + 1e-13 && g(i) > 0.0;
      const bool at_ub = x(i) >= ub(i) - 1e-13 && g(i) < 0.0;
      free(i) = !(at_lb || at_ub);
    }
    const int nf = static_cast<int>(free.count());
    DynMat hf(nf, nf);
    gather(h, hf);
    llt_free.compute(hf);
    ok = nf == 0 || llt_free.info() == Eigen::Success;
  }

 private:
  void gather(const Mat& h, DynMat& hf) const {
    int r = 0;
    for (int i = 0; i < N; ++i) {
      if (!free(i)) continue;
      int c = 0;
      for (int j = 0; j < N; ++j) {
        if (!free(j)) continue;
        hf(r, c++) = h(i, j);
      }
      ++r;
    }
  }
};

/// Box-constrained Gauss-Newton DDP over a least-squares optimal control
/// problem. Model requirements:
///   State; kNx (tangent dim), kNu, kNr (stage residual), kNrTerminal;
///   int horizon() const;
///   State step(const State&, const Control&, int k) const;
///   void linearize(const State&, const Control&, int k, MatA&, MatB&) const;
///   void stage_residual(const State&, const Control&, int k, Res&, ResX*, ResU*) const;
///   void terminal_residual(const State&, ResT&, ResTX*) const;
///   Tangent difference(const State& a, const State& b) const;   // a - b
///   void control_bounds(int k, Control& lb, Control& ub) const;
template <typename Model>
class BoxDdp {
 public:
  static constexpr int kNx = Model::kNx;
  static constexpr int kNu = Model::kNu;
  static constexpr int kNr = Model::kNr;
  static constexpr int kNrT = Model::kNrTerminal;
  using State = typename Model::State;
  using Tangent = Eigen::Matrix<double, kNx, 1>;
  using Control = Eigen::Matrix<double, kNu, 1>;
  using MatA = Eigen::Matrix<double, kNx, kNx>;
  using MatB = Eigen::Matrix<double, kNx, kNu>;
  using Res = Eigen::Matrix<double, kNr, 1>;
  using ResX = Eigen::Matrix<double, kNr, kNx>;
  using ResU = Eigen::Matrix<double, kNr, kNu>;
  using ResT = Eigen::Matrix<double, kNrT, 1>;
  using ResTX = Eigen::Matrix<double, kNrT, kNx>;
  using Gain = Eigen::Matrix<double, kNu, kNx>;
  using Trajectory = DdpTrajectory<State, kNu>;
  using Divergence = SolverDivergence<State, kNu>;

  BoxDdp(const Model& model, DdpOptions options) : model_(model), options_(options) {}

  const DdpOptions& options() const { return options_; }

  Trajectory rollout(const State& x0, std::vector<Control> us) const {
    Trajectory t;
    const int n = model_.horizon();
    if (static_cast<int>(us.size()) != n) throw std::invalid_argument("BoxDdp: control count != horizon");
    t.us = std::move(us);
    t.xs.resize(n + 1);
    t.xs[0] = x0;
    Control lb, ub;
    for (int k = 0; k < n; ++k) {
      model_.control_bounds(k, lb, ub);
      t.us[k] = t.us[k].cwiseMax(lb).cwiseMin(ub);
      t.xs[k + 1] = model_.step(t.xs[k], t.us[k], k);
    }
    t.cost = cost(t);
    return t;
  }

  double cost(const Trajectory& t) const {
    double c = 0.0;
    Res r;
    for (int k = 0; k < model_.horizon(); ++k) {
      model_.stage_residual(t.xs[k], t.us[k], k, r, nullptr, nullptr);
      c += r.squaredNorm();
    }
    ResT rt;
    model_.terminal_residual(t.xs.back(), rt, nullptr);
    return c + rt.squaredNorm();
  }

  /// Gradient of the rollout cost with respect to the controls (adjoint
  /// recursion on the linearized dynamics).
  std::vector<Control> cost_gradient(const State& x0, const std::vector<Control>& us) {
    Trajectory t = rollout(x0, us);
    linearize_all(t);
    return adjoint_gradient();
  }

  Trajectory solve(const State& x0, const std::vector<Control>& initial_us) {
    Trajectory t = rollout(x0, initial_us);
    const int n = model_.horizon();
    if (!std::isfinite(t.cost)) throw Divergence("BoxDdp: non-finite initial cost", t);
    double mu = options_.mu_init;
    const bool rti = options_.mode == SolverMode::kRealTimeIteration;
    k_.resize(n);
    big_k_.resize(n);
    for (auto& v : k_) v.setZero();

    for (int iter = 0; iter < options_.max_iterations; ++iter) {
      linearize_all(t);
      t.kkt = projected_gradient_norm(t, adjoint_gradient());
      const double tol = options_.tolerance * std::max(1.0, t.cost);
      if (t.kkt <= tol) {
        t.converged = true;
        if (!rti) return t;
      }

      bool accepted = false;
      while (!accepted) {
        if (!backward_pass(t, mu)) {
          mu = std::max(mu * 10.0, 1e-6);
          if (mu > options_.mu_max) throw Divergence("BoxDdp: regularization limit reached", t);
          continue;
        }
        if (expected_[0] > -1e-15 * (1.0 + t.cost)) {
          // No predicted decrease: the iterate is stationary for the model.
          t.converged = true;
          ++t.iterations;
          return t;
        }
        double alpha = 1.0;
        for (int ls = 0; ls < options_.max_line_search; ++ls) {
          Trajectory cand = forward_pass(t, alpha);
          const double predicted = alpha * expected_[0] + alpha * alpha * expected_[1];
          if (std::isfinite(cand.cost) && cand.cost <= t.cost &&
              t.cost - cand.cost >= -options_.armijo * predicted) {
            cand.iterations = t.iterations + 1;
            t = std::move(cand);
            accepted = true;
            break;
          }
          alpha *= 0.5;
        }
        if (!accepted) {
          mu = std::max(mu * 10.0, 1e-6);
          if (mu > options_.mu_max) throw Divergence("BoxDdp: line search exhausted", t);
        }
      }
      mu = std::max(mu / 10.0, options_.mu_min);
      t.converged = false;
      if (rti) return t;
    }
    linearize_all(t);
    t.kkt = projected_gradient_norm(t, adjoint_gradient());
    t.converged = t.kkt <= options_.tolerance * std::max(1.0, t.cost);
    return t;
  }

 private:
  struct StageLin {
    MatA a;
    MatB b;
    Res r;
    ResX jx;
    ResU ju;
  };

  void linearize_all(const Trajectory& t) {
    const int n = model_.horizon();
    lin_.resize(n);
    for (int k = 0; k < n; ++k) {
      StageLin& s = lin_[k];
      model_.linearize(t.xs[k], t.us[k], k, s.a, s.b);
      model_.stage_residual(t.xs[k], t.us[k], k, s.r, &s.jx, &s.ju);
    }
    model_.terminal_residual(t.xs.back(), rt_, &jt_);
    lb_.resize(n);
    ub_.resize(n);
    for (int k = 0; k < n; ++k) model_.control_bounds(k, lb_[k], ub_[k]);
  }

  std::vector<Control> adjoint_gradient() const {
    const int n = model_.horizon();
    std::vector<Control> g(n);
    Tangent lambda = 2.0 * jt_.transpose() * rt_;
    for (int k = n - 1; k >= 0; --k) {
      const StageLin& s = lin_[k];
      g[k] = 2.0 * s.ju.transpose() * s.r + s.b.transpose() * lambda;
      lambda = 2.0 * s.jx.transpose() * s.r + s.a.transpose() * lambda;
    }
    return g;
  }

  double projected_gradient_norm(const Trajectory& t, const std::vector<Control>& g) const {
    double m = 0.0;
    for (int k = 0; k < model_.horizon(); ++k) {
      for (int i = 0; i < kNu; ++i) {
        const double gi = g[k](i);
        const double u = t.us[k](i);
        const bool pinned_lb = u <= lb_[k](i) + 1e-12 && gi > 0.0;
        const bool pinned_ub = u >= ub_[k](i) - 1e-12 && gi < 0.0;
        if (!pinned_lb && !pinned_ub) m = std::max(m, std::abs(gi));
      }
    }
    return m;
  }

  bool backward_pass(const Trajectory& t, double mu) {
    const int n = model_.horizon();
    Tangent vx = 2.0 * jt_.transpose() * rt_;
    MatA vxx = 2.0 * jt_.transpose() * jt_;
    expected_[0] = expected_[1] = 0.0;
    BoxQp<kNu> qp;
    for (int k = n - 1; k >= 0; --k) {
      const StageLin& s = lin_[k];
      const Eigen::Matrix<double, kNx, kNx> vxx_a = vxx * s.a;
      const Eigen::Matrix<double, kNx, kNu> vxx_b = vxx * s.b;
      const Tangent qx = 2.0 * s.jx.transpose() * s.r + s.a.transpose() * vx;
      const Control qu = 2.0 * s.ju.transpose() * s.r + s.b.transpose() * vx;
      MatA qxx = 2.0 * s.jx.transpose() * s.jx + s.a.transpose() * vxx_a;
      Eigen::Matrix<double, kNu, kNu> quu = 2.0 * s.ju.transpose() * s.ju + s.b.transpose() * vxx_b;
      const Gain qux = 2.0 * s.ju.transpose() * s.jx + s.b.transpose() * vxx_a;
      quu.diagonal().array() += mu;

      qp.solve(quu, qu, lb_[k] - t.us[k], ub_[k] - t.us[k], k_[k]);
      if (!qp.ok) return false;
      k_[k] = qp.x;
      Gain& kk = big_k_[k];
      kk.setZero();
      const int nf = static_cast<int>(qp.free.count());
      if (nf > 0) {
        Eigen::Matrix<double, Eigen::Dynamic, kNx, 0, kNu, kNx> qux_f(nf, kNx);
        int c = 0;
        for (int i = 0; i < kNu; ++i)
          if (qp.free(i)) qux_f.row(c++) = qux.row(i);
        const Eigen::Matrix<double, Eigen::Dynamic, kNx, 0, kNu, kNx> kf = -qp.llt_free.solve(qux_f);
        c = 0;
        for (int i = 0; i < kNu; ++i)
          if (qp.free(i)) kk.row(i) = kf.row(c++);
      }
      const Control& kv = k_[k];
      expected_[0] += kv.dot(qu);
      expected_[1] += 0.5 * kv.dot(quu * kv);
      vx = qx + kk.transpose() * (quu * kv) + kk.transpose() * qu + qux.transpose() * kv;
      vxx = qxx + kk.transpose() * quu * kk + kk.transpose() * qux + qux.transpose() * kk;
      vxx = 0.5 * (vxx + vxx.transpose()).eval();
    }
    return true;
  }

  Trajectory forward_pass(const Trajectory& t, double alpha) const {
    const int n = model_.horizon();
    Trajectory out;
    out.xs.resize(n + 1);
    out.us.resize(n);
    out.xs[0] = t.xs[0];
    try {
      for (int k = 0; k < n; ++k) {
        const Tangent dx = model_.difference(out.xs[k], t.xs[k]);
        out.us[k] = (t.us[k] + alpha * k_[k] + big_k_[k] * dx).cwiseMax(lb_[k]).cwiseMin(ub_[k]);
        out.xs[k + 1] = model_.step(out.xs[k], out.us[k], k);
      }
      out.cost = cost(out);
    } catch (const std::runtime_error&) {
      // A trial step that blows up the rollout is simply rejected.
      out.cost = std::numeric_limits<double>::infinity();
    }
    return out;
  }

  const Model& model_;
  DdpOptions options_;
  std::vector<StageLin> lin_;
  ResT rt_;
  ResTX jt_;
  std::vector<Control> lb_, ub_;
  std::vector<Control> k_;
  std::vector<Gain> big_k_;
  double expected_[2] = {0.0, 0.0};
};

}  // namespace uam
