#include "uam/ee_mpc.hpp"

#include <chrono>
#include <cmath>

#include <unsupported/Eigen/AutoDiff>

namespace uam {
namespace {

using Ad10 = Eigen::AutoDiffScalar<Eigen::Matrix<double, 10, 1>>;
using Ad15 = Eigen::AutoDiffScalar<Eigen::Matrix<double, 15, 1>>;

template <typename S>
S hinge(const S& s) {
  if (s > S(0)) return s;
  return S(0);
}

template <typename S>
S segment_distance(const Vector3<S>& q, const Vector3<S>& a, const Vector3<S>& b) {
  using std::sqrt;
  const Vector3<S> ab = b - a;
  const S len_sq = ab.squaredNorm();
  S t = len_sq > S(1e-12) ? S((q - a).dot(ab) / len_sq) : S(0);
  if (t < S(0)) t = S(0);
  if (t > S(1)) t = S(1);
  const Vector3<S> d = q - (a + ab * t);
  return sqrt(d.squaredNorm());
}

Vec3 safe_log(const Mat3& r) {
  try {
    return log_so3(r);
  } catch (const LogSingularityError&) {
    return vee_unchecked(r);
  }
}

template <typename Ad, typename Derived>
void seed(Eigen::MatrixBase<Derived>& v, const Eigen::Ref<const Eigen::VectorXd>& value, int offset) {
  for (int i = 0; i < value.size(); ++i) {
    v(i) = Ad(value(i));
    v(i).derivatives().setZero();
    v(i).derivatives()(offset + i) = 1.0;
  }
}

void check_nonneg(const Eigen::Ref<const Eigen::VectorXd>& v, const char* what) {
  if (!v.allFinite() || (v.array() < 0.0).any()) {
    throw std::invalid_argument(std::string("MpcWeights: negative or non-finite ") + what);
  }
}

}  // namespace

void MpcWeights::validate() const {
  check_nonneg(q_p, "q_p");
  check_nonneg(q_r, "q_r");
  check_nonneg(q_v, "q_v");
  check_nonneg(q_theta, "q_theta");
  check_nonneg(q_u_wrench, "q_u_wrench");
  check_nonneg(q_u_joint, "q_u_joint");
  if (!(terminal_scale >= 0.0)) throw std::invalid_argument("MpcWeights: negative terminal scale");
  if (q_p.sum() + q_r.sum() + q_v.sum() + q_theta.sum() <= 0.0) {
    throw std::invalid_argument("MpcWeights: at least one state weight must be positive");
  }
}

void MpcConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("MpcConfig: steps must be positive");
  if (!(dt > 0.0 && dt <= 0.1)) throw std::invalid_argument("MpcConfig: dt must lie in (0, 0.1]");
  if (std::abs(steps * dt - horizon) > 1e-9) {
    throw std::invalid_argument("MpcConfig: steps * dt must equal the horizon");
  }
  if (!(control_rate > 0.0)) throw std::invalid_argument("MpcConfig: control rate must be positive");
  if (!(wrench_lb.array() < wrench_ub.array()).all()) {
    throw std::invalid_argument("MpcConfig: wrench lower bound must be below upper bound");
  }
  if (!(max_linear_speed > 0.0 && max_angular_speed > 0.0)) {
    throw std::invalid_argument("MpcConfig: speed limits must be positive");
  }
  if (static_cast<int>(collision.walls.size()) > CollisionConfig::kMaxWalls) {
    throw std::invalid_argument("MpcConfig: too many wall planes");
  }
  for (const auto& w : collision.walls) {
    if (std::abs(w.normal.norm() - 1.0) > 1e-9) throw std::invalid_argument("MpcConfig: wall normal must be unit");
  }
  if (!(collision.margin >= 0.0 && collision.weight >= 0.0 && collision.base_radius >= 0.0 &&
        collision.link_radius >= 0.0)) {
    throw std::invalid_argument("MpcConfig: collision parameters must be nonnegative");
  }
  if (!theta_ref.allFinite()) throw std::invalid_argument("MpcConfig: theta_ref must be finite");
  if (max_iterations < 1 || !(tolerance > 0.0)) {
    throw std::invalid_argument("MpcConfig: invalid solver settings");
  }
}

double stage_cost(const MpcState& x, const MpcControl& u, const EeTarget& target,
                  const Vec4& theta_ref, const Vec4& theta_hat, const MpcWeights& weights,
                  const UamParams& params) {
  const Transform ee = x.ee_pose(params.arm);
  const Vec3 e_p = ee.translation - target.p_ref;
  const Vec3 e_r = rotation_error(ee.rotation, target.R_ref);
  const Vec6 e_v = x.base.v - target.v_ref;
  const Vec4 e_theta = x.theta - theta_ref;
  const Vec6 e_w = u.tau.vector() - hover_wrench(x.base.R, params.uav).vector();
  const Vec4 e_j = u.theta_cmd - theta_hat;
  return e_p.dot(weights.q_p.cwiseProduct(e_p)) + e_r.dot(weights.q_r.cwiseProduct(e_r)) +
         e_v.dot(weights.q_v.cwiseProduct(e_v)) + e_theta.dot(weights.q_theta.cwiseProduct(e_theta)) +
         e_w.dot(weights.q_u_wrench.cwiseProduct(e_w)) + e_j.dot(weights.q_u_joint.cwiseProduct(e_j));
}

MpcProblem::MpcProblem(const MpcState& x0, const EeTarget& target, const MpcConfig& config,
                       const MpcWeights& weights, const UamParams& params)
    : MpcProblem(x0, std::vector<EeTarget>{target}, config, weights, params) {}

MpcProblem::MpcProblem(const MpcState& x0, std::vector<EeTarget> targets, const MpcConfig& config,
                       const MpcWeights& weights, const UamParams& params)
    : x0_(x0), targets_(std::move(targets)), config_(config), weights_(weights), params_(params),
      theta_hat_(x0.theta) {
  sq_p_ = weights.q_p.cwiseSqrt();
  sq_r_ = weights.q_r.cwiseSqrt();
  sq_v_ = weights.q_v.cwiseSqrt();
  sq_w_ = weights.q_u_wrench.cwiseSqrt();
  sq_theta_ = weights.q_theta.cwiseSqrt();
  sq_j_ = weights.q_u_joint.cwiseSqrt();
  sq_pen_ = std::sqrt(config.collision.weight);
  sq_term_ = std::sqrt(weights.terminal_scale);
  // RK4 applied to the linear servo lag gives theta' = cmd + c (theta - cmd).
  for (int i = 0; i < 4; ++i) {
    const double h = config.dt / params.arm.beta(i);
    servo_decay_(i) = 1.0 - h + h * h / 2.0 - h * h * h / 6.0 + h * h * h * h / 24.0;
  }
}

MpcProblem::State MpcProblem::step(const State& x, const Control& u, int) const {
  State out;
  out.base = rk4_step(x.base, Wrench::FromVector(u.head<6>()), Wrench{}, config_.dt, params_.uav);
  const Vec4 cmd = u.tail<4>();
  out.theta = cmd + (x.theta - cmd).cwiseProduct(servo_decay_);
  return out;
}

void MpcProblem::linearize(const State& x, const Control& u, int,
                           Eigen::Matrix<double, kNx, kNx>& a,
                           Eigen::Matrix<double, kNx, kNu>& b) const {
  a.setZero();
  b.setZero();
  BaseStateT<Ad15> s;
  s.p = x.base.p.cast<Ad15>();
  Vector3<Ad15> dphi;
  seed<Ad15>(dphi, Vec3::Zero(), 0);
  s.R = x.base.R.cast<Ad15>() * exp_so3(dphi);
  seed<Ad15>(s.v, x.base.v, 3);
  Vector6<Ad15> tau;
  seed<Ad15>(tau, u.head<6>(), 9);
  const BaseStateT<Ad15> next = rk4_step(s, WrenchT<Ad15>::FromVector(tau), WrenchT<Ad15>{},
                                         config_.dt, params_.uav);
  Mat3 r_next;
  for (int i = 0; i < 9; ++i) r_next(i) = next.R(i).value();
  const Vector3<Ad15> phi_next = vee_unchecked(Matrix3<Ad15>(r_next.transpose().cast<Ad15>() * next.R));

  a.block<3, 3>(0, 0).setIdentity();
  for (int i = 0; i < 3; ++i) {
    const auto& dp = next.p(i).derivatives();
    const auto& df = phi_next(i).derivatives();
    a.block<1, 9>(i, 3) = dp.head<9>().transpose();
    b.block<1, 6>(i, 0) = dp.tail<6>().transpose();
    a.block<1, 9>(3 + i, 3) = df.head<9>().transpose();
    b.block<1, 6>(3 + i, 0) = df.tail<6>().transpose();
  }
  for (int i = 0; i < 6; ++i) {
    const auto& dv = next.v(i).derivatives();
    a.block<1, 9>(6 + i, 3) = dv.head<9>().transpose();
    b.block<1, 6>(6 + i, 0) = dv.tail<6>().transpose();
  }
  for (int i = 0; i < 4; ++i) {
    a(12 + i, 12 + i) = servo_decay_(i);
    b(12 + i, 6 + i) = 1.0 - servo_decay_(i);
  }
}

template <typename Scalar>
auto MpcProblem::kinematic_terms(const Vector3<Scalar>& p, const Matrix3<Scalar>& r,
                                 const Vector4<Scalar>& theta, const EeTarget& target) const
    -> Eigen::Matrix<Scalar, kKin, 1> {
  const ArmParams& arm = params_.arm;
  const CollisionConfig& col = config_.collision;
  const TransformT<Scalar> root = TransformT<Scalar>{r, p} * arm.mount.cast<Scalar>();
  const auto frames = chain_frames(theta, arm);
  const Vector3<Scalar> o2 = root * frames[2].translation;
  const Vector3<Scalar> o3 = root * frames[3].translation;
  const TransformT<Scalar> ee = root * frames[4];

  Eigen::Matrix<Scalar, kKin, 1> out;
  const Vector3<Scalar> e_p = ee.translation - target.p_ref.cast<Scalar>();
  const Vector3<Scalar> e_r = rotation_error(ee.rotation, target.R_ref);
  for (int i = 0; i < 3; ++i) {
    out(i) = e_p(i) * sq_p_(i);
    out(3 + i) = e_r(i) * sq_r_(i);
  }
  const double w = sq_pen_;
  const double floor = col.floor_z + col.margin;
  out(6) = hinge<Scalar>(Scalar(floor + col.base_radius) - p(2)) * w;
  out(7) = hinge<Scalar>(Scalar(floor + col.link_radius) - o2(2)) * w;
  out(8) = hinge<Scalar>(Scalar(floor + col.link_radius) - o3(2)) * w;
  out(9) = hinge<Scalar>(Scalar(floor + col.link_radius) - ee.translation(2)) * w;
  const double clear = col.base_radius + col.link_radius + col.margin;
  out(10) = hinge<Scalar>(Scalar(clear) - segment_distance(p, o2, o3)) * w;
  out(11) = hinge<Scalar>(Scalar(clear) - segment_distance(p, o3, ee.translation)) * w;
  for (int j = 0; j < CollisionConfig::kMaxWalls; ++j) {
    if (j < static_cast<int>(col.walls.size())) {
      const Vector3<Scalar> n = col.walls[j].normal.cast<Scalar>();
      const double off = col.walls[j].offset + col.margin;
      out(12 + 3 * j) = hinge<Scalar>(Scalar(off + col.base_radius) - n.dot(p)) * w;
      out(13 + 3 * j) = hinge<Scalar>(Scalar(off + col.link_radius) - n.dot(o2)) * w;
      out(14 + 3 * j) = hinge<Scalar>(Scalar(off + col.link_radius) - n.dot(ee.translation)) * w;
    } else {
      out.template segment<3>(12 + 3 * j).setZero();
    }
  }
  return out;
}

void MpcProblem::kinematic_block(const State& x, const EeTarget& target,
                                 Eigen::Matrix<double, kKin, 1>& r,
                                 Eigen::Matrix<double, kKin, kNx>* jx) const {
  if (!jx) {
    r = kinematic_terms<double>(x.base.p, x.base.R, x.theta, target);
    return;
  }
  Vector3<Ad10> p, dphi;
  Vector4<Ad10> theta;
  seed<Ad10>(p, x.base.p, 0);
  seed<Ad10>(dphi, Vec3::Zero(), 3);
  seed<Ad10>(theta, x.theta, 6);
  const Matrix3<Ad10> rot = x.base.R.cast<Ad10>() * exp_so3(dphi);
  const auto terms = kinematic_terms<Ad10>(p, rot, theta, target);
  jx->setZero();
  for (int i = 0; i < kKin; ++i) {
    r(i) = terms(i).value();
    const auto& d = terms(i).derivatives();
    jx->block<1, 6>(i, 0) = d.head<6>().transpose();
    jx->block<1, 4>(i, 12) = d.tail<4>().transpose();
  }
}

void MpcProblem::speed_block(const State& x, Eigen::Matrix<double, 2, 1>& r,
                             Eigen::Matrix<double, 2, kNx>* jx) const {
  const Vec3 lin = x.base.v.head<3>();
  const Vec3 ang = x.base.v.tail<3>();
  const double nl = lin.norm();
  const double na = ang.norm();
  r(0) = sq_pen_ * std::max(0.0, nl - config_.max_linear_speed);
  r(1) = sq_pen_ * std::max(0.0, na - config_.max_angular_speed);
  if (jx) {
    jx->setZero();
    if (r(0) > 0.0) jx->block<1, 3>(0, 6) = sq_pen_ * lin.transpose() / nl;
    if (r(1) > 0.0) jx->block<1, 3>(1, 9) = sq_pen_ * ang.transpose() / na;
  }
}

void MpcProblem::stage_residual(const State& x, const Control& u, int k,
                                Eigen::Matrix<double, kNr, 1>& r,
                                Eigen::Matrix<double, kNr, kNx>* jx,
                                Eigen::Matrix<double, kNr, kNu>* ju) const {
  const EeTarget& tgt = target(k);
  Eigen::Matrix<double, kKin, 1> kin;
  Eigen::Matrix<double, kKin, kNx> kin_j;
  kinematic_block(x, tgt, kin, jx ? &kin_j : nullptr);
  Eigen::Matrix<double, 2, 1> spd;
  Eigen::Matrix<double, 2, kNx> spd_j;
  speed_block(x, spd, jx ? &spd_j : nullptr);

  const Vec6 hover = hover_wrench(x.base.R, params_.uav).vector();
  r.head<6>() = kin.head<6>();
  r.segment<6>(6) = sq_v_.cwiseProduct(x.base.v - tgt.v_ref);
  r.segment<4>(12) = sq_theta_.cwiseProduct(x.theta - config_.theta_ref);
  r.segment<6>(16) = sq_w_.cwiseProduct(u.head<6>() - hover);
  r.segment<4>(22) = sq_j_.cwiseProduct(u.tail<4>() - theta_hat_);
  r.segment<12>(26) = kin.tail<12>();
  r.segment<2>(38) = spd;

  if (jx) {
    jx->setZero();
    jx->topRows<6>() = kin_j.topRows<6>();
    jx->block<6, 6>(6, 6) = sq_v_.asDiagonal();
    jx->block<4, 4>(12, 12) = sq_theta_.asDiagonal();
    const Vec3 up_body = x.base.R.transpose().col(2);
    const Vec3 scale = sq_w_.head<3>().cwiseProduct(params_.uav.translational_mass());
    jx->block<3, 3>(16, 3) = -params_.uav.gravity * (scale.asDiagonal() * hat(up_body));
    jx->block<12, kNx>(26, 0) = kin_j.bottomRows<12>();
    jx->block<2, kNx>(38, 0) = spd_j;
  }
  if (ju) {
    ju->setZero();
    ju->block<6, 6>(16, 0) = sq_w_.asDiagonal();
    ju->block<4, 4>(22, 6) = sq_j_.asDiagonal();
  }
}

void MpcProblem::terminal_residual(const State& x, Eigen::Matrix<double, kNrTerminal, 1>& r,
                                   Eigen::Matrix<double, kNrTerminal, kNx>* jx) const {
  const EeTarget& tgt = target(config_.steps);
  Eigen::Matrix<double, kKin, 1> kin;
  Eigen::Matrix<double, kKin, kNx> kin_j;
  kinematic_block(x, tgt, kin, jx ? &kin_j : nullptr);
  Eigen::Matrix<double, 2, 1> spd;
  Eigen::Matrix<double, 2, kNx> spd_j;
  speed_block(x, spd, jx ? &spd_j : nullptr);

  r.head<6>() = sq_term_ * kin.head<6>();
  r.segment<6>(6) = sq_term_ * sq_v_.cwiseProduct(x.base.v - tgt.v_ref);
  r.segment<4>(12) = sq_term_ * sq_theta_.cwiseProduct(x.theta - config_.theta_ref);
  r.segment<12>(16) = kin.tail<12>();
  r.segment<2>(28) = spd;
  if (jx) {
    jx->setZero();
    jx->topRows<6>() = sq_term_ * kin_j.topRows<6>();
    jx->block<6, 6>(6, 6) = sq_term_ * sq_v_.asDiagonal().toDenseMatrix();
    jx->block<4, 4>(12, 12) = sq_term_ * sq_theta_.asDiagonal().toDenseMatrix();
    jx->block<12, kNx>(16, 0) = kin_j.bottomRows<12>();
    jx->block<2, kNx>(28, 0) = spd_j;
  }
}

MpcProblem::Tangent MpcProblem::difference(const State& a, const State& b) const {
  Tangent d;
  d << a.base.p - b.base.p, safe_log(b.base.R.transpose() * a.base.R), a.base.v - b.base.v,
      a.theta - b.theta;
  return d;
}

MpcProblem::State MpcProblem::retract(const State& x, const Tangent& dx) const {
  State out;
  out.base.p = x.base.p + dx.segment<3>(0);
  out.base.R = x.base.R * exp_so3(dx.segment<3>(3));
  out.base.v = x.base.v + dx.segment<6>(6);
  out.theta = x.theta + dx.segment<4>(12);
  return out;
}

void MpcProblem::control_bounds(int, Control& lb, Control& ub) const {
  lb << config_.wrench_lb, params_.arm.lower;
  ub << config_.wrench_ub, params_.arm.upper;
}

MpcProblem::Control MpcProblem::hover_control(const State& x) const {
  Control u;
  u << hover_wrench(x.base.R, params_.uav).vector(), x.theta;
  Control lb, ub;
  control_bounds(0, lb, ub);
  return u.cwiseMax(lb).cwiseMin(ub);
}

MpcProblem build_problem(const MpcState& x0, const EeTarget& target, const MpcConfig& config,
                         const MpcWeights& weights, const UamParams& params) {
  return build_problem(x0, std::vector<EeTarget>{target}, config, weights, params);
}

MpcProblem build_problem(const MpcState& x0, std::vector<EeTarget> targets, const MpcConfig& config,
                         const MpcWeights& weights, const UamParams& params) {
  config.validate();
  weights.validate();
  params.validate();
  if (targets.empty() || targets.size() > static_cast<std::size_t>(config.steps) + 1) {
    throw std::invalid_argument("build_problem: need between 1 and N+1 targets");
  }
  for (const EeTarget& target : targets) {
    if (!is_rotation(target.R_ref, 1e-6) || !target.p_ref.allFinite() || !target.v_ref.allFinite()) {
      throw std::invalid_argument("build_problem: invalid target");
    }
  }
  if (!x0.base.p.allFinite() || !x0.base.v.allFinite() || !x0.theta.allFinite() ||
      !is_rotation(x0.base.R, 1e-6)) {
    throw InfeasibleStateError("build_problem: initial state is not a valid configuration");
  }
  if (!params.arm.within_limits(x0.theta, 1e-6)) {
    throw InfeasibleStateError("build_problem: initial joint angles violate joint limits");
  }
  return MpcProblem(x0, std::move(targets), config, weights, params);
}

namespace {

DdpOptions solver_options(const MpcConfig& c) {
  DdpOptions opt;
  opt.mode = c.mode;
  opt.max_iterations = c.mode == SolverMode::kRealTimeIteration ? 1 : c.max_iterations;
  opt.tolerance = c.tolerance;
  return opt;
}

MpcSolution to_solution(const DdpTrajectory<MpcState, 10>& t, double dt) {
  MpcSolution s;
  s.controls.reserve(t.us.size());
  for (const auto& u : t.us) s.controls.push_back(MpcControl::FromVector(u));
  s.states = t.xs;
  s.stamps.resize(t.xs.size());
  for (std::size_t k = 0; k < t.xs.size(); ++k) s.stamps[k] = static_cast<double>(k) * dt;
  s.iterations = t.iterations;
  s.cost = t.cost;
  s.kkt = t.kkt;
  s.converged = t.converged;
  return s;
}

std::vector<Vec10> initial_controls(const MpcProblem& problem, const MpcSolution* warm) {
  const int n = problem.horizon();
  std::vector<Vec10> us(n, problem.hover_control(problem.x0()));
  if (warm && static_cast<int>(warm->controls.size()) == n) {
    for (int k = 0; k < n; ++k) us[k] = warm->controls[k].vector();
  }
  return us;
}

}  // namespace

MpcSolution solve(const MpcProblem& problem, const MpcSolution* warm_start) {
  const auto start = std::chrono::steady_clock::now();
  BoxDdp<MpcProblem> ddp(problem, solver_options(problem.config()));
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    MpcSolution s = to_solution(ddp.solve(problem.x0(), initial_controls(problem, warm_start)),
                                problem.config().dt);
    s.solve_time = elapsed();
    return s;
  } catch (const BoxDdp<MpcProblem>::Divergence& e) {
    MpcSolution last = to_solution(e.last_iterate, problem.config().dt);
    last.solve_time = elapsed();
    throw MpcDivergence(e.what(), std::move(last));
  }
}

double rollout_cost(const MpcProblem& problem, const std::vector<Vec10>& controls) {
  BoxDdp<MpcProblem> ddp(problem, solver_options(problem.config()));
  return ddp.rollout(problem.x0(), controls).cost;
}

std::vector<Vec10> cost_gradient(const MpcProblem& problem, const std::vector<Vec10>& controls) {
  BoxDdp<MpcProblem> ddp(problem, solver_options(problem.config()));
  return ddp.cost_gradient(problem.x0(), controls);
}

EeMpcController::EeMpcController(MpcConfig config, MpcWeights weights, UamParams params)
    : config_(std::move(config)), weights_(weights), params_(std::move(params)) {
  config_.validate();
  weights_.validate();
  params_.validate();
}

void EeMpcController::reset() {
  solution_.reset();
  has_safe_ = false;
  degraded_ = false;
}

std::vector<MpcControl> EeMpcController::shifted_controls(double t) const {
  const auto& prev = solution_->controls;
  const int n = static_cast<int>(prev.size());
  const double shift = std::max(0.0, (t - solution_time_) / config_.dt);
  std::vector<MpcControl> out(n);
  for (int k = 0; k < n; ++k) {
    const double s = k + shift;
    const int i = static_cast<int>(std::floor(s));
    if (i >= n - 1) {
      out[k] = prev[n - 1];
      continue;
    }
    const double f = s - i;
    out[k] = MpcControl::FromVector((1.0 - f) * prev[i].vector() + f * prev[i + 1].vector());
  }
  return out;
}

MpcControl EeMpcController::step(const MpcState& x_hat, const EeTarget& target, double t) {
  return step(x_hat, std::vector<EeTarget>{target}, t);
}

MpcControl EeMpcController::step(const MpcState& x_hat, std::vector<EeTarget> targets, double t) {
  const auto start = std::chrono::steady_clock::now();
  MpcState x = x_hat;
  x.theta = x.theta.cwiseMax(params_.arm.lower).cwiseMin(params_.arm.upper);
  // A single iteration from the hover guess is far from optimal, so a cold
  // start is solved to convergence before switching to RTI.
  MpcConfig cfg = config_;
  if (!solution_) cfg.mode = SolverMode::kFullConverge;
  const MpcProblem problem = build_problem(x, std::move(targets), cfg, weights_, params_);

  MpcControl u;
  try {
    std::optional<MpcSolution> warm;
    if (solution_) {
      warm.emplace();
      warm->controls = shifted_controls(t);
    }
    MpcSolution sol = solve(problem, warm ? &*warm : nullptr);
    u = sol.controls.front();
    solution_ = std::move(sol);
    solution_time_ = t;
    last_safe_ = u;
    has_safe_ = true;
    degraded_ = false;
  } catch (const MpcDivergence&) {
    const double period = 1.0 / config_.control_rate;
    if (solution_ && t - solution_time_ <= 2.0 * period + 1e-9) {
      u = shifted_controls(t).front();
    } else {
      degraded_ = true;
      u = has_safe_ ? last_safe_ : MpcControl::FromVector(problem.hover_control(x));
    }
  }
  last_cycle_time_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return u;
}

}  // namespace uam
