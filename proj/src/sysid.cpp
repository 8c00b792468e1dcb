#include "uam/sysid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

namespace uam {

void MotionLog::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const MotionSample& s = samples[i];
    if (!std::isfinite(s.t) || !s.theta.allFinite() || !s.theta_cmd.allFinite()) {
      throw std::invalid_argument("MotionLog: non-finite sample " + std::to_string(i));
    }
    if (!is_valid(s.base, 1e-6) || !is_valid(s.ee, 1e-6)) {
      throw std::invalid_argument("MotionLog: invalid pose in sample " + std::to_string(i));
    }
    if (i > 0 && !(s.t > samples[i - 1].t)) {
      throw std::invalid_argument("MotionLog: timestamps must increase strictly");
    }
  }
}

namespace {

void write_pose(std::ostream& out, const Transform& t) {
  const Vec4 q = to_wxyz(t.rotation);
  out << ',' << t.translation.x() << ',' << t.translation.y() << ',' << t.translation.z() << ','
      << q(0) << ',' << q(1) << ',' << q(2) << ',' << q(3);
}

Transform read_pose(const double* v) {
  return {from_wxyz(Vec4(v[3], v[4], v[5], v[6])), Vec3(v[0], v[1], v[2])};
}

}  // namespace

MotionLog load_motion_log_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open motion log: " + path);
  MotionLog log;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double v[23];
    for (double& x : v) {
      if (!(ss >> x)) throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 23 columns");
    }
    MotionSample s;
    s.t = v[0];
    s.base = read_pose(v + 1);
    s.theta_cmd = Vec4(v[8], v[9], v[10], v[11]);
    s.theta = Vec4(v[12], v[13], v[14], v[15]);
    s.ee = read_pose(v + 16);
    log.samples.push_back(s);
  }
  log.validate();
  return log;
}

void save_motion_log_csv(const std::string& path, const MotionLog& log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write motion log: " + path);
  out << "t,bpx,bpy,bpz,bqw,bqx,bqy,bqz,c1,c2,c3,c4,q1,q2,q3,q4,epx,epy,epz,eqw,eqx,eqy,eqz\n";
  out << std::setprecision(17);
  for (const MotionSample& s : log.samples) {
    out << s.t;
    write_pose(out, s.base);
    for (int i = 0; i < 4; ++i) out << ',' << s.theta_cmd(i);
    for (int i = 0; i < 4; ++i) out << ',' << s.theta(i);
    write_pose(out, s.ee);
    out << '\n';
  }
}

DhVector dh_vector(const ArmParams& arm) {
  DhVector z;
  for (int i = 0; i < 4; ++i) {
    z(3 * i) = arm.joints[i].d;
    z(3 * i + 1) = arm.joints[i].a;
    z(3 * i + 2) = arm.joints[i].alpha;
  }
  return z;
}

ArmParams with_dh_vector(const ArmParams& arm, const DhVector& zeta) {
  ArmParams out = arm;
  for (int i = 0; i < 4; ++i) {
    out.joints[i].d = zeta(3 * i);
    out.joints[i].a = zeta(3 * i + 1);
    out.joints[i].alpha = zeta(3 * i + 2);
  }
  return out;
}

std::string dh_parameter_name(int index) {
  if (index < 0 || index >= kDhParameterCount) throw std::out_of_range("dh_parameter_name");
  static const char* kinds[] = {"d", "a", "alpha"};
  return std::string(kinds[index % 3]) + std::to_string(index / 3 + 1);
}

namespace {

struct Observation {
  Vec4 theta;
  Transform ee_in_base;
};

// Residuals live in the base frame so a rigid re-basing of the log cancels.
Eigen::VectorXd dh_residual(const std::vector<Observation>& obs, const ArmParams& arm,
                            double rotation_weight) {
  Eigen::VectorXd r(6 * static_cast<Eigen::Index>(obs.size()));
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const Transform fk = arm.mount * arm_transform(obs[k].theta, arm);
    r.segment<3>(6 * k) = fk.translation - obs[k].ee_in_base.translation;
    r.segment<3>(6 * k + 3) =
        rotation_weight * log_so3(obs[k].ee_in_base.rotation.transpose() * fk.rotation);
  }
  return r;
}

Eigen::MatrixXd dh_jacobian(const std::vector<Observation>& obs, const ArmParams& base,
                            const DhVector& zeta, double rotation_weight) {
  Eigen::MatrixXd j(6 * static_cast<Eigen::Index>(obs.size()), kDhParameterCount);
  for (int p = 0; p < kDhParameterCount; ++p) {
    const double h = 1e-6;
    DhVector plus = zeta, minus = zeta;
    plus(p) += h;
    minus(p) -= h;
    j.col(p) = (dh_residual(obs, with_dh_vector(base, plus), rotation_weight) -
                dh_residual(obs, with_dh_vector(base, minus), rotation_weight)) /
               (2.0 * h);
  }
  return j;
}

void check_rank(const Eigen::MatrixXd& j, double tolerance) {
  Eigen::VectorXd scale = j.colwise().norm().transpose();
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    if (scale(i) == 0.0) {
      throw InsufficientExcitation("identify_dh: log carries no information on " +
                                   dh_parameter_name(static_cast<int>(i)));
    }
  }
  const Eigen::MatrixXd js = j * scale.cwiseInverse().asDiagonal();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(js, Eigen::ComputeThinV);
  const Eigen::VectorXd& s = svd.singularValues();
  const Eigen::Index last = s.size() - 1;
  if (s(last) > tolerance * s(0)) return;
  const Eigen::VectorXd dir = svd.matrixV().col(last);
  std::vector<int> order(kDhParameterCount);
  for (int i = 0; i < kDhParameterCount; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(dir(a)) > std::abs(dir(b)); });
  std::ostringstream msg;
  msg << "identify_dh: rank-deficient excitation; unidentifiable direction ~";
  for (int k = 0; k < 3; ++k) {
    if (std::abs(dir(order[k])) < 0.1) break;
    msg << ' ' << std::showpos << std::setprecision(2) << dir(order[k]) << std::noshowpos << '*'
        << dh_parameter_name(order[k]);
  }
  throw InsufficientExcitation(msg.str());
}

}  // namespace

DhReport identify_dh(const MotionLog& log, const ArmParams& init, const DhOptions& options) {
  log.validate();
  init.validate();
  if (log.samples.empty()) throw InsufficientExcitation("identify_dh: empty log");
  std::vector<Observation> obs;
  obs.reserve(log.samples.size());
  for (const MotionSample& s : log.samples) obs.push_back({s.theta, s.base.inverse() * s.ee});

  DhReport report;
  std::vector<Vec4> distinct;
  for (const Observation& o : obs) {
    const bool seen = std::any_of(distinct.begin(), distinct.end(),
                                  [&](const Vec4& d) { return (d - o.theta).cwiseAbs().maxCoeff() < 1e-6; });
    if (!seen) distinct.push_back(o.theta);
    if (distinct.size() > 10000) break;
  }
  report.distinct_configurations = static_cast<int>(distinct.size());

  DhVector zeta = dh_vector(init);
  Eigen::VectorXd r = dh_residual(obs, init, options.rotation_weight);
  double cost = r.squaredNorm();
  const double n = static_cast<double>(r.size());
  report.initial_rms = std::sqrt(cost / n);
  report.cost_history.push_back(cost);

  double mu = 1e-3;
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::MatrixXd j = dh_jacobian(obs, init, zeta, options.rotation_weight);
    if (it == 0) check_rank(j, options.rank_tolerance);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    bool accepted = false;
    DhVector step = DhVector::Zero();
    for (int tries = 0; tries < 20 && !accepted; ++tries) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += mu * jtj.diagonal().cwiseMax(1e-12);
      step = -a.ldlt().solve(g);
      const DhVector trial = zeta + step;
      const Eigen::VectorXd r_trial = dh_residual(obs, with_dh_vector(init, trial), options.rotation_weight);
      const double c_trial = r_trial.squaredNorm();
      if (c_trial <= cost) {
        zeta = trial;
        r = r_trial;
        cost = c_trial;
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
      } else {
        mu *= 4.0;
      }
    }
    report.iterations = it + 1;
    if (!accepted) break;
    report.cost_history.push_back(cost);
    if (step.norm() < options.step_tolerance) break;
  }
  report.arm = with_dh_vector(init, zeta);
  report.rms = std::sqrt(cost / n);
  return report;
}

namespace {

// m-step zero-order-hold prediction error of one joint for decay a = e^{-dt/beta}.
double window_cost(const std::vector<double>& theta, const std::vector<double>& cmd, int m, double a) {
  double cost = 0.0;
  for (std::size_t k = 0; k + m < theta.size(); k += m) {
    double pred = theta[k];
    for (int j = 0; j < m; ++j) pred = a * pred + (1.0 - a) * cmd[k + j];
    const double e = pred - theta[k + m];
    cost += e * e;
  }
  return cost;
}

}  // namespace

BetaReport identify_beta(const MotionLog& log, const BetaOptions& options) {
  log.validate();
  const std::size_t n = log.samples.size();
  if (n < 3) throw InsufficientExcitation("identify_beta: log too short");
  const double dt = (log.samples.back().t - log.samples.front().t) / static_cast<double>(n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    if (std::abs(log.samples[k].t - log.samples[k - 1].t - dt) > 1e-6 * dt + 1e-9) {
      throw std::invalid_argument("identify_beta: log must be uniformly sampled");
    }
  }
  const int m = std::max(1, static_cast<int>(std::lround(options.window / dt)));

  BetaReport report;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> theta(n), cmd(n);
    for (std::size_t k = 0; k < n; ++k) {
      theta[k] = log.samples[k].theta(i);
      cmd[k] = log.samples[k].theta_cmd(i);
    }
    // One-step regression: theta_{k+1} - theta_k = s (cmd_k - theta_k),
    // s = 1 - e^{-dt/beta}.
    double sxx = 0.0, sxy = 0.0, max_gap = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double x = cmd[k] - theta[k];
      const double y = theta[k + 1] - theta[k];
      sxx += x * x;
      sxy += x * y;
      max_gap = std::max(max_gap, std::abs(x));
    }
    if (max_gap < 1e-3 || sxx <= 0.0) {
      throw InsufficientExcitation("identify_beta: joint " + std::to_string(i + 1) +
                                   " never leaves its command");
    }
    const double s = sxy / sxx;
    if (!(s > 0.0 && s < 1.0)) {
      throw InsufficientExcitation("identify_beta: joint " + std::to_string(i + 1) +
                                   " response is not first order");
    }
    report.beta_regression(i) = -dt / std::log(1.0 - s);

    // Refine on the m-step prediction error; golden-section search on
    // log(beta) around the regression estimate.
    double lo = std::log(report.beta_regression(i)) - 1.0;
    double hi = std::log(report.beta_regression(i)) + 1.0;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    auto cost_at = [&](double lb) { return window_cost(theta, cmd, m, std::exp(-dt / std::exp(lb))); };
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = cost_at(x1), f2 = cost_at(x2);
    while (hi - lo > 1e-12) {
      if (f1 < f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = cost_at(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = cost_at(x2);
      }
    }
    const double beta = std::exp(0.5 * (lo + hi));
    report.beta(i) = beta;

    // Confidence interval from the one-step regression residual, mapped
    // through ds/dbeta.
    double rss = 0.0;
    const double s_hat = 1.0 - std::exp(-dt / beta);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double e = theta[k + 1] - theta[k] - s_hat * (cmd[k] - theta[k]);
      rss += e * e;
    }
    const double se_s = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    const double ds_dbeta = std::exp(-dt / beta) * dt / (beta * beta);
    report.ci_half_width(i) = 1.96 * se_s / ds_dbeta;
    report.wide_ci[i] = report.ci_half_width(i) > options.max_relative_ci * beta;
  }
  return report;
}

MotionLog simulate_excitation(const ArmParams& truth, const Transform& base,
                              const ExcitationConfig& config, std::uint64_t seed) {
  truth.validate();
  if (config.segments < 1 || !(config.hold > 0.0) || !(config.rate > 0.0)) {
    throw std::invalid_argument("simulate_excitation: invalid configuration");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);
  const double dt = 1.0 / config.rate;
  const int per_segment = std::max(1, static_cast<int>(std::lround(config.hold * config.rate)));
  const Vec4 mid = 0.5 * (truth.lower + truth.upper);
  const Vec4 half = 0.5 * (truth.upper - truth.lower);
  const Vec4 decay = (-dt * truth.beta.cwiseInverse()).array().exp().matrix();

  MotionLog log;
  Vec4 theta = mid;
  for (int seg = 0; seg < config.segments; ++seg) {
    Vec4 cmd;
    for (int i = 0; i < 4; ++i) cmd(i) = mid(i) + config.span * half(i) * u(rng);
    for (int k = 0; k < per_segment; ++k) {
      MotionSample s;
      s.t = dt * static_cast<double>(log.samples.size());
      s.base = base;
      s.theta_cmd = cmd;
      s.theta = theta;
      s.ee = fk_ee(theta, truth, base);
      if (config.joint_noise > 0.0) {
        for (int i = 0; i < 4; ++i) s.theta(i) += config.joint_noise * g(rng);
      }
      if (config.position_noise > 0.0) {
        s.ee.translation += config.position_noise * Vec3(g(rng), g(rng), g(rng));
      }
      if (config.rotation_noise > 0.0) {
        s.ee.rotation = s.ee.rotation * exp_so3(Vec3(config.rotation_noise * Vec3(g(rng), g(rng), g(rng))));
      }
      log.samples.push_back(s);
      theta = cmd + (theta - cmd).cwiseProduct(decay);
    }
  }
  return log;
}

}  // namespace uam
