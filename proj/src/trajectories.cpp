#include "uam/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uam {

TrajectoryKind parse_trajectory_kind(const std::string& name) {
  if (name == "setpoint") return TrajectoryKind::kSetpoint;
  if (name == "ellipse") return TrajectoryKind::kEllipse;
  if (name == "figure8") return TrajectoryKind::kFigure8;
  if (name == "file") return TrajectoryKind::kFile;
  throw std::invalid_argument("unknown trajectory kind: " + name);
}

std::string to_string(TrajectoryKind kind) {
  switch (kind) {
    case TrajectoryKind::kSetpoint: return "setpoint";
    case TrajectoryKind::kEllipse: return "ellipse";
    case TrajectoryKind::kFigure8: return "figure8";
    case TrajectoryKind::kFile: return "file";
  }
  return "unknown";
}

void TrajectorySpec::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("TrajectorySpec: duration must be positive");
  if (!(rate > 0.0)) throw std::invalid_argument("TrajectorySpec: rate must be positive");
  if (kind == TrajectoryKind::kFile) {
    if (samples.empty()) throw std::invalid_argument("TrajectorySpec: file trajectory has no samples");
    for (std::size_t i = 1; i < samples.size(); ++i) {
      if (!(samples[i].t > samples[i - 1].t)) {
        throw std::invalid_argument("TrajectorySpec: file timestamps must increase strictly");
      }
    }
  }
}

namespace {

EeTarget from_file(const std::vector<TimedPose>& s, double t) {
  EeTarget target;
  if (s.size() == 1 || t <= s.front().t) {
    target.p_ref = s.front().p;
    target.R_ref = s.front().R;
    return target;
  }
  if (t >= s.back().t) {
    target.p_ref = s.back().p;
    target.R_ref = s.back().R;
    return target;
  }
  const auto it = std::upper_bound(s.begin(), s.end(), t,
                                   [](double v, const TimedPose& p) { return v < p.t; });
  const TimedPose& b = *it;
  const TimedPose& a = *(it - 1);
  const double f = (t - a.t) / (b.t - a.t);
  target.p_ref = a.p + f * (b.p - a.p);
  const Eigen::Quaterniond qa(a.R);
  const Eigen::Quaterniond qb(b.R);
  target.R_ref = qa.slerp(f, qb).toRotationMatrix();
  target.v_ref.head<3>() = (b.p - a.p) / (b.t - a.t);
  return target;
}

}  // namespace

EeTarget sample(const TrajectorySpec& spec, double t, bool* clamped) {
  const double tc = std::clamp(t, 0.0, spec.duration);
  if (clamped) *clamped = tc != t;
  EeTarget target;
  switch (spec.kind) {
    case TrajectoryKind::kSetpoint:
      target.p_ref = Vec3(0.0, 0.0, 1.3);
      break;
    case TrajectoryKind::kEllipse:
      target.p_ref = Vec3(0.5 * std::sin(0.3 * tc), 0.0, 1.4 + 0.2 * std::sin(0.3 * tc + 0.75));
      target.v_ref.head<3>() = Vec3(0.15 * std::cos(0.3 * tc), 0.0, 0.06 * std::cos(0.3 * tc + 0.75));
      break;
    case TrajectoryKind::kFigure8:
      target.p_ref = Vec3(0.1 + 0.6 * std::sin(0.3 * tc), 0.0, 1.35 + 0.25 * std::sin(0.6 * tc));
      target.v_ref.head<3>() = Vec3(0.18 * std::cos(0.3 * tc), 0.0, 0.15 * std::cos(0.6 * tc));
      break;
    case TrajectoryKind::kFile:
      target = from_file(spec.samples, tc);
      break;
  }
  if (tc != t) target.v_ref.setZero();
  return target;
}

TrajectorySpec load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file: " + path);
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::kFile;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line[0] == 't') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double v[8];
    for (double& x : v) {
      if (!(ss >> x)) {
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 8 columns");
      }
    }
    TimedPose pose;
    pose.t = v[0];
    pose.p = Vec3(v[1], v[2], v[3]);
    pose.R = from_wxyz(Vec4(v[4], v[5], v[6], v[7]));
    spec.samples.push_back(pose);
  }
  if (spec.samples.empty()) throw std::runtime_error("trajectory file has no samples: " + path);
  spec.duration = std::max(spec.samples.back().t, 1e-9);
  spec.validate();
  return spec;
}

void save_trajectory_csv(const std::string& path, const std::vector<TimedPose>& poses) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory file: " + path);
  out.precision(12);
  out << "t,px,py,pz,qw,qx,qy,qz\n";
  for (const TimedPose& p : poses) {
    const Vec4 q = to_wxyz(p.R);
    out << p.t << ',' << p.p.x() << ',' << p.p.y() << ',' << p.p.z() << ',' << q(0) << ','
        << q(1) << ',' << q(2) << ',' << q(3) << '\n';
  }
}

RmseResult rmse(const std::vector<TimedPoint>& reference, const std::vector<TimedPoint>& measured) {
  if (reference.empty() || measured.empty()) throw std::invalid_argument("rmse: empty stream");
  const double lo = std::max(reference.front().t, measured.front().t);
  const double hi = std::min(reference.back().t, measured.back().t);
  RmseResult out;
  double sum = 0.0;
  std::size_t j = 0;
  for (const TimedPoint& m : measured) {
    if (m.t < lo || m.t > hi) continue;
    while (j + 1 < reference.size() && reference[j + 1].t < m.t) ++j;
    Vec3 ref = reference[j].p;
    if (j + 1 < reference.size() && reference[j + 1].t > reference[j].t && m.t > reference[j].t) {
      const double f = std::min(1.0, (m.t - reference[j].t) / (reference[j + 1].t - reference[j].t));
      ref += f * (reference[j + 1].p - reference[j].p);
    }
    const Vec3 e = m.p - ref;
    out.t.push_back(m.t);
    out.error.push_back(e);
    sum += e.squaredNorm();
  }
  if (out.t.empty()) throw std::invalid_argument("rmse: streams do not overlap");
  out.rmse_cm = 100.0 * std::sqrt(sum / static_cast<double>(out.t.size()));
  return out;
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd r;
  if (values.empty()) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return r;
}

}  // namespace uam
