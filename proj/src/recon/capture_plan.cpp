#include "splatop/recon/capture_plan.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "splatop/recon/errors.hpp"
#include "splatop/render/camera.hpp"

namespace splatop {

namespace {
constexpr const char* kPlanMagic = "# splatop capture plan v1";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Quat canonical(Quat q) {
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

// Picks a quaternion that reproduces itself through parse and re-serialize.
// Iterates q -> R(q) -> q until it repeats and returns the smallest member of the cycle.
Quat stable_quat(const Mat3& R) {
  std::vector<Quat> seen{canonical(Quat(R))};
  for (int i = 0; i < 32; ++i) {
    const Quat next = canonical(Quat(make_rigid(seen.back(), Vec3::Zero()).linear()));
    for (std::size_t k = 0; k < seen.size(); ++k) {
      if (seen[k].coeffs() != next.coeffs()) continue;
      Quat best = seen[k];
      for (std::size_t m = k + 1; m < seen.size(); ++m) {
        const auto& a = seen[m].coeffs();
        const auto& b = best.coeffs();
        if (std::lexicographical_compare(a.data(), a.data() + 4, b.data(), b.data() + 4)) best = seen[m];
      }
      return best;
    }
    seen.push_back(next);
  }
  return seen.back();
}
}  // namespace

CapturePlan plan_capture(const Vec3& center, const std::vector<Ring>& rings) {
  CapturePlan plan;
  plan.look_at = center;
  plan.rings = rings;
  for (const Ring& ring : rings) {
    if (ring.count < 1) throw std::invalid_argument("plan_capture: ring count must be >= 1");
    if (!(ring.radius >= 0.0)) throw std::invalid_argument("plan_capture: ring radius must be positive");
    if (ring.radius == 0.0)
      throw ReconError(ReconError::Code::DegenerateRing,
                       ring.height == 0.0 ? "ring camera position equals the look-at point"
                                          : "ring camera looks straight along the up vector");
    for (int j = 0; j < ring.count; ++j) {
      const double angle = 2.0 * std::numbers::pi * j / ring.count;
      const Vec3 eye = center + Vec3(ring.radius * std::cos(angle), ring.radius * std::sin(angle), ring.height);
      plan.poses.push_back(make_rigid(look_at_rotation(eye, center), eye));
    }
  }
  return plan;
}

std::string serialize_plan(const CapturePlan& plan) {
  std::string out = std::string(kPlanMagic) + "\n";
  out += "# look_at " + fmt(plan.look_at.x()) + " " + fmt(plan.look_at.y()) + " " + fmt(plan.look_at.z()) + "\n";
  for (const Ring& r : plan.rings)
    out += "# ring " + fmt(r.radius) + " " + fmt(r.height) + " " + std::to_string(r.count) + "\n";
  out += "# columns px py pz qw qx qy qz (camera-to-world, camera looks along +z)\n";
  for (const Rigid& pose : plan.poses) {
    const Quat q = stable_quat(pose.linear());
    const Vec3 p = pose.translation();
    out += fmt(p.x()) + " " + fmt(p.y()) + " " + fmt(p.z()) + " " + fmt(q.w()) + " " + fmt(q.x()) + " " +
           fmt(q.y()) + " " + fmt(q.z()) + "\n";
  }
  return out;
}

CapturePlan parse_plan(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kPlanMagic)
    throw ReconError(ReconError::Code::MalformedPlan, "capture plan: missing header line");
  CapturePlan plan;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line[0] == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "look_at") {
        ls >> plan.look_at.x() >> plan.look_at.y() >> plan.look_at.z();
      } else if (key == "ring") {
        Ring r;
        ls >> r.radius >> r.height >> r.count;
        plan.rings.push_back(r);
      }
      if (ls.fail()) throw ReconError(ReconError::Code::MalformedPlan, "capture plan line " + std::to_string(lineno));
      continue;
    }
    double v[7];
    for (double& x : v) ls >> x;
    if (ls.fail()) throw ReconError(ReconError::Code::MalformedPlan, "capture plan line " + std::to_string(lineno));
    plan.poses.push_back(make_rigid(Quat(v[3], v[4], v[5], v[6]), Vec3(v[0], v[1], v[2])));
  }
  return plan;
}

void write_plan(const std::string& path, const CapturePlan& plan) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize_plan(plan);
}

CapturePlan read_plan(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_plan(ss.str());
}

}  // namespace splatop
