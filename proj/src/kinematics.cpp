#include "rcm/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace rcm {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;
constexpr double kProbeStep = 1.0;  // mm

std::string describe_report(const JointVector& raw, const ValidationReport& report) {
    std::ostringstream os;
    os << "joint solution outside limits:";
    for (Joint j : kAllJoints) {
        if (!report.status(j).ok()) {
            os << ' ' << joint_name(j) << '=' << raw[j];
        }
    }
    return os.str();
}

}  // namespace

double Point3::norm() const { return std::sqrt(x * x + y * y + z * z); }

bool Point3::finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

const char* joint_name(Joint j) {
    switch (j) {
        case Joint::q1: return "q1";
        case Joint::q2: return "q2";
        case Joint::q3: return "q3";
    }
    return "?";
}

std::optional<Joint> joint_from_name(const std::string& name) {
    if (name == "q1" || name == "1" || name == "M1") return Joint::q1;
    if (name == "q2" || name == "2" || name == "M2") return Joint::q2;
    if (name == "q3" || name == "3" || name == "M3") return Joint::q3;
    return std::nullopt;
}

double& JointVector::operator[](Joint j) {
    switch (j) {
        case Joint::q1: return q1;
        case Joint::q2: return q2;
        case Joint::q3: break;
    }
    return q3;
}

double JointVector::operator[](Joint j) const {
    switch (j) {
        case Joint::q1: return q1;
        case Joint::q2: return q2;
        case Joint::q3: break;
    }
    return q3;
}

bool JointVector::finite() const { return std::isfinite(q1) && std::isfinite(q2) && std::isfinite(q3); }

double JointLimits::clamp(double v) const { return std::clamp(v, min, max); }

void RobotGeometry::validate() const {
    if (!(rail_radius > 0.0) || !std::isfinite(rail_radius)) {
        throw std::invalid_argument("rail radius must be positive");
    }
    if (!(tool_offset >= 0.0 && tool_offset < rail_radius)) {
        throw std::invalid_argument("tool offset must satisfy 0 <= m < R");
    }
    if (!rcm.finite()) {
        throw std::invalid_argument("rcm must be finite");
    }
    for (Joint j : kAllJoints) {
        const JointLimits& l = limit(j);
        if (!(l.min < l.max) || !std::isfinite(l.min) || !std::isfinite(l.max)) {
            throw std::invalid_argument(std::string("limits of ") + joint_name(j) + " must satisfy min < max");
        }
        if (!(l.v_max > 0.0) || !(l.a_max > 0.0)) {
            throw std::invalid_argument(std::string("speed caps of ") + joint_name(j) + " must be positive");
        }
    }
    const JointLimits& l2 = limit(Joint::q2);
    if (l2.min < 0.0 || l2.max > std::numbers::pi * rail_radius) {
        throw std::invalid_argument("q2 limits must lie within [0, pi*R]");
    }
    if (limit(Joint::q3).min < 0.0) {
        throw std::invalid_argument("q3 minimum must be >= 0");
    }
}

RobotGeometry RobotGeometry::config_a() {
    RobotGeometry g;
    g.rail_radius = 300.0;
    g.tool_offset = 50.0;
    g.rcm = {0.0, 0.0, 0.0};
    g.limit(Joint::q1) = {-std::numbers::pi, std::numbers::pi, 0.5, 1.0};
    g.limit(Joint::q2) = {0.0, 300.0 * std::numbers::pi, 50.0, 100.0};
    g.limit(Joint::q3) = {0.0, 600.0, 30.0, 60.0};
    return g;
}

bool ValidationReport::ok() const {
    return std::all_of(joints.begin(), joints.end(), [](const JointStatus& s) { return s.ok(); });
}

OutOfWorkspace::OutOfWorkspace(const JointVector& raw, const ValidationReport& report)
    : KinematicsError(describe_report(raw, report)), raw_(raw), report_(report) {}

Point3 forward_geometric(const JointVector& q, const RobotGeometry& geom) {
    const double R = geom.rail_radius;
    const double depth = q.q3 - R + geom.tool_offset;
    const double elevation = q.q2 / R - kHalfPi;
    const double c = std::cos(elevation);
    return {geom.rcm.x - depth * c * std::sin(q.q1),
            geom.rcm.y - depth * std::sin(elevation),
            geom.rcm.z - depth * c * std::cos(q.q1)};
}

SphericalSolution cartesian_to_spherical(const Point3& p, const RobotGeometry& geom,
                                         std::optional<double> theta_hint) {
    const Point3 v = geom.rcm - p;
    const double d = v.norm();
    if (!(d > kDegenerateDistance)) {
        throw DegenerateInput("tip coincides with the RCM; instrument direction is undefined");
    }
    SphericalSolution out;
    out.coords.ins = d;
    const double horizontal = std::hypot(v.x, v.z);
    // Same angle as asin(v.y / d), but well conditioned near the poles.
    out.coords.psi = std::atan2(v.y, horizontal);
    // cos(psi) == horizontal / d, computed without cancellation near the poles.
    if (horizontal / d < kSingularCosPsi) {
        out.singular = true;
        out.coords.theta = theta_hint.value_or(0.0);
    } else {
        out.coords.theta = std::atan2(v.x, v.z);
    }
    return out;
}

JointVector spherical_to_joints(const SphericalCoords& s, const RobotGeometry& geom) {
    const double R = geom.rail_radius;
    return {s.theta, R * (s.psi + kHalfPi), (R - geom.tool_offset) + s.ins};
}

SphericalCoords joints_to_spherical(const JointVector& q, const RobotGeometry& geom) {
    const double R = geom.rail_radius;
    return {q.q1, q.q2 / R - kHalfPi, q.q3 - R + geom.tool_offset};
}

InverseSolution inverse_geometric(const Point3& p, const RobotGeometry& geom, std::optional<double> theta_hint) {
    const SphericalSolution s = cartesian_to_spherical(p, geom, theta_hint);
    InverseSolution out{spherical_to_joints(s.coords, geom), s.singular};
    const ValidationReport report = validate_joints(out.joints, geom);
    if (!report.ok()) {
        throw OutOfWorkspace(out.joints, report);
    }
    return out;
}

double point_line_distance(const Point3& a, const Point3& b, const Point3& point) {
    const Point3 axis = b - a;
    const double len = axis.norm();
    if (!(len > 0.0)) {
        throw DegenerateInput("probe points coincide; line is undefined");
    }
    return axis.cross(point - a).norm() / len;
}

double rcm_residual(const JointVector& q, const RobotGeometry& geom) {
    JointVector probe = q;
    probe.q3 += kProbeStep;
    return point_line_distance(forward_geometric(q, geom), forward_geometric(probe, geom), geom.rcm);
}

ValidationReport validate_joints(const JointVector& q, const RobotGeometry& geom) {
    ValidationReport report;
    for (Joint j : kAllJoints) {
        const JointLimits& l = geom.limit(j);
        auto& status = report.joints[static_cast<std::size_t>(j)];
        status.below_min = q[j] < l.min;
        status.above_max = q[j] > l.max;
        report.clamped[j] = l.clamp(q[j]);
    }
    return report;
}

}  // namespace rcm
