#ifndef RCM_KINEMATICS_HPP
#define RCM_KINEMATICS_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace rcm {

// Units everywhere: millimeters, radians, seconds.

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Point3 operator+(const Point3& a, const Point3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Point3 operator-(const Point3& a, const Point3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Point3 operator*(double s, const Point3& a) { return {s * a.x, s * a.y, s * a.z}; }
    friend bool operator==(const Point3&, const Point3&) = default;

    double dot(const Point3& o) const { return x * o.x + y * o.y + z * o.z; }
    Point3 cross(const Point3& o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
    double norm() const;
    bool finite() const;
};

enum class Joint : std::size_t { q1 = 0, q2 = 1, q3 = 2 };
inline constexpr std::size_t kJointCount = 3;
inline constexpr std::array<Joint, kJointCount> kAllJoints{Joint::q1, Joint::q2, Joint::q3};

const char* joint_name(Joint j);
std::optional<Joint> joint_from_name(const std::string& name);

// Active joint values: q1 revolute angle (rad), q2 arc length on the circular rail (mm),
// q3 linear-rail position (mm).
struct JointVector {
    double q1 = 0.0;
    double q2 = 0.0;
    double q3 = 0.0;

    double& operator[](Joint j);
    double operator[](Joint j) const;
    friend bool operator==(const JointVector&, const JointVector&) = default;
    bool finite() const;
};

struct SphericalCoords {
    double theta = 0.0;  // rotation about the horizontal axis
    double psi = 0.0;    // elevation, [-pi/2, pi/2]
    double ins = 0.0;    // depth past the RCM along the instrument axis, >= 0
};

struct JointLimits {
    double min = 0.0;
    double max = 0.0;
    double v_max = 0.0;
    double a_max = 0.0;

    double clamp(double v) const;
    bool contains(double v) const { return v >= min && v <= max; }
};

struct RobotGeometry {
    double rail_radius = 300.0;  // R
    double tool_offset = 50.0;   // m
    Point3 rcm{};
    std::array<JointLimits, kJointCount> limits{};

    const JointLimits& limit(Joint j) const { return limits[static_cast<std::size_t>(j)]; }
    JointLimits& limit(Joint j) { return limits[static_cast<std::size_t>(j)]; }

    // q3 value that places the tip exactly on the RCM.
    double q3_at_rcm() const { return rail_radius - tool_offset; }

    // Throws std::invalid_argument describing the first broken invariant.
    void validate() const;

    // Reference configuration: R = 300, m = 50, rcm at the origin.
    static RobotGeometry config_a();
};

// Thresholds shared by the kinematics routines.
inline constexpr double kDegenerateDistance = 1e-6;  // mm, tip considered at the RCM
inline constexpr double kSingularCosPsi = 1e-6;      // |cos psi| below this leaves theta free

struct JointStatus {
    bool below_min = false;
    bool above_max = false;
    bool ok() const { return !below_min && !above_max; }
};

struct ValidationReport {
    std::array<JointStatus, kJointCount> joints{};
    JointVector clamped{};

    bool ok() const;
    const JointStatus& status(Joint j) const { return joints[static_cast<std::size_t>(j)]; }
};

class KinematicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tip at (or within kDegenerateDistance of) the RCM, or coincident probe tips.
class DegenerateInput : public KinematicsError {
public:
    using KinematicsError::KinematicsError;
};

// The joint solution exists but violates the configured limits. The raw solution is kept
// for diagnostics.
class OutOfWorkspace : public KinematicsError {
public:
    OutOfWorkspace(const JointVector& raw, const ValidationReport& report);

    const JointVector& joints() const { return raw_; }
    const ValidationReport& report() const { return report_; }

private:
    JointVector raw_;
    ValidationReport report_;
};

struct SphericalSolution {
    SphericalCoords coords;
    bool singular = false;  // |cos psi| < kSingularCosPsi; theta is a tie-break value
};

Point3 forward_geometric(const JointVector& q, const RobotGeometry& geom);

// Inverts the forward model. When the orientation is singular theta is taken from
// `theta_hint` (streaming use) or 0 (stateless use).
SphericalSolution cartesian_to_spherical(const Point3& p, const RobotGeometry& geom,
                                         std::optional<double> theta_hint = std::nullopt);

JointVector spherical_to_joints(const SphericalCoords& s, const RobotGeometry& geom);
SphericalCoords joints_to_spherical(const JointVector& q, const RobotGeometry& geom);

struct InverseSolution {
    JointVector joints;
    bool singular = false;
};

// Throws DegenerateInput or OutOfWorkspace.
InverseSolution inverse_geometric(const Point3& p, const RobotGeometry& geom,
                                  std::optional<double> theta_hint = std::nullopt);

// Perpendicular distance from `point` to the line through `a` and `b`.
// Throws DegenerateInput when a and b coincide.
double point_line_distance(const Point3& a, const Point3& b, const Point3& point);

// Distance from the RCM to the instrument axis traced by two probe insertions
// (q3 and q3 + 1 mm at fixed q1, q2).
double rcm_residual(const JointVector& q, const RobotGeometry& geom);

ValidationReport validate_joints(const JointVector& q, const RobotGeometry& geom);

}  // namespace rcm

#endif  // RCM_KINEMATICS_HPP
