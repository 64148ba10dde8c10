#ifndef RCM_TRAJECTORY_HPP
#define RCM_TRAJECTORY_HPP

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcm/kinematics.hpp"

namespace rcm {

class InvalidLimits : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class InvalidStep : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct JointState {
    double position = 0.0;
    double velocity = 0.0;
    double acceleration = 0.0;
};

// Trapezoidal (or triangular) velocity profile of a single joint, starting and ending at
// rest. All times are relative to the start of the profile.
struct JointProfile {
    Joint joint = Joint::q1;
    double from = 0.0;
    double to = 0.0;
    double v_max = 0.0;
    double a_max = 0.0;
    double v_peak = 0.0;  // magnitude actually reached
    double t_accel = 0.0;
    double t_cruise = 0.0;
    double t_decel = 0.0;

    double duration() const { return t_accel + t_cruise + t_decel; }
    double distance() const { return to - from; }
    JointState at(double t) const;
};

JointProfile plan_trapezoid(double from, double to, double v_max, double a_max, Joint joint = Joint::q1);

// Same endpoints, acceleration kept at a_max, cruise velocity lowered so the profile
// lasts exactly `duration`. `duration` must not be shorter than the profile's own.
JointProfile stretch_to(const JointProfile& profile, double duration);

enum class MotionMode { Sequential, Simultaneous };

const char* mode_name(MotionMode m);
std::optional<MotionMode> mode_from_name(const std::string& name);

struct MotionPhase {
    double start = 0.0;
    std::vector<JointProfile> profiles;  // joints active in this phase

    double duration() const;
    double end() const { return start + duration(); }
    bool moves(Joint j) const;
};

struct MotionPlan {
    MotionMode mode = MotionMode::Sequential;
    JointVector start{};
    JointVector end{};
    std::vector<MotionPhase> phases;

    double duration() const;
    // Positions, velocities and accelerations of all three joints at time t.
    std::array<JointState, kJointCount> at(double t) const;
};

// Throws OutOfWorkspace when either endpoint violates the geometry limits.
MotionPlan plan_motion(const JointVector& from, const JointVector& to, MotionMode mode, const RobotGeometry& geom);

struct TrajectorySample {
    double t = 0.0;
    std::array<JointState, kJointCount> joints{};
};

// Samples on the dt grid plus every profile breakpoint (phase boundaries included).
std::vector<TrajectorySample> sample(const MotionPlan& plan, double dt);

inline constexpr const char* kCsvHeader = "t,q1_pos,q1_vel,q1_acc,q2_pos,q2_vel,q2_acc,q3_pos,q3_vel,q3_acc";

// Throws CsvError if the stream fails.
void export_csv(const std::vector<TrajectorySample>& samples, std::ostream& out);
std::vector<TrajectorySample> parse_csv(std::istream& in);

}  // namespace rcm

#endif  // RCM_TRAJECTORY_HPP
