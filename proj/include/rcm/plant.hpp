#ifndef RCM_PLANT_HPP
#define RCM_PLANT_HPP

#include <array>
#include <cstdint>
#include <numbers>

#include "rcm/kinematics.hpp"

namespace rcm {

enum class AxisFault : std::uint8_t { None, LimitFault, HomingTimeout };
enum class HomingStage : std::uint8_t { Idle, Seek, Backoff, Zero };

const char* fault_name(AxisFault f);
const char* homing_stage_name(HomingStage s);

enum class InstrumentChannel : std::size_t { Pitch = 0, Yaw = 1, Roll = 2, Grasp = 3 };
inline constexpr std::size_t kInstrumentChannels = 4;
const char* channel_name(InstrumentChannel c);

struct PlantConfig {
    RobotGeometry geometry = RobotGeometry::config_a();
    double dt = 0.004;  // 250 Hz
    // Encoder counts per joint unit (per rad for M1, per mm for M2/M3).
    std::array<double, kJointCount> encoder_resolution{100000.0, 1000.0, 1000.0};
    double homing_seek_fraction = 0.10;
    double homing_backoff_fraction = 0.02;
    // SEEK gives up after travelling this multiple of the joint range.
    double homing_travel_factor = 1.25;
    double instrument_slew = 2.0;  // normalized units per second
    JointVector initial{0.0, 150.0 * std::numbers::pi, 0.0};
};

struct AxisSnapshot {
    Joint id = Joint::q1;
    double position = 0.0;
    double velocity = 0.0;
    double setpoint = 0.0;
    std::int64_t encoder = 0;
    bool home_sensor = false;
    bool far_sensor = false;
    AxisFault fault = AxisFault::None;
    bool homed = false;
    HomingStage homing = HomingStage::Idle;
};

struct PlantSnapshot {
    std::uint64_t tick = 0;
    std::array<AxisSnapshot, kJointCount> axes{};
    std::array<double, kInstrumentChannels> instrument{};
    bool estopped = false;

    const AxisSnapshot& axis(Joint j) const { return axes[static_cast<std::size_t>(j)]; }
    JointVector positions() const;
    JointVector setpoints() const;
    bool all_homed() const;
    bool any_fault() const;
    bool any_homing() const;
    bool at_rest(Joint j) const;
};

class HomingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Kinematic stand-in for the physical level: three position-controlled axes with encoders
// and proximity sensors, plus four instrument channels. Single owner; tick() advances one
// control period and returns an immutable snapshot.
class VirtualPlant {
public:
    explicit VirtualPlant(PlantConfig config = {});

    const PlantConfig& config() const { return config_; }
    double dt() const { return config_.dt; }

    // Ignored while e-stopped.
    void set_setpoint(Joint j, double value);
    void set_instrument_target(InstrumentChannel c, double value);

    // Starts the SEEK -> BACKOFF -> ZERO sequence. Throws HomingError if the axis is faulted
    // or the plant is e-stopped.
    void home(Joint j);

    // Zero all velocities, freeze setpoints and instrument targets, abort homing.
    void estop();
    // Same stop without latching the e-stop state.
    void halt();
    // Clears the e-stop latch and axis faults.
    void reset();

    // Fault injection: a disabled sensor never reports.
    void set_sensor_enabled(Joint j, bool enabled);

    PlantSnapshot tick();
    PlantSnapshot snapshot() const;

private:
    struct Axis {
        Joint id = Joint::q1;
        JointLimits limits{};
        double resolution = 1.0;
        double position = 0.0;
        double velocity = 0.0;
        double setpoint = 0.0;
        double last_setpoint = 0.0;
        double feedforward = 0.0;
        AxisFault fault = AxisFault::None;
        bool homed = false;
        HomingStage homing = HomingStage::Idle;
        double homing_travel = 0.0;
        bool sensors_enabled = true;

        bool home_sensor() const { return sensors_enabled && position < limits.min; }
        bool far_sensor() const { return sensors_enabled && position > limits.max; }
        void stop();
    };

    void step_tracking(Axis& a);
    void step_homing(Axis& a);
    void drive_velocity(Axis& a, double target);
    void check_limits(Axis& a);
    Axis& axis(Joint j) { return axes_[static_cast<std::size_t>(j)]; }

    PlantConfig config_;
    std::array<Axis, kJointCount> axes_{};
    std::array<double, kInstrumentChannels> instrument_{};
    std::array<double, kInstrumentChannels> instrument_target_{};
    std::uint64_t tick_ = 0;
    bool estopped_ = false;
};

}  // namespace rcm

#endif  // RCM_PLANT_HPP
