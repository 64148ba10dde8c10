#ifndef RCM_SERVICE_HPP
#define RCM_SERVICE_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rcm/plant.hpp"
#include "rcm/protocol.hpp"
#include "rcm/registers.hpp"
#include "rcm/trajectory.hpp"

namespace rcm {

struct SupervisorConfig {
    // Goal must lie within this distance of the instrument ray before q3 may move.
    double alignment_tolerance = 0.5;  // mm
    // Largest single jog per joint (rad, mm, mm) and per Cartesian axis (mm).
    std::array<double, kJointCount> max_joint_jog{0.2, 20.0, 20.0};
    double max_cartesian_jog = 20.0;
    // Fraction of the joint caps used by streamed plans; the rest absorbs setpoint quantization.
    double tracking_margin = 0.9;
};

struct ServiceConfig {
    PlantConfig plant{};
    SupervisorConfig supervisor{};
};

// Command-and-control level: supervisor state machine, register map and the virtual plant,
// advanced together one tick at a time. Single-threaded and deterministic; the network host
// serializes everything onto the thread that calls step().
class ControlService {
public:
    explicit ControlService(ServiceConfig config = {});

    const ServiceConfig& config() const { return config_; }
    const RobotGeometry& geometry() const { return config_.plant.geometry; }

    Ack handle_command(const CommandMessage& msg);

    // Register transactions from external clients. Writes land in the map immediately;
    // the supervisor owns the setpoint block and rewrites it every tick.
    std::optional<RegisterException> read_registers(std::uint16_t addr, std::uint16_t count,
                                                    std::vector<std::uint16_t>& out) const;
    std::optional<RegisterException> write_registers(std::uint16_t addr, std::span<const std::uint16_t> values);

    // One control period: sample the active plan, write setpoints, advance the plant,
    // update the supervisor, publish registers. Returns the telemetry frame of this tick.
    TelemetryFrame step();

    const TelemetryFrame& latest() const { return latest_; }
    const RegisterMap& registers() const { return registers_; }
    SupervisorMode mode() const { return mode_; }
    bool aligned() const { return aligned_; }
    const std::optional<Point3>& goal() const { return goal_; }
    const std::optional<MotionPlan>& active_plan() const { return plan_; }
    const VirtualPlant& plant() const { return plant_; }

    // Fault injection hook for tests and drills.
    VirtualPlant& plant_mut() { return plant_; }

private:
    Ack start_plan(std::uint64_t seq, MotionPlan plan, std::optional<Point3> goal);
    RobotGeometry plan_geometry() const;
    Ack plan_to_goal(std::uint64_t seq, const Point3& goal, MotionMode mode);
    std::optional<Ack> motion_precheck(std::uint64_t seq) const;

    void consume_command_word();
    void write_setpoints();
    void update_after_tick(const PlantSnapshot& snap);
    void advance_plan(const PlantSnapshot& snap);
    bool compute_alignment(const PlantSnapshot& snap) const;
    bool commanded(Joint j) const;
    void enter_fault();
    void drop_plan();
    void publish_registers(const PlantSnapshot& snap);
    TelemetryFrame make_frame(const PlantSnapshot& snap) const;

    ServiceConfig config_;
    VirtualPlant plant_;
    RegisterMap registers_;
    TelemetryFrame latest_{};

    SupervisorMode mode_ = SupervisorMode::Init;
    std::optional<MotionPlan> plan_;
    std::size_t phase_index_ = 0;
    std::uint64_t phase_ticks_ = 0;
    std::uint64_t plan_ticks_ = 0;
    double progress_ = 0.0;
    std::optional<Point3> goal_;
    bool aligned_ = false;
    int homing_stage_ = 0;  // 0 idle, 1 retracting q3, 2 homing q1 and q2

    std::array<std::int32_t, kJointCount> held_{};
    std::array<std::int32_t, kJointCount> applied_{};
    std::uint32_t heartbeat_ = 0;
};

// Recorded command-log entry: a command or a raw register write applied before `tick`.
struct LogEntry {
    std::uint64_t tick = 0;
    std::optional<CommandMessage> command;
    std::uint16_t addr = 0;
    std::vector<std::uint16_t> values;
};

nlohmann::json encode_log_entry(const LogEntry& e);
LogEntry decode_log_entry(const nlohmann::json& j);

struct ReplayResult {
    std::vector<std::string> telemetry;  // one JSON frame per tick
    std::vector<std::string> acks;
};

// Runs a fresh service over the log, applying each entry just before its tick, then keeps
// ticking until the supervisor is idle (or `max_ticks` extra ticks elapse).
ReplayResult replay(const ServiceConfig& config, std::span<const LogEntry> log, std::uint64_t max_ticks = 1'000'000);

// Streaming form: each telemetry frame is handed to `on_frame` instead of being kept. Returns the acks.
std::vector<std::string> replay(const ServiceConfig& config, std::span<const LogEntry> log,
                                const std::function<void(const std::string&)>& on_frame,
                                std::uint64_t max_ticks = 1'000'000);

}  // namespace rcm

#endif  // RCM_SERVICE_HPP
