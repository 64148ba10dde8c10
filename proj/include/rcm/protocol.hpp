#ifndef RCM_PROTOCOL_HPP
#define RCM_PROTOCOL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "rcm/kinematics.hpp"
#include "rcm/plant.hpp"
#include "rcm/trajectory.hpp"

namespace rcm {

enum class SupervisorMode : std::uint8_t { Init = 0, Homing = 1, Ready = 2, Moving = 3, Inserting = 4, Fault = 5, EStopped = 6 };

const char* mode_name(SupervisorMode m);

enum class RejectReason : std::uint8_t {
    NotHomed,
    Faulted,
    EStopped,
    OutOfWorkspace,
    AlignmentRequired,
    BadArgument,
    Busy,
};

const char* reason_name(RejectReason r);

namespace cmd {
struct Home {};
struct JogJoint {
    Joint joint = Joint::q1;
    double delta = 0.0;
};
struct JogCartesian {
    int axis = 0;  // 0 = x, 1 = y, 2 = z
    double delta = 0.0;
};
struct MoveTo {
    Point3 goal{};
    MotionMode mode = MotionMode::Sequential;
};
struct SetInstrument {
    std::array<std::optional<double>, kInstrumentChannels> values{};
};
struct EStop {};
struct Reset {};
struct Query {};
}  // namespace cmd

using Command = std::variant<cmd::Home, cmd::JogJoint, cmd::JogCartesian, cmd::MoveTo, cmd::SetInstrument, cmd::EStop,
                             cmd::Reset, cmd::Query>;

const char* verb_name(const Command& c);

struct CommandMessage {
    std::uint64_t seq = 0;
    Command command;
};

struct Ack {
    std::uint64_t seq = 0;
    bool accepted = true;
    std::optional<RejectReason> reason;
    std::string detail;

    static Ack accept(std::uint64_t seq) { return {seq, true, std::nullopt, {}}; }
    static Ack reject(std::uint64_t seq, RejectReason r, std::string detail = {}) {
        return {seq, false, r, std::move(detail)};
    }
};

struct TelemetryFrame {
    std::uint64_t tick = 0;
    double time = 0.0;  // simulated seconds, tick * dt
    std::uint32_t heartbeat = 0;
    JointVector joints{};
    JointVector velocities{};
    Point3 tip{};
    std::array<AxisSnapshot, kJointCount> axes{};
    SupervisorMode mode = SupervisorMode::Init;
    bool aligned = false;
    double progress = 0.0;
    std::array<double, kInstrumentChannels> instrument{};
};

// Malformed command input. `seq` is recovered when the message got that far.
class DecodeError : public std::runtime_error {
public:
    DecodeError(std::optional<std::uint64_t> seq, const std::string& what) : std::runtime_error(what), seq_(seq) {}
    std::optional<std::uint64_t> seq() const { return seq_; }

private:
    std::optional<std::uint64_t> seq_;
};

// Wire forms: {"seq": u64, "verb": string, "args": {...}}.
CommandMessage decode_command(const nlohmann::json& j);
CommandMessage decode_command(const std::string& line);
nlohmann::json encode_command(const CommandMessage& m);

nlohmann::json encode_ack(const Ack& a);
Ack decode_ack(const nlohmann::json& j);

nlohmann::json encode_frame(const TelemetryFrame& f);
nlohmann::json encode_geometry(const RobotGeometry& g);

}  // namespace rcm

#endif  // RCM_PROTOCOL_HPP
