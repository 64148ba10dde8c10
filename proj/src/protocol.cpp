#include "rcm/protocol.hpp"

#include <cmath>

namespace rcm {

using nlohmann::json;

namespace {

const char* kChannelKeys[kInstrumentChannels] = {"pitch", "yaw", "roll", "grasp"};

double finite_number(const json& args, const char* key, std::uint64_t seq) {
    if (!args.contains(key)) throw DecodeError(seq, std::string("missing argument '") + key + "'");
    const json& v = args.at(key);
    if (!v.is_number()) throw DecodeError(seq, std::string("argument '") + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw DecodeError(seq, std::string("argument '") + key + "' must be finite");
    return d;
}

Joint parse_joint(const json& v, std::uint64_t seq) {
    std::optional<Joint> j;
    if (v.is_string()) {
        j = joint_from_name(v.get<std::string>());
    } else if (v.is_number_integer()) {
        j = joint_from_name(std::to_string(v.get<long long>()));
    }
    if (!j) throw DecodeError(seq, "joint must be one of q1, q2, q3");
    return *j;
}

json axis_json(const AxisSnapshot& a) {
    return {{"id", joint_name(a.id)},
            {"position", a.position},
            {"velocity", a.velocity},
            {"setpoint", a.setpoint},
            {"encoder", a.encoder},
            {"home_sensor", a.home_sensor},
            {"far_sensor", a.far_sensor},
            {"fault", fault_name(a.fault)},
            {"homed", a.homed},
            {"homing", homing_stage_name(a.homing)}};
}

}  // namespace

const char* mode_name(SupervisorMode m) {
    switch (m) {
        case SupervisorMode::Init: return "Init";
        case SupervisorMode::Homing: return "Homing";
        case SupervisorMode::Ready: return "Ready";
        case SupervisorMode::Moving: return "Moving";
        case SupervisorMode::Inserting: return "Inserting";
        case SupervisorMode::Fault: return "Fault";
        case SupervisorMode::EStopped: return "EStopped";
    }
    return "?";
}

const char* reason_name(RejectReason r) {
    switch (r) {
        case RejectReason::NotHomed: return "NotHomed";
        case RejectReason::Faulted: return "Faulted";
        case RejectReason::EStopped: return "EStopped";
        case RejectReason::OutOfWorkspace: return "OutOfWorkspace";
        case RejectReason::AlignmentRequired: return "AlignmentRequired";
        case RejectReason::BadArgument: return "BadArgument";
        case RejectReason::Busy: return "Busy";
    }
    return "?";
}

const char* verb_name(const Command& c) {
    struct Visitor {
        const char* operator()(const cmd::Home&) const { return "home"; }
        const char* operator()(const cmd::JogJoint&) const { return "jog_joint"; }
        const char* operator()(const cmd::JogCartesian&) const { return "jog_cartesian"; }
        const char* operator()(const cmd::MoveTo&) const { return "move_to"; }
        const char* operator()(const cmd::SetInstrument&) const { return "set_instrument"; }
        const char* operator()(const cmd::EStop&) const { return "estop"; }
        const char* operator()(const cmd::Reset&) const { return "reset"; }
        const char* operator()(const cmd::Query&) const { return "query"; }
    };
    return std::visit(Visitor{}, c);
}

CommandMessage decode_command(const json& j) {
    if (!j.is_object()) throw DecodeError(std::nullopt, "command must be a JSON object");
    const bool seq_ok = j.contains("seq") && (j.at("seq").is_number_unsigned() ||
                                              (j.at("seq").is_number_integer() && j.at("seq").get<long long>() >= 0));
    if (!seq_ok) throw DecodeError(std::nullopt, "'seq' must be an unsigned integer");
    const auto seq = j.at("seq").get<std::uint64_t>();
    if (!j.contains("verb") || !j.at("verb").is_string()) throw DecodeError(seq, "'verb' must be a string");
    const std::string verb = j.at("verb").get<std::string>();
    const json args = j.contains("args") ? j.at("args") : json::object();
    if (!args.is_object()) throw DecodeError(seq, "'args' must be an object");

    CommandMessage m;
    m.seq = seq;
    if (verb == "home") {
        m.command = cmd::Home{};
    } else if (verb == "estop") {
        m.command = cmd::EStop{};
    } else if (verb == "reset") {
        m.command = cmd::Reset{};
    } else if (verb == "query") {
        m.command = cmd::Query{};
    } else if (verb == "jog_joint") {
        if (!args.contains("joint")) throw DecodeError(seq, "missing argument 'joint'");
        m.command = cmd::JogJoint{parse_joint(args.at("joint"), seq), finite_number(args, "delta", seq)};
    } else if (verb == "jog_cartesian") {
        if (!args.contains("axis") || !args.at("axis").is_string()) throw DecodeError(seq, "'axis' must be x, y or z");
        const std::string axis = args.at("axis").get<std::string>();
        int idx = axis == "x" ? 0 : axis == "y" ? 1 : axis == "z" ? 2 : -1;
        if (idx < 0) throw DecodeError(seq, "'axis' must be x, y or z");
        m.command = cmd::JogCartesian{idx, finite_number(args, "delta", seq)};
    } else if (verb == "move_to") {
        cmd::MoveTo mv;
        mv.goal = {finite_number(args, "x", seq), finite_number(args, "y", seq), finite_number(args, "z", seq)};
        if (args.contains("mode")) {
            const json& mode = args.at("mode");
            std::optional<MotionMode> parsed;
            if (mode.is_string()) parsed = mode_from_name(mode.get<std::string>());
            if (!parsed) throw DecodeError(seq, "'mode' must be sequential or simultaneous");
            mv.mode = *parsed;
        }
        m.command = mv;
    } else if (verb == "set_instrument") {
        cmd::SetInstrument si;
        bool any = false;
        for (std::size_t c = 0; c < kInstrumentChannels; ++c) {
            if (!args.contains(kChannelKeys[c])) continue;
            const double v = finite_number(args, kChannelKeys[c], seq);
            if (v < -1.0 || v > 1.0) throw DecodeError(seq, std::string(kChannelKeys[c]) + " must lie in [-1, 1]");
            si.values[c] = v;
            any = true;
        }
        if (!any) throw DecodeError(seq, "set_instrument needs at least one channel");
        m.command = si;
    } else {
        throw DecodeError(seq, "unknown verb '" + verb + "'");
    }
    return m;
}

CommandMessage decode_command(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw DecodeError(std::nullopt, std::string("malformed JSON: ") + e.what());
    }
    return decode_command(j);
}

json encode_command(const CommandMessage& m) {
    json args = json::object();
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, cmd::JogJoint>) {
                args = {{"joint", joint_name(c.joint)}, {"delta", c.delta}};
            } else if constexpr (std::is_same_v<T, cmd::JogCartesian>) {
                args = {{"axis", std::string(1, static_cast<char>('x' + c.axis))}, {"delta", c.delta}};
            } else if constexpr (std::is_same_v<T, cmd::MoveTo>) {
                args = {{"x", c.goal.x}, {"y", c.goal.y}, {"z", c.goal.z}, {"mode", mode_name(c.mode)}};
            } else if constexpr (std::is_same_v<T, cmd::SetInstrument>) {
                for (std::size_t i = 0; i < kInstrumentChannels; ++i) {
                    if (c.values[i]) args[kChannelKeys[i]] = *c.values[i];
                }
            }
        },
        m.command);
    return {{"seq", m.seq}, {"verb", verb_name(m.command)}, {"args", args}};
}

json encode_ack(const Ack& a) {
    json j = {{"seq", a.seq}, {"status", a.accepted ? "accepted" : "rejected"}};
    if (a.reason) j["reason"] = reason_name(*a.reason);
    if (!a.detail.empty()) j["detail"] = a.detail;
    return j;
}

Ack decode_ack(const json& j) {
    Ack a;
    a.seq = j.at("seq").get<std::uint64_t>();
    a.accepted = j.at("status").get<std::string>() == "accepted";
    if (j.contains("reason")) {
        const std::string r = j.at("reason").get<std::string>();
        for (auto candidate : {RejectReason::NotHomed, RejectReason::Faulted, RejectReason::EStopped,
                               RejectReason::OutOfWorkspace, RejectReason::AlignmentRequired,
                               RejectReason::BadArgument, RejectReason::Busy}) {
            if (r == reason_name(candidate)) a.reason = candidate;
        }
    }
    if (j.contains("detail")) a.detail = j.at("detail").get<std::string>();
    return a;
}

json encode_frame(const TelemetryFrame& f) {
    json axes = json::array();
    for (const auto& a : f.axes) axes.push_back(axis_json(a));
    json instrument = json::object();
    for (std::size_t c = 0; c < kInstrumentChannels; ++c) instrument[kChannelKeys[c]] = f.instrument[c];
    return {{"tick", f.tick},
            {"time", f.time},
            {"heartbeat", f.heartbeat},
            {"joints", {{"q1", f.joints.q1}, {"q2", f.joints.q2}, {"q3", f.joints.q3}}},
            {"velocities", {{"q1", f.velocities.q1}, {"q2", f.velocities.q2}, {"q3", f.velocities.q3}}},
            {"tip", {{"x", f.tip.x}, {"y", f.tip.y}, {"z", f.tip.z}}},
            {"axes", axes},
            {"mode", mode_name(f.mode)},
            {"aligned", f.aligned},
            {"progress", f.progress},
            {"instrument", instrument}};
}

json encode_geometry(const RobotGeometry& g) {
    json joints = json::object();
    for (Joint j : kAllJoints) {
        const JointLimits& l = g.limit(j);
        joints[joint_name(j)] = {{"min", l.min}, {"max", l.max}, {"v_max", l.v_max}, {"a_max", l.a_max}};
    }
    return {{"rail_radius", g.rail_radius},
            {"tool_offset", g.tool_offset},
            {"rcm", {g.rcm.x, g.rcm.y, g.rcm.z}},
            {"joints", joints}};
}

}  // namespace rcm
