#include "rcm/service.hpp"

#include <algorithm>
#include <cmath>

namespace rcm {

using nlohmann::json;

namespace {

bool idle_mode(SupervisorMode m) {
    return m != SupervisorMode::Moving && m != SupervisorMode::Inserting && m != SupervisorMode::Homing;
}

}  // namespace

ControlService::ControlService(ServiceConfig config) : config_(std::move(config)), plant_(config_.plant) {
    const PlantSnapshot snap = plant_.snapshot();
    for (Joint j : kAllJoints) {
        const auto i = static_cast<std::size_t>(j);
        held_[i] = to_fixed(j, snap.axis(j).setpoint);
        applied_[i] = held_[i];
        registers_.set_i32(reg::setpoint(j), held_[i]);
    }
    publish_registers(snap);
    latest_ = make_frame(snap);
}

std::optional<Ack> ControlService::motion_precheck(std::uint64_t seq) const {
    if (!plant_.snapshot().all_homed()) return Ack::reject(seq, RejectReason::NotHomed, "axes are not homed");
    if (mode_ != SupervisorMode::Ready) {
        return Ack::reject(seq, RejectReason::Busy, std::string("supervisor is ") + mode_name(mode_));
    }
    return std::nullopt;
}

Ack ControlService::handle_command(const CommandMessage& msg) {
    const std::uint64_t seq = msg.seq;
    const Command& c = msg.command;

    if (std::holds_alternative<cmd::EStop>(c)) {
        plant_.estop();
        drop_plan();
        homing_stage_ = 0;
        mode_ = SupervisorMode::EStopped;
        return Ack::accept(seq);
    }
    if (std::holds_alternative<cmd::Query>(c)) return Ack::accept(seq);
    if (std::holds_alternative<cmd::Reset>(c)) {
        if (mode_ == SupervisorMode::EStopped || mode_ == SupervisorMode::Fault) {
            plant_.reset();
            drop_plan();
            homing_stage_ = 0;
            mode_ = plant_.snapshot().all_homed() ? SupervisorMode::Ready : SupervisorMode::Init;
        }
        return Ack::accept(seq);
    }
    if (mode_ == SupervisorMode::EStopped) return Ack::reject(seq, RejectReason::EStopped, "reset required");
    if (mode_ == SupervisorMode::Fault) return Ack::reject(seq, RejectReason::Faulted, "reset required");

    if (const auto* si = std::get_if<cmd::SetInstrument>(&c)) {
        for (std::size_t i = 0; i < kInstrumentChannels; ++i) {
            if (si->values[i]) plant_.set_instrument_target(static_cast<InstrumentChannel>(i), *si->values[i]);
        }
        return Ack::accept(seq);
    }

    if (std::holds_alternative<cmd::Home>(c)) {
        if (!idle_mode(mode_)) return Ack::reject(seq, RejectReason::Busy, std::string("supervisor is ") + mode_name(mode_));
        // Retract the instrument first, then home the orienting joints.
        plant_.home(Joint::q3);
        homing_stage_ = 1;
        goal_.reset();
        progress_ = 0.0;
        mode_ = SupervisorMode::Homing;
        return Ack::accept(seq);
    }

    if (auto rejected = motion_precheck(seq)) return *rejected;
    const PlantSnapshot snap = plant_.snapshot();
    const JointVector here = snap.positions();

    if (const auto* jog = std::get_if<cmd::JogJoint>(&c)) {
        const double limit = config_.supervisor.max_joint_jog[static_cast<std::size_t>(jog->joint)];
        if (jog->delta == 0.0 || std::abs(jog->delta) > limit) {
            return Ack::reject(seq, RejectReason::BadArgument, "jog step must be nonzero and within the jog bound");
        }
        if (jog->joint == Joint::q3 && !aligned_) {
            return Ack::reject(seq, RejectReason::AlignmentRequired, "instrument axis not aligned with a goal");
        }
        JointVector target = here;
        target[jog->joint] = geometry().limit(jog->joint).clamp(here[jog->joint] + jog->delta);
        MotionPlan plan;
        plan.mode = MotionMode::Sequential;
        plan.start = here;
        plan.end = target;
        const JointLimits& l = plan_geometry().limit(jog->joint);
        plan.phases.push_back({0.0, {plan_trapezoid(here[jog->joint], target[jog->joint], l.v_max, l.a_max, jog->joint)}});
        return start_plan(seq, std::move(plan), goal_);
    }
    if (const auto* jog = std::get_if<cmd::JogCartesian>(&c)) {
        if (jog->delta == 0.0 || std::abs(jog->delta) > config_.supervisor.max_cartesian_jog) {
            return Ack::reject(seq, RejectReason::BadArgument, "jog step must be nonzero and within the jog bound");
        }
        Point3 goal = forward_geometric(here, geometry());
        (jog->axis == 0 ? goal.x : jog->axis == 1 ? goal.y : goal.z) += jog->delta;
        return plan_to_goal(seq, goal, MotionMode::Simultaneous);
    }
    if (const auto* mv = std::get_if<cmd::MoveTo>(&c)) {
        return plan_to_goal(seq, mv->goal, mv->mode);
    }
    return Ack::reject(seq, RejectReason::BadArgument, "unsupported command");
}

RobotGeometry ControlService::plan_geometry() const {
    RobotGeometry g = geometry();
    for (JointLimits& l : g.limits) {
        l.v_max *= config_.supervisor.tracking_margin;
        l.a_max *= config_.supervisor.tracking_margin;
    }
    return g;
}

Ack ControlService::plan_to_goal(std::uint64_t seq, const Point3& goal, MotionMode mode) {
    const JointVector here = plant_.snapshot().positions();
    try {
        const InverseSolution sol = inverse_geometric(goal, geometry(), here.q1);
        return start_plan(seq, plan_motion(here, sol.joints, mode, plan_geometry()), goal);
    } catch (const DegenerateInput& e) {
        return Ack::reject(seq, RejectReason::BadArgument, e.what());
    } catch (const OutOfWorkspace& e) {
        return Ack::reject(seq, RejectReason::OutOfWorkspace, e.what());
    }
}

Ack ControlService::start_plan(std::uint64_t seq, MotionPlan plan, std::optional<Point3> goal) {
    goal_ = goal;
    plan_ = std::move(plan);
    phase_index_ = 0;
    phase_ticks_ = 0;
    plan_ticks_ = 0;
    progress_ = 0.0;
    mode_ = plan_->phases.front().moves(Joint::q3) ? SupervisorMode::Inserting : SupervisorMode::Moving;
    return Ack::accept(seq);
}

std::optional<RegisterException> ControlService::read_registers(std::uint16_t addr, std::uint16_t count,
                                                                std::vector<std::uint16_t>& out) const {
    return registers_.read(addr, count, out);
}

std::optional<RegisterException> ControlService::write_registers(std::uint16_t addr,
                                                                 std::span<const std::uint16_t> values) {
    return registers_.write(addr, values);
}

void ControlService::consume_command_word() {
    const auto word = static_cast<reg::CommandWord>(registers_.at(reg::kCommand));
    if (word == reg::CommandWord::None) return;
    registers_.set_u16(reg::kCommand, 0);
    CommandMessage m;
    switch (word) {
        case reg::CommandWord::Home: m.command = cmd::Home{}; break;
        case reg::CommandWord::EStop: m.command = cmd::EStop{}; break;
        case reg::CommandWord::Reset: m.command = cmd::Reset{}; break;
        case reg::CommandWord::None: return;
    }
    (void)handle_command(m);
}

bool ControlService::commanded(Joint j) const {
    if (!plan_ || phase_index_ >= plan_->phases.size()) return false;
    const auto& profiles = plan_->phases[phase_index_].profiles;
    return std::any_of(profiles.begin(), profiles.end(), [j](const JointProfile& p) { return p.joint == j; });
}

void ControlService::write_setpoints() {
    if (plan_ && phase_index_ < plan_->phases.size()) {
        ++phase_ticks_;
        ++plan_ticks_;
    }
    const double tau = static_cast<double>(phase_ticks_) * plant_.dt();
    for (Joint j : kAllJoints) {
        const auto i = static_cast<std::size_t>(j);
        if (!commanded(j)) {
            // Overwrites anything a register client put into the setpoint block.
            registers_.set_i32(reg::setpoint(j), held_[i]);
            continue;
        }
        for (const auto& p : plan_->phases[phase_index_].profiles) {
            if (p.joint != j) continue;
            const std::int32_t raw = to_fixed(j, p.at(tau).position);
            registers_.set_i32(reg::setpoint(j), raw);
            if (raw != applied_[i]) {
                plant_.set_setpoint(j, from_fixed(j, raw));
                applied_[i] = raw;
            }
        }
    }
}

TelemetryFrame ControlService::step() {
    consume_command_word();
    write_setpoints();
    const PlantSnapshot after = plant_.tick();
    update_after_tick(after);
    const PlantSnapshot snap = plant_.snapshot();
    publish_registers(snap);
    latest_ = make_frame(snap);
    return latest_;
}

bool ControlService::compute_alignment(const PlantSnapshot& snap) const {
    if (!goal_ || !snap.at_rest(Joint::q1) || !snap.at_rest(Joint::q2)) return false;
    JointVector probe = snap.positions();
    probe.q3 = geometry().q3_at_rcm() + 1.0;
    const Point3 axis = forward_geometric(probe, geometry()) - geometry().rcm;  // unit insertion direction
    const Point3 to_goal = *goal_ - geometry().rcm;
    return axis.dot(to_goal) > 0.0 && axis.cross(to_goal).norm() <= config_.supervisor.alignment_tolerance;
}

void ControlService::enter_fault() {
    plant_.halt();
    drop_plan();
    homing_stage_ = 0;
    mode_ = SupervisorMode::Fault;
}

void ControlService::drop_plan() {
    plan_.reset();
    phase_index_ = 0;
    phase_ticks_ = 0;
}

void ControlService::advance_plan(const PlantSnapshot& snap) {
    while (plan_) {
        const MotionPhase& phase = plan_->phases[phase_index_];
        const double tau = static_cast<double>(phase_ticks_) * plant_.dt();
        if (tau < phase.duration()) return;
        for (const auto& p : phase.profiles) {
            if (!snap.at_rest(p.joint)) return;
        }
        ++phase_index_;
        phase_ticks_ = 0;
        if (phase_index_ == plan_->phases.size()) {
            drop_plan();
            progress_ = 1.0;
            mode_ = SupervisorMode::Ready;
            return;
        }
        if (plan_->phases[phase_index_].moves(Joint::q3)) {
            if (!aligned_) {
                enter_fault();
                return;
            }
            mode_ = SupervisorMode::Inserting;
        } else {
            mode_ = SupervisorMode::Moving;
        }
    }
}

void ControlService::update_after_tick(const PlantSnapshot& snap) {
    if (mode_ != SupervisorMode::EStopped && mode_ != SupervisorMode::Fault && snap.any_fault()) {
        enter_fault();
    }
    if (mode_ == SupervisorMode::Homing) {
        if (homing_stage_ == 1 && snap.axis(Joint::q3).homed && snap.axis(Joint::q3).homing == HomingStage::Idle) {
            plant_.home(Joint::q1);
            plant_.home(Joint::q2);
            homing_stage_ = 2;
        } else if (homing_stage_ == 2 && snap.all_homed() && !snap.any_homing()) {
            homing_stage_ = 0;
            mode_ = SupervisorMode::Ready;
        }
    }
    aligned_ = compute_alignment(snap);
    if (plan_) {
        advance_plan(snap);
        if (plan_) {
            const double total = plan_->duration();
            progress_ = total > 0.0 ? std::min(1.0, static_cast<double>(plan_ticks_) * plant_.dt() / total) : 1.0;
        }
    }
    // Idle joints hold wherever the plant currently holds them.
    const PlantSnapshot now = plant_.snapshot();
    for (Joint j : kAllJoints) {
        if (commanded(j)) continue;
        const auto i = static_cast<std::size_t>(j);
        held_[i] = to_fixed(j, now.axis(j).setpoint);
        applied_[i] = held_[i];
    }
}

void ControlService::publish_registers(const PlantSnapshot& snap) {
    registers_.set_u32(reg::kHeartbeat, heartbeat_++);
    for (Joint j : kAllJoints) registers_.set_i32(reg::position(j), to_fixed(j, snap.axis(j).position));
    std::uint16_t status = 0;
    if (snap.all_homed()) status |= reg::kHomedAll;
    if (snap.any_fault()) status |= reg::kFaultAny;
    if (snap.estopped) status |= reg::kEStop;
    if (aligned_) status |= reg::kAligned;
    status |= static_cast<std::uint16_t>(static_cast<std::uint16_t>(mode_) << reg::kModeShift);
    registers_.set_u16(reg::kStatus, status);
}

TelemetryFrame ControlService::make_frame(const PlantSnapshot& snap) const {
    TelemetryFrame f;
    f.tick = snap.tick;
    f.time = static_cast<double>(snap.tick) * plant_.dt();
    f.heartbeat = registers_.u32(reg::kHeartbeat);
    f.joints = snap.positions();
    f.velocities = {snap.axes[0].velocity, snap.axes[1].velocity, snap.axes[2].velocity};
    f.tip = forward_geometric(f.joints, geometry());
    f.axes = snap.axes;
    f.mode = mode_;
    f.aligned = aligned_;
    f.progress = progress_;
    f.instrument = snap.instrument;
    return f;
}

json encode_log_entry(const LogEntry& e) {
    json j = {{"tick", e.tick}};
    if (e.command) {
        j["command"] = encode_command(*e.command);
    } else {
        j["registers"] = {{"addr", e.addr}, {"values", e.values}};
    }
    return j;
}

LogEntry decode_log_entry(const json& j) {
    LogEntry e;
    e.tick = j.at("tick").get<std::uint64_t>();
    if (j.contains("command")) {
        e.command = decode_command(j.at("command"));
    } else {
        e.addr = j.at("registers").at("addr").get<std::uint16_t>();
        e.values = j.at("registers").at("values").get<std::vector<std::uint16_t>>();
    }
    return e;
}

ReplayResult replay(const ServiceConfig& config, std::span<const LogEntry> log, std::uint64_t max_ticks) {
    ReplayResult out;
    out.acks = replay(
        config, log, [&out](const std::string& frame) { out.telemetry.push_back(frame); }, max_ticks);
    return out;
}

std::vector<std::string> replay(const ServiceConfig& config, std::span<const LogEntry> log,
                                const std::function<void(const std::string&)>& on_frame, std::uint64_t max_ticks) {
    ControlService service(config);
    std::vector<std::string> acks;
    std::size_t next = 0;
    const std::uint64_t last_tick = log.empty() ? 0 : log.back().tick;
    std::uint64_t extra = 0;
    while (true) {
        const std::uint64_t now = service.latest().tick;
        while (next < log.size() && log[next].tick <= now) {
            const LogEntry& e = log[next++];
            if (e.command) {
                acks.push_back(encode_ack(service.handle_command(*e.command)).dump());
            } else {
                const auto err = service.write_registers(e.addr, e.values);
                acks.push_back(json{{"registers", e.addr}, {"status", err ? exception_name(*err) : "ok"}}.dump());
            }
        }
        if (next >= log.size() && now >= last_tick && idle_mode(service.mode())) break;
        if (now >= last_tick && ++extra > max_ticks) break;
        on_frame(encode_frame(service.step()).dump());
    }
    return acks;
}

}  // namespace rcm
