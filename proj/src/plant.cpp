#include "rcm/plant.hpp"

#include <algorithm>
#include <cmath>

namespace rcm {

namespace {

// Relative slack on the per-tick reachability test, absorbs rounding in e/dt.
constexpr double kReachSlack = 1e-9;
// Setpoint moves up to this multiple of v_max*dt count as a stream (quantized setpoints jitter a little).
constexpr double kStreamFactor = 2.0;

double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

}  // namespace

const char* fault_name(AxisFault f) {
    switch (f) {
        case AxisFault::None: return "none";
        case AxisFault::LimitFault: return "limit";
        case AxisFault::HomingTimeout: return "homing_timeout";
    }
    return "?";
}

const char* homing_stage_name(HomingStage s) {
    switch (s) {
        case HomingStage::Idle: return "idle";
        case HomingStage::Seek: return "seek";
        case HomingStage::Backoff: return "backoff";
        case HomingStage::Zero: return "zero";
    }
    return "?";
}

const char* channel_name(InstrumentChannel c) {
    switch (c) {
        case InstrumentChannel::Pitch: return "pitch";
        case InstrumentChannel::Yaw: return "yaw";
        case InstrumentChannel::Roll: return "roll";
        case InstrumentChannel::Grasp: return "grasp";
    }
    return "?";
}

JointVector PlantSnapshot::positions() const {
    return {axes[0].position, axes[1].position, axes[2].position};
}

JointVector PlantSnapshot::setpoints() const {
    return {axes[0].setpoint, axes[1].setpoint, axes[2].setpoint};
}

bool PlantSnapshot::all_homed() const {
    return std::all_of(axes.begin(), axes.end(), [](const AxisSnapshot& a) { return a.homed; });
}

bool PlantSnapshot::any_fault() const {
    return std::any_of(axes.begin(), axes.end(), [](const AxisSnapshot& a) { return a.fault != AxisFault::None; });
}

bool PlantSnapshot::any_homing() const {
    return std::any_of(axes.begin(), axes.end(), [](const AxisSnapshot& a) { return a.homing != HomingStage::Idle; });
}

bool PlantSnapshot::at_rest(Joint j) const {
    const AxisSnapshot& a = axis(j);
    return a.velocity == 0.0 && a.position == a.setpoint;
}

void VirtualPlant::Axis::stop() {
    velocity = 0.0;
    feedforward = 0.0;
    setpoint = position;
    last_setpoint = position;
    homing = HomingStage::Idle;
    homing_travel = 0.0;
}

VirtualPlant::VirtualPlant(PlantConfig config) : config_(std::move(config)) {
    config_.geometry.validate();
    if (!(config_.dt > 0.0)) throw std::invalid_argument("plant tick must be positive");
    for (Joint j : kAllJoints) {
        Axis& a = axis(j);
        a.id = j;
        a.limits = config_.geometry.limit(j);
        a.resolution = config_.encoder_resolution[static_cast<std::size_t>(j)];
        a.position = config_.initial[j];
        a.setpoint = a.position;
        a.last_setpoint = a.position;
    }
}

void VirtualPlant::set_setpoint(Joint j, double value) {
    if (estopped_ || !std::isfinite(value)) return;
    axis(j).setpoint = value;
}

void VirtualPlant::set_instrument_target(InstrumentChannel c, double value) {
    if (estopped_ || !std::isfinite(value)) return;
    instrument_target_[static_cast<std::size_t>(c)] = std::clamp(value, -1.0, 1.0);
}

void VirtualPlant::home(Joint j) {
    Axis& a = axis(j);
    if (estopped_) throw HomingError("plant is e-stopped");
    if (a.fault != AxisFault::None) throw HomingError(std::string("axis ") + joint_name(j) + " is faulted");
    a.homed = false;
    a.homing_travel = 0.0;
    a.homing = a.home_sensor() ? HomingStage::Backoff : HomingStage::Seek;
}

void VirtualPlant::estop() {
    halt();
    estopped_ = true;
}

void VirtualPlant::halt() {
    for (Axis& a : axes_) a.stop();
    instrument_target_ = instrument_;
}

void VirtualPlant::reset() {
    estopped_ = false;
    for (Axis& a : axes_) {
        a.fault = AxisFault::None;
        a.stop();
    }
}

void VirtualPlant::set_sensor_enabled(Joint j, bool enabled) { axis(j).sensors_enabled = enabled; }

void VirtualPlant::drive_velocity(Axis& a, double target) {
    const double step = a.limits.a_max * config_.dt;
    a.velocity = std::clamp(target, a.velocity - step, a.velocity + step);
    a.position += a.velocity * config_.dt;
}

void VirtualPlant::step_tracking(Axis& a) {
    const double dt = config_.dt;
    const double V = a.limits.v_max;
    const double A = a.limits.a_max;
    const double Adt = A * dt;

    // Setpoint rate as feedforward; a jump well beyond one tick at v_max is a step command.
    double v_ff = (a.setpoint - a.last_setpoint) / dt;
    v_ff = std::abs(v_ff) > V * kStreamFactor ? 0.0 : std::clamp(v_ff, -V, V);

    const double e = a.setpoint - a.position;
    const double e_rel = e - v_ff * dt;  // error relative to a target moving at v_ff
    const double w = a.velocity - a.feedforward;
    a.feedforward = v_ff;

    const double w_land = e_rel / dt;
    const double v_land = e / dt;
    const double slack = 1.0 + kReachSlack;
    if (std::abs(w_land - w) <= Adt * slack && std::abs(w_land) <= Adt * slack && std::abs(v_land) <= V * slack &&
        std::abs(v_land - a.velocity) <= Adt * slack) {
        a.velocity = v_land;
        a.position = a.setpoint;
        return;
    }

    // Largest relative speed w from which a discrete stop (w dt, then w - Adt, w - 2Adt, ...)
    // still ends on the target. Covered distance is linear in w between multiples of Adt.
    const double dist = std::abs(e_rel);
    const double quantum = Adt * dt;
    const double k = std::floor(0.5 * (-1.0 + std::sqrt(1.0 + 8.0 * dist / quantum)));
    const double w_allow = std::min((dist / dt + Adt * k * (k + 1.0) / 2.0) / (k + 1.0), (k + 1.0) * Adt);
    const double w_new = std::clamp(sign_of(e_rel) * w_allow, w - Adt, w + Adt);
    const double v_new = std::clamp(std::clamp(v_ff + w_new, a.velocity - Adt, a.velocity + Adt), -V, V);
    a.velocity = v_new;
    a.position += v_new * dt;
}

void VirtualPlant::step_homing(Axis& a) {
    const double seek = config_.homing_seek_fraction * a.limits.v_max;
    const double backoff = config_.homing_backoff_fraction * a.limits.v_max;
    switch (a.homing) {
        case HomingStage::Idle:
            return;
        case HomingStage::Seek: {
            const double before = a.position;
            drive_velocity(a, -seek);
            a.homing_travel += std::abs(a.position - before);
            if (a.home_sensor()) {
                a.homing = HomingStage::Backoff;
            } else if (a.homing_travel > config_.homing_travel_factor * (a.limits.max - a.limits.min)) {
                a.fault = AxisFault::HomingTimeout;
                a.stop();
            }
            return;
        }
        case HomingStage::Backoff:
            drive_velocity(a, backoff);
            if (!a.home_sensor() && a.velocity > 0.0) a.homing = HomingStage::Zero;
            return;
        case HomingStage::Zero:
            drive_velocity(a, 0.0);
            if (a.velocity == 0.0) {
                // The sensor edge defines the joint minimum.
                a.position = a.limits.min;
                a.homed = true;
                a.stop();
            }
            return;
    }
}

void VirtualPlant::check_limits(Axis& a) {
    if (a.far_sensor() && a.velocity > 0.0) {
        a.position = std::max(a.position - a.velocity * config_.dt, a.limits.max);
        a.fault = AxisFault::LimitFault;
        a.stop();
    } else if (a.home_sensor() && a.velocity < 0.0) {
        a.position = std::min(a.position - a.velocity * config_.dt, a.limits.min);
        a.fault = AxisFault::LimitFault;
        a.stop();
    }
}

PlantSnapshot VirtualPlant::tick() {
    ++tick_;
    if (!estopped_) {
        for (Axis& a : axes_) {
            if (a.fault != AxisFault::None) {
                a.velocity = 0.0;
                a.feedforward = 0.0;
            } else if (a.homing != HomingStage::Idle) {
                step_homing(a);
            } else {
                step_tracking(a);
                check_limits(a);
            }
            a.last_setpoint = a.setpoint;
        }
        const double slew = config_.instrument_slew * config_.dt;
        for (std::size_t c = 0; c < kInstrumentChannels; ++c) {
            instrument_[c] = std::clamp(instrument_target_[c], instrument_[c] - slew, instrument_[c] + slew);
        }
    }
    return snapshot();
}

PlantSnapshot VirtualPlant::snapshot() const {
    PlantSnapshot s;
    s.tick = tick_;
    s.estopped = estopped_;
    s.instrument = instrument_;
    for (std::size_t i = 0; i < kJointCount; ++i) {
        const Axis& a = axes_[i];
        AxisSnapshot& o = s.axes[i];
        o.id = a.id;
        o.position = a.position;
        o.velocity = a.velocity;
        o.setpoint = a.setpoint;
        o.encoder = std::llround(a.position * a.resolution);
        o.home_sensor = a.home_sensor();
        o.far_sensor = a.far_sensor();
        o.fault = a.fault;
        o.homed = a.homed;
        o.homing = a.homing;
    }
    return s;
}

}  // namespace rcm
