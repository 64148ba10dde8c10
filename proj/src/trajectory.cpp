#include "rcm/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace rcm {

namespace {

constexpr double kTimeMergeEps = 1e-12;

double sign_of(double v) { return v < 0.0 ? -1.0 : 1.0; }

void format_value(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    out << buf;
}

}  // namespace

JointState JointProfile::at(double t) const {
    const double T = duration();
    if (t < 0.0) {
        return {from, 0.0, 0.0};
    }
    if (t >= T) {
        return {to, 0.0, 0.0};
    }
    const double s = sign_of(distance());
    if (t < t_accel) {
        return {from + s * 0.5 * a_max * t * t, s * a_max * t, s * a_max};
    }
    if (t < t_accel + t_cruise) {
        const double d_accel = 0.5 * a_max * t_accel * t_accel;
        return {from + s * (d_accel + v_peak * (t - t_accel)), s * v_peak, 0.0};
    }
    const double remaining = T - t;
    return {to - s * 0.5 * a_max * remaining * remaining, s * a_max * remaining, -s * a_max};
}

JointProfile plan_trapezoid(double from, double to, double v_max, double a_max, Joint joint) {
    if (!(v_max > 0.0) || !(a_max > 0.0) || !std::isfinite(v_max) || !std::isfinite(a_max)) {
        throw InvalidLimits("trapezoid requires v_max > 0 and a_max > 0");
    }
    JointProfile p;
    p.joint = joint;
    p.from = from;
    p.to = to;
    p.v_max = v_max;
    p.a_max = a_max;
    const double D = std::abs(to - from);
    if (D == 0.0) {
        return p;
    }
    if (D >= v_max * v_max / a_max) {
        p.v_peak = v_max;
        p.t_accel = v_max / a_max;
        p.t_cruise = (D - v_max * v_max / a_max) / v_max;
    } else {
        p.v_peak = std::sqrt(D * a_max);
        p.t_accel = p.v_peak / a_max;
        p.t_cruise = 0.0;
    }
    p.t_decel = p.t_accel;
    return p;
}

JointProfile stretch_to(const JointProfile& profile, double duration) {
    if (duration < profile.duration()) {
        throw std::invalid_argument("cannot shorten a trapezoid below its minimum duration");
    }
    const double D = std::abs(profile.distance());
    if (D == 0.0 || duration == profile.duration()) {
        return profile;
    }
    const double a = profile.a_max;
    const double disc = std::max(0.0, a * a * duration * duration - 4.0 * a * D);
    // Smaller root of v^2 - aTv + aD = 0, written without cancellation.
    const double v = 2.0 * a * D / (a * duration + std::sqrt(disc));
    JointProfile out = profile;
    out.v_peak = v;
    out.t_accel = v / a;
    out.t_decel = out.t_accel;
    out.t_cruise = std::max(0.0, duration - 2.0 * out.t_accel);
    return out;
}

const char* mode_name(MotionMode m) {
    return m == MotionMode::Sequential ? "sequential" : "simultaneous";
}

std::optional<MotionMode> mode_from_name(const std::string& name) {
    if (name == "sequential" || name == "Sequential") return MotionMode::Sequential;
    if (name == "simultaneous" || name == "Simultaneous") return MotionMode::Simultaneous;
    return std::nullopt;
}

double MotionPhase::duration() const {
    double d = 0.0;
    for (const auto& p : profiles) d = std::max(d, p.duration());
    return d;
}

bool MotionPhase::moves(Joint j) const {
    return std::any_of(profiles.begin(), profiles.end(),
                       [j](const JointProfile& p) { return p.joint == j && p.distance() != 0.0; });
}

double MotionPlan::duration() const { return phases.empty() ? 0.0 : phases.back().end(); }

std::array<JointState, kJointCount> MotionPlan::at(double t) const {
    std::array<JointState, kJointCount> out{};
    for (Joint j : kAllJoints) out[static_cast<std::size_t>(j)].position = start[j];
    for (const auto& phase : phases) {
        for (const auto& p : phase.profiles) {
            auto& slot = out[static_cast<std::size_t>(p.joint)];
            if (t >= phase.start) {
                slot = p.at(t - phase.start);
            }
        }
    }
    return out;
}

MotionPlan plan_motion(const JointVector& from, const JointVector& to, MotionMode mode, const RobotGeometry& geom) {
    for (const JointVector* q : {&from, &to}) {
        const ValidationReport report = validate_joints(*q, geom);
        if (!report.ok()) throw OutOfWorkspace(*q, report);
    }
    auto profile = [&](Joint j) {
        const JointLimits& l = geom.limit(j);
        return plan_trapezoid(from[j], to[j], l.v_max, l.a_max, j);
    };

    MotionPlan plan;
    plan.mode = mode;
    plan.start = from;
    plan.end = to;
    if (mode == MotionMode::Sequential) {
        double t = 0.0;
        for (Joint j : kAllJoints) {
            MotionPhase phase;
            phase.start = t;
            phase.profiles.push_back(profile(j));
            t = phase.end();
            plan.phases.push_back(std::move(phase));
        }
        return plan;
    }

    MotionPhase orient;
    JointProfile p1 = profile(Joint::q1);
    JointProfile p2 = profile(Joint::q2);
    const double sync = std::max(p1.duration(), p2.duration());
    orient.profiles.push_back(stretch_to(p1, sync));
    orient.profiles.push_back(stretch_to(p2, sync));

    MotionPhase insert;
    insert.start = orient.end();
    insert.profiles.push_back(profile(Joint::q3));

    plan.phases.push_back(std::move(orient));
    plan.phases.push_back(std::move(insert));
    return plan;
}

std::vector<TrajectorySample> sample(const MotionPlan& plan, double dt) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw InvalidStep("sample step must be positive");
    }
    const double T = plan.duration();
    std::vector<double> times;
    const auto steps = static_cast<long long>(std::floor(T / dt));
    times.reserve(static_cast<std::size_t>(steps) + 16);
    for (long long k = 0; k <= steps; ++k) times.push_back(static_cast<double>(k) * dt);
    for (const auto& phase : plan.phases) {
        times.push_back(phase.start);
        times.push_back(phase.end());
        for (const auto& p : phase.profiles) {
            times.push_back(phase.start + p.t_accel);
            times.push_back(phase.start + p.t_accel + p.t_cruise);
            times.push_back(phase.start + p.duration());
        }
    }
    times.push_back(T);
    std::sort(times.begin(), times.end());

    std::vector<TrajectorySample> out;
    out.reserve(times.size());
    for (double t : times) {
        if (t > T) continue;
        if (!out.empty() && t - out.back().t < kTimeMergeEps) continue;
        out.push_back({t, plan.at(t)});
    }
    return out;
}

void export_csv(const std::vector<TrajectorySample>& samples, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& s : samples) {
        format_value(out, s.t);
        for (const auto& j : s.joints) {
            out << ',';
            format_value(out, j.position);
            out << ',';
            format_value(out, j.velocity);
            out << ',';
            format_value(out, j.acceleration);
        }
        out << '\n';
    }
    out.flush();
    if (!out) {
        throw CsvError("failed writing trajectory CSV");
    }
}

std::vector<TrajectorySample> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) {
        throw CsvError("missing or unexpected CSV header");
    }
    std::vector<TrajectorySample> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::array<double, 10> fields{};
        std::istringstream row(line);
        std::string cell;
        std::size_t n = 0;
        while (std::getline(row, cell, ',')) {
            if (n >= fields.size()) throw CsvError("too many columns on line " + std::to_string(lineno));
            char* end = nullptr;
            fields[n] = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') {
                throw CsvError("bad number on line " + std::to_string(lineno));
            }
            ++n;
        }
        if (n != fields.size()) throw CsvError("too few columns on line " + std::to_string(lineno));
        TrajectorySample s;
        s.t = fields[0];
        for (std::size_t j = 0; j < kJointCount; ++j) {
            s.joints[j] = {fields[1 + 3 * j], fields[2 + 3 * j], fields[3 + 3 * j]};
        }
        out.push_back(s);
    }
    return out;
}

}  // namespace rcm
