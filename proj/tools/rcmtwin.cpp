#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <pthread.h>

#include "rcm/config.hpp"
#include "rcm/host.hpp"
#include "rcm/kinematics.hpp"
#include "rcm/service.hpp"
#include "rcm/trajectory.hpp"

using namespace rcm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int cmd_fk(const AppConfig& cfg, const std::vector<double>& q) {
    const Point3 p = forward_geometric({q[0], q[1], q[2]}, cfg.service.plant.geometry);
    std::printf("%.6f %.6f %.6f\n", p.x, p.y, p.z);
    return kExitOk;
}

int cmd_ik(const AppConfig& cfg, const std::vector<double>& p, std::optional<double> hint) {
    const InverseSolution s = inverse_geometric({p[0], p[1], p[2]}, cfg.service.plant.geometry, hint);
    std::printf("%.9f %.9f %.9f\n", s.joints.q1, s.joints.q2, s.joints.q3);
    if (s.singular) std::fprintf(stderr, "warning: singular configuration, q1 chosen by hint\n");
    return kExitOk;
}

int cmd_plan(const AppConfig& cfg, const std::vector<double>& from, const std::vector<double>& to,
             const std::string& mode_text, double dt, const std::string& out) {
    const RobotGeometry& g = cfg.service.plant.geometry;
    const MotionMode mode = *mode_from_name(mode_text);
    const JointVector qa = inverse_geometric({from[0], from[1], from[2]}, g).joints;
    const JointVector qb = inverse_geometric({to[0], to[1], to[2]}, g, qa.q1).joints;
    const MotionPlan plan = plan_motion(qa, qb, mode, g);
    const auto samples = sample(plan, dt);

    if (out.empty() || out == "-") {
        export_csv(samples, std::cout);
    } else {
        std::ofstream f(out);
        if (!f) throw std::runtime_error("cannot open '" + out + "' for writing");
        export_csv(samples, f);
    }
    std::FILE* summary = (out.empty() || out == "-") ? stderr : stdout;
    std::fprintf(summary, "mode %s\n", mode_name(mode));
    for (std::size_t i = 0; i < plan.phases.size(); ++i) {
        const MotionPhase& ph = plan.phases[i];
        std::string joints;
        for (const auto& p : ph.profiles) joints += (joints.empty() ? "" : ",") + std::string(joint_name(p.joint));
        std::fprintf(summary, "phase %zu %s start %.6f duration %.6f\n", i + 1, joints.c_str(), ph.start, ph.duration());
    }
    std::fprintf(summary, "total %.6f\n", plan.duration());
    return kExitOk;
}

int cmd_serve(const AppConfig& cfg, const std::string& record) {
    // Block termination signals before any thread starts so only sigwait sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    ServiceHost host(cfg, record.empty() ? std::nullopt : std::optional<std::string>(record));
    host.start();
    std::fprintf(stderr, "rcmtwin: commands on %s:%u, http/ws on %u, modbus on %u\n", cfg.host.bind.c_str(),
                 host.command_port(), host.http_port(), host.modbus_port());
    int sig = 0;
    sigwait(&signals, &sig);
    std::fprintf(stderr, "rcmtwin: signal %d, shutting down\n", sig);
    host.stop();
    return kExitOk;
}

int cmd_replay(const AppConfig& cfg, const std::string& log_path, const std::string& out) {
    std::ifstream in(log_path);
    if (!in) throw std::runtime_error("cannot open command log '" + log_path + "'");
    std::vector<LogEntry> log;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (line.empty()) continue;
        try {
            log.push_back(decode_log_entry(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw std::runtime_error("command log line " + std::to_string(line_no) + ": " + e.what());
        }
        if (log.size() > 1 && log.back().tick < log[log.size() - 2].tick) {
            throw std::runtime_error("command log line " + std::to_string(line_no) + ": ticks go backwards");
        }
    }
    std::ofstream file;
    if (!out.empty() && out != "-") {
        file.open(out);
        if (!file) throw std::runtime_error("cannot open '" + out + "' for writing");
    }
    std::ostream& os = file.is_open() ? static_cast<std::ostream&>(file) : std::cout;
    const auto acks = replay(cfg.service, log, [&os](const std::string& frame) { os << frame << '\n'; });
    os.flush();
    for (const auto& ack : acks) std::cerr << ack << '\n';
    if (!os) throw std::runtime_error("failed writing telemetry");
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Digital twin of a 3-DOF spherical remote-center-of-motion robot"};
    app.require_subcommand(1);
    std::optional<std::string> config_path;
    app.add_option("--config", config_path, "Config file (JSON); overrides $" + std::string(kConfigEnvVar));

    std::vector<double> q;
    auto* fk = app.add_subcommand("fk", "Tip position for joint values q1 [rad] q2 [mm] q3 [mm]");
    fk->add_option("q", q, "q1 q2 q3")->expected(3)->required();

    std::vector<double> p;
    std::optional<double> hint;
    auto* ik = app.add_subcommand("ik", "Joint values for a tip position x y z [mm]");
    ik->add_option("p", p, "x y z")->expected(3)->required();
    ik->add_option("--hint", hint, "q1 to use at the singular configuration");

    std::vector<double> from, to;
    std::string mode = "sequential";
    double dt = 0.004;
    std::string out;
    auto* plan = app.add_subcommand("plan", "Plan a point-to-point move and export the sampled trajectory as CSV");
    plan->add_option("--from", from, "start x y z [mm]")->expected(3)->required();
    plan->add_option("--to", to, "goal x y z [mm]")->expected(3)->required();
    plan->add_option("--mode", mode, "sequential or simultaneous")
        ->check(CLI::IsMember({"sequential", "simultaneous"}));
    plan->add_option("--dt", dt, "sample period [s]")->check(CLI::PositiveNumber);
    plan->add_option("--out", out, "CSV output file (default stdout)");

    std::string record;
    auto* serve = app.add_subcommand("serve", "Run the control service until SIGINT or SIGTERM");
    serve->add_option("--record", record, "Append applied commands to this replayable log");

    std::string log_path;
    std::string telemetry_out;
    auto* rep = app.add_subcommand("replay", "Replay a recorded command log against a fresh service");
    rep->add_option("log", log_path, "Command log (one JSON entry per line)")->required();
    rep->add_option("--out", telemetry_out, "Telemetry output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        const AppConfig cfg = resolve_config(config_path);
        if (*fk) return cmd_fk(cfg, q);
        if (*ik) return cmd_ik(cfg, p, hint);
        if (*plan) return cmd_plan(cfg, from, to, mode, dt, out);
        if (*serve) return cmd_serve(cfg, record);
        if (*rep) return cmd_replay(cfg, log_path, telemetry_out);
    } catch (const DegenerateInput& e) {
        std::fprintf(stderr, "error: DegenerateInput: %s\n", e.what());
        return kExitRuntime;
    } catch (const OutOfWorkspace& e) {
        std::fprintf(stderr, "error: OutOfWorkspace: %s\n", e.what());
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitUsage;
}
