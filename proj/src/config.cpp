#include "rcm/config.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>

namespace rcm {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
    }
}

void read_triple(const json& j, const char* key, std::array<double, 3>& out, const std::string& where) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != 3) throw ConfigError("'" + std::string(key) + "' in " + where + " needs 3 numbers");
    read(j, key, out, where);
}

}  // namespace

AppConfig config_from_json(const json& j) {
    AppConfig c;
    check_keys(j, "config", {"geometry", "plant", "supervisor", "service"});

    if (j.contains("geometry")) {
        const json& g = j.at("geometry");
        check_keys(g, "geometry", {"rail_radius", "tool_offset", "rcm", "joints"});
        RobotGeometry& geom = c.service.plant.geometry;
        read(g, "rail_radius", geom.rail_radius, "geometry");
        read(g, "tool_offset", geom.tool_offset, "geometry");
        std::array<double, 3> rcm{geom.rcm.x, geom.rcm.y, geom.rcm.z};
        read_triple(g, "rcm", rcm, "geometry");
        geom.rcm = {rcm[0], rcm[1], rcm[2]};
        if (g.contains("joints")) {
            const json& js = g.at("joints");
            check_keys(js, "geometry.joints", {"q1", "q2", "q3"});
            for (Joint jt : kAllJoints) {
                const std::string name = joint_name(jt);
                if (!js.contains(name)) continue;
                const json& l = js.at(name);
                const std::string where = "geometry.joints." + name;
                check_keys(l, where, {"min", "max", "v_max", "a_max"});
                JointLimits& lim = geom.limits[static_cast<std::size_t>(jt)];
                read(l, "min", lim.min, where);
                read(l, "max", lim.max, where);
                read(l, "v_max", lim.v_max, where);
                read(l, "a_max", lim.a_max, where);
            }
        }
    }

    if (j.contains("plant")) {
        const json& p = j.at("plant");
        check_keys(p, "plant",
                   {"dt", "encoder_resolution", "homing_seek_fraction", "homing_backoff_fraction",
                    "homing_travel_factor", "instrument_slew", "initial"});
        PlantConfig& pc = c.service.plant;
        read(p, "dt", pc.dt, "plant");
        read_triple(p, "encoder_resolution", pc.encoder_resolution, "plant");
        read(p, "homing_seek_fraction", pc.homing_seek_fraction, "plant");
        read(p, "homing_backoff_fraction", pc.homing_backoff_fraction, "plant");
        read(p, "homing_travel_factor", pc.homing_travel_factor, "plant");
        read(p, "instrument_slew", pc.instrument_slew, "plant");
        std::array<double, 3> init{pc.initial.q1, pc.initial.q2, pc.initial.q3};
        read_triple(p, "initial", init, "plant");
        pc.initial = {init[0], init[1], init[2]};
    }

    if (j.contains("supervisor")) {
        const json& s = j.at("supervisor");
        check_keys(s, "supervisor", {"alignment_tolerance", "max_joint_jog", "max_cartesian_jog", "tracking_margin"});
        SupervisorConfig& sc = c.service.supervisor;
        read(s, "alignment_tolerance", sc.alignment_tolerance, "supervisor");
        read_triple(s, "max_joint_jog", sc.max_joint_jog, "supervisor");
        read(s, "max_cartesian_jog", sc.max_cartesian_jog, "supervisor");
        read(s, "tracking_margin", sc.tracking_margin, "supervisor");
    }

    if (j.contains("service")) {
        const json& s = j.at("service");
        check_keys(s, "service",
                   {"bind", "command_port", "http_port", "modbus_port", "telemetry_decimation", "subscriber_queue",
                    "realtime"});
        HostConfig& h = c.host;
        read(s, "bind", h.bind, "service");
        read(s, "command_port", h.command_port, "service");
        read(s, "http_port", h.http_port, "service");
        read(s, "modbus_port", h.modbus_port, "service");
        read(s, "telemetry_decimation", h.telemetry_decimation, "service");
        read(s, "subscriber_queue", h.subscriber_queue, "service");
        read(s, "realtime", h.realtime, "service");
    }

    try {
        c.service.plant.geometry.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid geometry: ") + e.what());
    }
    if (!(c.service.plant.dt > 0.0)) throw ConfigError("plant.dt must be positive");
    const double margin = c.service.supervisor.tracking_margin;
    if (!(margin > 0.0 && margin <= 1.0)) throw ConfigError("supervisor.tracking_margin must be in (0, 1]");
    if (c.host.telemetry_decimation == 0) throw ConfigError("service.telemetry_decimation must be at least 1");
    if (c.host.subscriber_queue == 0) throw ConfigError("service.subscriber_queue must be at least 1");
    return c;
}

json config_to_json(const AppConfig& c) {
    const PlantConfig& p = c.service.plant;
    const SupervisorConfig& s = c.service.supervisor;
    const HostConfig& h = c.host;
    return {{"geometry", encode_geometry(p.geometry)},
            {"plant",
             {{"dt", p.dt},
              {"encoder_resolution", p.encoder_resolution},
              {"homing_seek_fraction", p.homing_seek_fraction},
              {"homing_backoff_fraction", p.homing_backoff_fraction},
              {"homing_travel_factor", p.homing_travel_factor},
              {"instrument_slew", p.instrument_slew},
              {"initial", {p.initial.q1, p.initial.q2, p.initial.q3}}}},
            {"supervisor",
             {{"alignment_tolerance", s.alignment_tolerance},
              {"max_joint_jog", s.max_joint_jog},
              {"max_cartesian_jog", s.max_cartesian_jog},
              {"tracking_margin", s.tracking_margin}}},
            {"service",
             {{"bind", h.bind},
              {"command_port", h.command_port},
              {"http_port", h.http_port},
              {"modbus_port", h.modbus_port},
              {"telemetry_decimation", h.telemetry_decimation},
              {"subscriber_queue", h.subscriber_queue},
              {"realtime", h.realtime}}}};
}

AppConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

AppConfig resolve_config(const std::optional<std::string>& path) {
    if (path) return load_config_file(*path);
    if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') return load_config_file(env);
    return AppConfig{};
}

}  // namespace rcm
