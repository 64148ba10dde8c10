#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "rcm/config.hpp"

using namespace rcm;
using nlohmann::json;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path.string();
}

}  // namespace

TEST_CASE("defaults are the reference geometry") {
    const AppConfig c = config_from_json(json::object());
    const RobotGeometry ref = RobotGeometry::config_a();
    CHECK(c.service.plant.geometry.rail_radius == ref.rail_radius);
    CHECK(c.service.plant.geometry.tool_offset == ref.tool_offset);
    CHECK(c.service.plant.dt == 0.004);
    CHECK(c.host.telemetry_decimation == 4);
}

TEST_CASE("the full document round trips") {
    AppConfig c;
    c.service.plant.geometry.rail_radius = 280.0;
    c.service.plant.geometry.limit(Joint::q2).max = 280.0 * 3.0;
    c.service.plant.geometry.limit(Joint::q3).v_max = 25.0;
    c.service.plant.dt = 0.002;
    c.service.supervisor.alignment_tolerance = 0.25;
    c.service.supervisor.tracking_margin = 0.8;
    c.host.modbus_port = 5020;
    c.host.realtime = false;
    const json j = config_to_json(c);
    const AppConfig back = config_from_json(j);
    CHECK(config_to_json(back) == j);
    CHECK(back.service.plant.geometry.limit(Joint::q3).v_max == 25.0);
    CHECK(back.service.supervisor.tracking_margin == 0.8);
}

TEST_CASE("partial documents override only what they name") {
    const AppConfig c = config_from_json(json::parse(R"({"geometry":{"joints":{"q2":{"v_max":40}}},"service":{"http_port":9000}})"));
    CHECK(c.service.plant.geometry.limit(Joint::q2).v_max == 40.0);
    CHECK(c.service.plant.geometry.limit(Joint::q2).a_max == RobotGeometry::config_a().limit(Joint::q2).a_max);
    CHECK(c.host.http_port == 9000);
    CHECK(c.host.command_port == 7700);
}

TEST_CASE("invalid documents are rejected") {
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"geometry":{"radius":1}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"plant":{"dt":-1}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"plant":{"dt":"fast"}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"plant":{"initial":[1,2]}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"geometry":{"rail_radius":-5}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"service":{"telemetry_decimation":0}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"supervisor":{"tracking_margin":1.5}})")), ConfigError);
    CHECK_THROWS_AS(load_config_file("/nonexistent/rcm.json"), ConfigError);
    CHECK_THROWS_AS(load_config_file(write_temp("rcm_bad.json", "{oops")), ConfigError);
}

TEST_CASE("explicit path beats the environment which beats the defaults") {
    const std::string from_env = write_temp("rcm_env.json", R"({"service":{"http_port":1111}})");
    const std::string from_flag = write_temp("rcm_flag.json", R"({"service":{"http_port":2222}})");
    ::unsetenv(kConfigEnvVar);
    CHECK(resolve_config(std::nullopt).host.http_port == 7701);
    ::setenv(kConfigEnvVar, from_env.c_str(), 1);
    CHECK(resolve_config(std::nullopt).host.http_port == 1111);
    CHECK(resolve_config(from_flag).host.http_port == 2222);
    ::unsetenv(kConfigEnvVar);
}
