#ifndef RCM_CONFIG_HPP
#define RCM_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "rcm/service.hpp"

namespace rcm {

struct HostConfig {
    std::string bind = "127.0.0.1";
    std::uint16_t command_port = 7700;  // newline-delimited JSON commands
    std::uint16_t http_port = 7701;     // HTTP /state, /config; WebSocket /telemetry, /command
    std::uint16_t modbus_port = 1502;   // holding registers
    unsigned telemetry_decimation = 4;  // broadcast every Nth tick
    std::size_t subscriber_queue = 256;  // frames buffered per WebSocket subscriber before it is dropped
    bool realtime = true;               // pace ticks at dt; false runs as fast as possible
};

struct AppConfig {
    ServiceConfig service{};
    HostConfig host{};
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr const char* kConfigEnvVar = "RCM_TWIN_CONFIG";

// Every key is optional; missing keys keep their defaults. Unknown keys are errors.
AppConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const AppConfig& c);

AppConfig load_config_file(const std::string& path);

// Resolution order: explicit path, then $RCM_TWIN_CONFIG, then built-in defaults.
AppConfig resolve_config(const std::optional<std::string>& path);

}  // namespace rcm

#endif  // RCM_CONFIG_HPP
