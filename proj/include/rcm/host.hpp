#ifndef RCM_HOST_HPP
#define RCM_HOST_HPP

#include <cstdint>
#include <future>
#include <memory>
#include <optional>
#include <string>

#include "rcm/config.hpp"
#include "rcm/service.hpp"

namespace rcm {

// Latest state published by the control loop after each tick. Immutable once published.
struct Published {
    RegisterMap registers;
    TelemetryFrame frame;
    std::string frame_json;
};

// Runs a ControlService on a real-time loop thread and exposes it on the network:
//   - TCP command channel, one JSON command per line, one JSON ack per line
//   - HTTP GET /state and /config, WebSocket /telemetry and /command on the HTTP port
//   - Modbus-TCP holding registers (function codes 3 and 16)
// All network input reaches the loop through one ordered queue.
class ServiceHost {
public:
    // When `record_path` is set, every applied command and register write is appended to
    // that file as a replayable log line.
    explicit ServiceHost(AppConfig config, std::optional<std::string> record_path = std::nullopt);
    ~ServiceHost();

    ServiceHost(const ServiceHost&) = delete;
    ServiceHost& operator=(const ServiceHost&) = delete;

    void start();
    void stop();

    // Bound ports; useful when the config asked for port 0.
    std::uint16_t command_port() const;
    std::uint16_t http_port() const;
    std::uint16_t modbus_port() const;

    // In-process command path, same queue as the network. Resolves to the ack line.
    std::future<std::string> submit(const std::string& command_json);

    std::shared_ptr<const Published> published() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace rcm

#endif  // RCM_HOST_HPP
