#ifndef RCM_MODBUS_HPP
#define RCM_MODBUS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "rcm/registers.hpp"

namespace rcm::modbus {

inline constexpr std::size_t kHeaderSize = 7;  // transaction, protocol, length, unit
inline constexpr std::uint8_t kReadHolding = 3;
inline constexpr std::uint8_t kWriteMultiple = 16;
inline constexpr std::uint16_t kMaxReadCount = 125;
inline constexpr std::uint16_t kMaxWriteCount = 123;

struct Header {
    std::uint16_t transaction = 0;
    std::uint16_t protocol = 0;
    std::uint16_t length = 0;  // unit id + PDU
    std::uint8_t unit = 0;
};

// Nullopt unless `bytes` holds at least a full header with protocol 0 and a sane length.
std::optional<Header> parse_header(std::span<const std::uint8_t> bytes);

struct Backend {
    std::function<std::optional<RegisterException>(std::uint16_t, std::uint16_t, std::vector<std::uint16_t>&)> read;
    std::function<std::optional<RegisterException>(std::uint16_t, std::span<const std::uint16_t>)> write;
};

// Serves one complete ADU (header + PDU) and returns the response ADU.
std::vector<std::uint8_t> handle_adu(std::span<const std::uint8_t> adu, const Backend& backend);

// Client-side request builders and response parsing, used by tests and tools.
std::vector<std::uint8_t> read_request(std::uint16_t transaction, std::uint16_t addr, std::uint16_t count,
                                       std::uint8_t unit = 1);
std::vector<std::uint8_t> write_request(std::uint16_t transaction, std::uint16_t addr,
                                        std::span<const std::uint16_t> values, std::uint8_t unit = 1);

struct Response {
    Header header;
    std::uint8_t function = 0;
    std::optional<std::uint8_t> exception;  // set when function has the 0x80 bit
    std::vector<std::uint16_t> values;      // fc3 payload
    std::uint16_t addr = 0;                 // fc16 echo
    std::uint16_t count = 0;                // fc16 echo
};

std::optional<Response> parse_response(std::span<const std::uint8_t> adu);

}  // namespace rcm::modbus

#endif  // RCM_MODBUS_HPP
