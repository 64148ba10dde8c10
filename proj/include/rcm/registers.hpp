#ifndef RCM_REGISTERS_HPP
#define RCM_REGISTERS_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rcm/kinematics.hpp"

namespace rcm {

// Holding-register layout. 32-bit values occupy two registers, high word first.
namespace reg {
inline constexpr std::uint16_t kHeartbeat = 0;     // u32
inline constexpr std::uint16_t kSetpointBase = 10;  // i32 x3: q1 [urad], q2 [um], q3 [um]
inline constexpr std::uint16_t kPositionBase = 20;  // i32 x3, same units
inline constexpr std::uint16_t kStatus = 30;
inline constexpr std::uint16_t kCommand = 40;
inline constexpr std::size_t kSize = 64;

// Status word bits.
inline constexpr std::uint16_t kHomedAll = 1u << 0;
inline constexpr std::uint16_t kFaultAny = 1u << 1;
inline constexpr std::uint16_t kEStop = 1u << 2;
inline constexpr std::uint16_t kAligned = 1u << 3;
inline constexpr int kModeShift = 4;
inline constexpr std::uint16_t kModeMask = 0x7u << kModeShift;

// Command word values; the supervisor clears the word after consuming it.
enum class CommandWord : std::uint16_t { None = 0, Home = 1, EStop = 2, Reset = 3 };
inline constexpr std::uint16_t kMaxCommandWord = 3;

constexpr std::uint16_t setpoint(Joint j) { return kSetpointBase + 2 * static_cast<std::uint16_t>(j); }
constexpr std::uint16_t position(Joint j) { return kPositionBase + 2 * static_cast<std::uint16_t>(j); }
}  // namespace reg

// Standard register-protocol exception codes.
enum class RegisterException : std::uint8_t { IllegalFunction = 1, IllegalAddress = 2, IllegalValue = 3 };

const char* exception_name(RegisterException e);

// Joint value <-> signed fixed point (microradians for q1, micrometers for q2/q3), saturating.
double fixed_scale(Joint j);
std::int32_t to_fixed(Joint j, double value);
double from_fixed(Joint j, std::int32_t value);

class RegisterMap {
public:
    RegisterMap() = default;

    std::uint16_t at(std::uint16_t addr) const { return regs_.at(addr); }

    // Client-facing transactions. Reads never fail inside bounds; writes are only allowed
    // to the setpoint block and the command word.
    std::optional<RegisterException> read(std::uint16_t addr, std::uint16_t count, std::vector<std::uint16_t>& out) const;
    std::optional<RegisterException> check_write(std::uint16_t addr, std::span<const std::uint16_t> values) const;
    std::optional<RegisterException> write(std::uint16_t addr, std::span<const std::uint16_t> values);

    // Device side.
    void set_u16(std::uint16_t addr, std::uint16_t v) { regs_.at(addr) = v; }
    void set_u32(std::uint16_t addr, std::uint32_t v);
    void set_i32(std::uint16_t addr, std::int32_t v) { set_u32(addr, static_cast<std::uint32_t>(v)); }
    std::uint32_t u32(std::uint16_t addr) const;
    std::int32_t i32(std::uint16_t addr) const { return static_cast<std::int32_t>(u32(addr)); }

    friend bool operator==(const RegisterMap&, const RegisterMap&) = default;

private:
    std::array<std::uint16_t, reg::kSize> regs_{};
};

}  // namespace rcm

#endif  // RCM_REGISTERS_HPP
