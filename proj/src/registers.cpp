#include "rcm/registers.hpp"

#include <cmath>
#include <limits>

namespace rcm {

namespace {

bool in_bounds(std::uint16_t addr, std::size_t count) {
    return count > 0 && static_cast<std::size_t>(addr) + count <= reg::kSize;
}

bool writable(std::uint16_t addr) {
    return (addr >= reg::kSetpointBase && addr < reg::kSetpointBase + 6) || addr == reg::kCommand;
}

}  // namespace

const char* exception_name(RegisterException e) {
    switch (e) {
        case RegisterException::IllegalFunction: return "IllegalFunction";
        case RegisterException::IllegalAddress: return "IllegalAddress";
        case RegisterException::IllegalValue: return "IllegalValue";
    }
    return "?";
}

double fixed_scale(Joint j) { return j == Joint::q1 ? 1e6 : 1e3; }

std::int32_t to_fixed(Joint j, double value) {
    const double scaled = std::round(value * fixed_scale(j));
    constexpr double lo = std::numeric_limits<std::int32_t>::min();
    constexpr double hi = std::numeric_limits<std::int32_t>::max();
    if (!(scaled >= lo)) return std::numeric_limits<std::int32_t>::min();
    if (scaled > hi) return std::numeric_limits<std::int32_t>::max();
    return static_cast<std::int32_t>(scaled);
}

double from_fixed(Joint j, std::int32_t value) { return static_cast<double>(value) / fixed_scale(j); }

std::optional<RegisterException> RegisterMap::read(std::uint16_t addr, std::uint16_t count,
                                                   std::vector<std::uint16_t>& out) const {
    if (!in_bounds(addr, count)) return RegisterException::IllegalAddress;
    out.assign(regs_.begin() + addr, regs_.begin() + addr + count);
    return std::nullopt;
}

std::optional<RegisterException> RegisterMap::check_write(std::uint16_t addr,
                                                          std::span<const std::uint16_t> values) const {
    if (!in_bounds(addr, values.size())) return RegisterException::IllegalAddress;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto a = static_cast<std::uint16_t>(addr + i);
        if (!writable(a)) return RegisterException::IllegalValue;
        if (a == reg::kCommand && values[i] > reg::kMaxCommandWord) return RegisterException::IllegalValue;
    }
    return std::nullopt;
}

std::optional<RegisterException> RegisterMap::write(std::uint16_t addr, std::span<const std::uint16_t> values) {
    if (auto err = check_write(addr, values)) return err;
    for (std::size_t i = 0; i < values.size(); ++i) regs_[addr + i] = values[i];
    return std::nullopt;
}

void RegisterMap::set_u32(std::uint16_t addr, std::uint32_t v) {
    regs_.at(addr) = static_cast<std::uint16_t>(v >> 16);
    regs_.at(addr + 1) = static_cast<std::uint16_t>(v & 0xFFFFu);
}

std::uint32_t RegisterMap::u32(std::uint16_t addr) const {
    return (static_cast<std::uint32_t>(regs_.at(addr)) << 16) | regs_.at(addr + 1);
}

}  // namespace rcm
