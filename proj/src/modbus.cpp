#include "rcm/modbus.hpp"

namespace rcm::modbus {

namespace {

std::uint16_t be16(std::span<const std::uint8_t> b, std::size_t at) {
    return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

std::vector<std::uint8_t> frame(const Header& h, const std::vector<std::uint8_t>& pdu) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + pdu.size());
    put16(out, h.transaction);
    put16(out, 0);
    put16(out, static_cast<std::uint16_t>(pdu.size() + 1));
    out.push_back(h.unit);
    out.insert(out.end(), pdu.begin(), pdu.end());
    return out;
}

std::vector<std::uint8_t> exception_pdu(std::uint8_t function, RegisterException e) {
    return {static_cast<std::uint8_t>(function | 0x80), static_cast<std::uint8_t>(e)};
}

}  // namespace

std::optional<Header> parse_header(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) return std::nullopt;
    Header h{be16(bytes, 0), be16(bytes, 2), be16(bytes, 4), bytes[6]};
    if (h.protocol != 0 || h.length < 2 || h.length > 254) return std::nullopt;
    return h;
}

std::vector<std::uint8_t> handle_adu(std::span<const std::uint8_t> adu, const Backend& backend) {
    const auto header = parse_header(adu);
    if (!header || adu.size() != kHeaderSize - 1 + header->length) return {};
    const std::span<const std::uint8_t> pdu = adu.subspan(kHeaderSize);
    const std::uint8_t fc = pdu[0];

    if (fc == kReadHolding) {
        if (pdu.size() != 5) return frame(*header, exception_pdu(fc, RegisterException::IllegalValue));
        const std::uint16_t addr = be16(pdu, 1);
        const std::uint16_t count = be16(pdu, 3);
        if (count == 0 || count > kMaxReadCount) {
            return frame(*header, exception_pdu(fc, RegisterException::IllegalValue));
        }
        std::vector<std::uint16_t> values;
        if (auto err = backend.read(addr, count, values)) return frame(*header, exception_pdu(fc, *err));
        std::vector<std::uint8_t> out{fc, static_cast<std::uint8_t>(2 * count)};
        for (std::uint16_t v : values) put16(out, v);
        return frame(*header, out);
    }
    if (fc == kWriteMultiple) {
        if (pdu.size() < 6) return frame(*header, exception_pdu(fc, RegisterException::IllegalValue));
        const std::uint16_t addr = be16(pdu, 1);
        const std::uint16_t count = be16(pdu, 3);
        const std::uint8_t bytes = pdu[5];
        if (count == 0 || count > kMaxWriteCount || bytes != 2 * count || pdu.size() != 6u + bytes) {
            return frame(*header, exception_pdu(fc, RegisterException::IllegalValue));
        }
        std::vector<std::uint16_t> values(count);
        for (std::size_t i = 0; i < count; ++i) values[i] = be16(pdu, 6 + 2 * i);
        if (auto err = backend.write(addr, values)) return frame(*header, exception_pdu(fc, *err));
        std::vector<std::uint8_t> out{fc};
        put16(out, addr);
        put16(out, count);
        return frame(*header, out);
    }
    return frame(*header, exception_pdu(fc, RegisterException::IllegalFunction));
}

std::vector<std::uint8_t> read_request(std::uint16_t transaction, std::uint16_t addr, std::uint16_t count,
                                       std::uint8_t unit) {
    std::vector<std::uint8_t> pdu{kReadHolding};
    put16(pdu, addr);
    put16(pdu, count);
    return frame({transaction, 0, 0, unit}, pdu);
}

std::vector<std::uint8_t> write_request(std::uint16_t transaction, std::uint16_t addr,
                                        std::span<const std::uint16_t> values, std::uint8_t unit) {
    std::vector<std::uint8_t> pdu{kWriteMultiple};
    put16(pdu, addr);
    put16(pdu, static_cast<std::uint16_t>(values.size()));
    pdu.push_back(static_cast<std::uint8_t>(2 * values.size()));
    for (std::uint16_t v : values) put16(pdu, v);
    return frame({transaction, 0, 0, unit}, pdu);
}

std::optional<Response> parse_response(std::span<const std::uint8_t> adu) {
    const auto header = parse_header(adu);
    if (!header || adu.size() != kHeaderSize - 1 + header->length) return std::nullopt;
    const std::span<const std::uint8_t> pdu = adu.subspan(kHeaderSize);
    Response r;
    r.header = *header;
    r.function = pdu[0];
    if (r.function & 0x80) {
        if (pdu.size() != 2) return std::nullopt;
        r.exception = pdu[1];
        return r;
    }
    if (r.function == kReadHolding) {
        if (pdu.size() < 2 || pdu.size() != 2u + pdu[1] || pdu[1] % 2 != 0) return std::nullopt;
        for (std::size_t i = 0; i < pdu[1] / 2u; ++i) r.values.push_back(be16(pdu, 2 + 2 * i));
        return r;
    }
    if (r.function == kWriteMultiple) {
        if (pdu.size() != 5) return std::nullopt;
        r.addr = be16(pdu, 1);
        r.count = be16(pdu, 3);
        return r;
    }
    return std::nullopt;
}

}  // namespace rcm::modbus
