#include <doctest.h>

#include <string>

#include "rcm/protocol.hpp"

using namespace rcm;
using nlohmann::json;

TEST_CASE("every verb survives an encode/decode round trip") {
    cmd::SetInstrument si;
    si.values[0] = 0.25;
    si.values[3] = -1.0;
    const std::vector<Command> commands{cmd::Home{},
                                        cmd::JogJoint{Joint::q2, -3.5},
                                        cmd::JogCartesian{2, 1.25},
                                        cmd::MoveTo{{-150.0, 150.0, 50.0}, MotionMode::Simultaneous},
                                        si,
                                        cmd::EStop{},
                                        cmd::Reset{},
                                        cmd::Query{}};
    std::uint64_t seq = 10;
    for (const auto& c : commands) {
        const CommandMessage m{seq++, c};
        const json wire = encode_command(m);
        const CommandMessage back = decode_command(wire.dump());
        CHECK(back.seq == m.seq);
        CHECK(std::string(verb_name(back.command)) == verb_name(m.command));
        CHECK(encode_command(back) == wire);
    }
}

TEST_CASE("move_to defaults to sequential mode") {
    const auto m = decode_command(std::string(R"({"seq":1,"verb":"move_to","args":{"x":1,"y":2,"z":3}})"));
    const auto& mv = std::get<cmd::MoveTo>(m.command);
    CHECK(mv.mode == MotionMode::Sequential);
    CHECK(mv.goal.z == 3.0);
}

TEST_CASE("jog_joint accepts joint names and indices") {
    auto m = decode_command(std::string(R"({"seq":2,"verb":"jog_joint","args":{"joint":"q3","delta":1}})"));
    CHECK(std::get<cmd::JogJoint>(m.command).joint == Joint::q3);
    m = decode_command(std::string(R"({"seq":2,"verb":"jog_joint","args":{"joint":1,"delta":1}})"));
    CHECK(std::get<cmd::JogJoint>(m.command).joint == Joint::q1);
}

TEST_CASE("malformed commands raise decode errors carrying the sequence number when known") {
    auto seq_of = [](const std::string& text) -> std::optional<std::uint64_t> {
        try {
            decode_command(text);
        } catch (const DecodeError& e) {
            return e.seq().value_or(999999);
        }
        FAIL("expected a decode error for " << text);
        return std::nullopt;
    };
    CHECK(seq_of("{not json") == 999999);
    CHECK(seq_of("[1,2]") == 999999);
    CHECK(seq_of(R"({"verb":"home"})") == 999999);
    CHECK(seq_of(R"({"seq":-1,"verb":"home"})") == 999999);
    CHECK(seq_of(R"({"seq":5})") == 5);
    CHECK(seq_of(R"({"seq":5,"verb":"fly"})") == 5);
    CHECK(seq_of(R"({"seq":6,"verb":"move_to","args":{"x":1,"y":2}})") == 6);
    CHECK(seq_of(R"({"seq":7,"verb":"jog_joint","args":{"joint":"q4","delta":1}})") == 7);
    CHECK(seq_of(R"({"seq":8,"verb":"jog_cartesian","args":{"axis":"w","delta":1}})") == 8);
    CHECK(seq_of(R"({"seq":9,"verb":"set_instrument","args":{"grasp":1.5}})") == 9);
    CHECK(seq_of(R"({"seq":9,"verb":"set_instrument","args":{}})") == 9);
    CHECK(seq_of(R"({"seq":10,"verb":"move_to","args":{"x":1,"y":2,"z":3,"mode":"fast"}})") == 10);
    CHECK(seq_of(R"({"seq":11,"verb":"jog_joint","args":{"joint":"q1","delta":"big"}})") == 11);
}

TEST_CASE("acks carry status, reason and detail") {
    const json a = encode_ack(Ack::accept(3));
    CHECK(a == json{{"seq", 3}, {"status", "accepted"}});
    const json r = encode_ack(Ack::reject(4, RejectReason::AlignmentRequired, "not aligned"));
    CHECK(r.at("status") == "rejected");
    CHECK(r.at("reason") == "AlignmentRequired");
    const Ack back = decode_ack(r);
    CHECK_FALSE(back.accepted);
    CHECK(back.reason == RejectReason::AlignmentRequired);
    CHECK(back.detail == "not aligned");
}

TEST_CASE("telemetry frames expose joints, tip, mode and axis state") {
    TelemetryFrame f;
    f.tick = 12;
    f.time = 0.048;
    f.joints = {0.1, 200.0, 300.0};
    f.mode = SupervisorMode::Inserting;
    f.axes[2].id = Joint::q3;
    f.axes[2].fault = AxisFault::LimitFault;
    const json j = encode_frame(f);
    CHECK(j.at("tick") == 12);
    CHECK(j.at("mode") == "Inserting");
    CHECK(j.at("joints").at("q2") == 200.0);
    CHECK(j.at("axes").size() == 3);
    CHECK(j.at("axes").at(2).at("fault") == fault_name(AxisFault::LimitFault));
    CHECK(j.at("instrument").contains("grasp"));
}
