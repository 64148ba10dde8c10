#include <doctest.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>

#include <sys/wait.h>

#include "net_client.hpp"
#include "rcm/trajectory.hpp"

using namespace rcm;
namespace fs = std::filesystem;

namespace {

const std::string kBinary = RCMTWIN_PATH;
const std::string kA = "243.1147 172.3870 105.8209";
const std::string kB = "263.6415 57.6293 -21.5508";

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch(const std::string& name) { return fs::temp_directory_path() / ("rcm_cli_" + name); }

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Run run(const std::string& args, const std::string& env = "env -u RCM_TWIN_CONFIG") {
    const fs::path err = scratch("stderr.txt");
    const std::string cmd = env + " " + kBinary + " " + args + " 2>" + err.string();
    Run r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) r.out += buf.data();
    const int status = ::pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
}

std::string write_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p.string();
}

}  // namespace

TEST_CASE("fk prints the tip at six decimals") {
    Run r = run("fk 0 471.238898 350");
    CHECK(r.code == 0);
    CHECK(r.out == "0.000000 0.000000 -100.000000\n");
    r = run("fk 0 0 250");
    CHECK(r.out == "0.000000 0.000000 0.000000\n");
    r = run("fk -- -1.981334759 298.293256543 566.259542152");
    CHECK(r.out == "243.114700 172.387000 105.820900\n");
}

TEST_CASE("fk argument errors exit with the usage code") {
    CHECK(run("fk").code == 2);
    CHECK(run("fk 1 2").code == 2);
    CHECK(run("fk a b c").code == 2);
    CHECK(run("").code == 2);
    CHECK(run("teleport").code == 2);
}

TEST_CASE("ik prints the reference joint values") {
    Run r = run("ik " + kA);
    CHECK(r.code == 0);
    CHECK(r.out == "-1.981334759 298.293256543 566.259542152\n");
    r = run("ik " + kB);
    CHECK(r.out == "-1.489234845 406.885588568 520.725716771\n");
}

TEST_CASE("ik at the remote center fails with a degenerate-input message") {
    const Run r = run("ik 0 0 0");
    CHECK(r.code == 1);
    CHECK(r.err.find("DegenerateInput") != std::string::npos);
    const Run far = run("ik 0 0 -900");
    CHECK(far.code == 1);
    CHECK(far.err.find("OutOfWorkspace") != std::string::npos);
}

TEST_CASE("ik then fk reproduces the input at six decimals") {
    for (const std::string p : {kA, kB, std::string("-120.5 40.25 -80.125")}) {
        const Run ik = run("ik " + p);
        REQUIRE(ik.code == 0);
        std::string q = ik.out;
        q.pop_back();
        const Run fk = run("fk -- " + q);
        std::istringstream want(p), got(fk.out);
        for (int i = 0; i < 3; ++i) {
            double a = 0, b = 0;
            want >> a;
            got >> b;
            CHECK(std::abs(a - b) < 5e-7);
        }
    }
}

TEST_CASE("plan summaries are stable") {
    const fs::path seq_csv = scratch("seq.csv");
    Run r = run("plan --from " + kA + " --to " + kB + " --mode sequential --out " + seq_csv.string());
    CHECK(r.code == 0);
    CHECK(r.out ==
          "mode sequential\n"
          "phase 1 q1 start 0.000000 duration 1.484200\n"
          "phase 2 q2 start 1.484200 duration 2.671847\n"
          "phase 3 q3 start 4.156046 duration 2.017794\n"
          "total 6.173841\n");
    const fs::path sim_csv = scratch("sim.csv");
    r = run("plan --from " + kA + " --to " + kB + " --mode simultaneous --out " + sim_csv.string());
    CHECK(r.code == 0);
    CHECK(r.out ==
          "mode simultaneous\n"
          "phase 1 q1,q2 start 0.000000 duration 2.671847\n"
          "phase 2 q3 start 2.671847 duration 2.017794\n"
          "total 4.689641\n");

    std::ifstream seq_in(seq_csv);
    for (const auto& s : parse_csv(seq_in)) {
        int moving = 0;
        for (const auto& j : s.joints) moving += j.velocity != 0.0;
        CHECK(moving <= 1);
    }
    std::ifstream sim_in(sim_csv);
    for (const auto& s : parse_csv(sim_in)) {
        if (s.joints[0].velocity != 0.0 || s.joints[1].velocity != 0.0) CHECK(s.joints[2].velocity == 0.0);
    }
}

TEST_CASE("plan between identical points is a single row") {
    const Run r = run("plan --from " + kA + " --to " + kA);
    CHECK(r.code == 0);
    CHECK(r.out == std::string(kCsvHeader) + "\n0,-1.98133475947,0,0,298.293256543,0,0,566.259542152,0,0\n");
    CHECK(r.err.find("total 0.000000") != std::string::npos);
}

TEST_CASE("plan rejects bad modes and steps") {
    CHECK(run("plan --from " + kA + " --to " + kB + " --mode fast").code == 2);
    CHECK(run("plan --from " + kA + " --to " + kB + " --dt 0").code == 2);
    CHECK(run("plan --from 1 2 --to " + kB).code == 2);
    CHECK(run("plan --from 0 0 0 --to " + kB).code == 1);
}

TEST_CASE("the config flag overrides the environment which overrides the defaults") {
    const std::string m0 = write_file("m0.json", R"({"geometry":{"tool_offset":0}})");
    const std::string m20 = write_file("m20.json", R"({"geometry":{"tool_offset":20}})");
    CHECK(run("fk 0 471.238898 350").out == "0.000000 0.000000 -100.000000\n");
    CHECK(run("fk 0 471.238898 350", "RCM_TWIN_CONFIG=" + m0).out == "0.000000 0.000000 -50.000000\n");
    CHECK(run("--config " + m20 + " fk 0 471.238898 350", "RCM_TWIN_CONFIG=" + m0).out ==
          "0.000000 0.000000 -70.000000\n");
    const Run bad = run("--config /nonexistent.json fk 0 0 0");
    CHECK(bad.code == 1);
    CHECK(bad.err.find("cannot open") != std::string::npos);
}

TEST_CASE("replay of the same log writes identical telemetry") {
    const std::string log = write_file("log.ndjson",
                                       R"({"tick":0,"command":{"seq":1,"verb":"home","args":{}}})"
                                       "\n"
                                       R"({"tick":28000,"command":{"seq":2,"verb":"move_to","args":{"x":243.1147,"y":172.387,"z":105.8209,"mode":"simultaneous"}}})"
                                       "\n");
    const fs::path a = scratch("replay_a.ndjson");
    const fs::path b = scratch("replay_b.ndjson");
    CHECK(run("replay " + log + " --out " + a.string()).code == 0);
    CHECK(run("replay " + log + " --out " + b.string()).code == 0);
    const std::string ta = slurp(a);
    CHECK_FALSE(ta.empty());
    CHECK(ta == slurp(b));

    const std::string broken = write_file("broken.ndjson", "{\"tick\":0}\nnot json\n");
    CHECK(run("replay " + broken).code == 1);
    CHECK(run("replay /nonexistent.ndjson").code == 1);
    CHECK(run("replay").code == 2);
}

TEST_CASE("serve answers on its ports and exits cleanly on SIGTERM") {
    const std::string cfg = write_file(
        "serve.json", R"({"service":{"command_port":0,"http_port":0,"modbus_port":0}})");
    const fs::path err = scratch("serve_err.txt");
    const fs::path pidfile = scratch("serve.pid");
    fs::remove(err);
    const std::string cmd = "env -u RCM_TWIN_CONFIG " + kBinary + " --config " + cfg + " serve 2>" + err.string() +
                            " & echo $! > " + pidfile.string();
    REQUIRE(std::system(cmd.c_str()) == 0);
    std::string banner;
    for (int i = 0; i < 200 && banner.find("modbus on") == std::string::npos; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        banner = slurp(err);
    }
    REQUIRE(banner.find("modbus on") != std::string::npos);
    unsigned cmd_port = 0, http_port = 0, modbus_port = 0;
    REQUIRE(std::sscanf(banner.c_str(), "rcmtwin: commands on 127.0.0.1:%u, http/ws on %u, modbus on %u", &cmd_port,
                        &http_port, &modbus_port) == 3);
    netc::LineClient client(static_cast<std::uint16_t>(cmd_port));
    const auto ack = client.call({{"seq", 5}, {"verb", "query"}});
    CHECK(ack.at("status") == "accepted");
    CHECK(netc::http_request(static_cast<std::uint16_t>(http_port), "/config").status == 200);

    std::string pid = slurp(pidfile);
    while (!pid.empty() && (pid.back() == '\n' || pid.back() == ' ')) pid.pop_back();
    REQUIRE(std::system(("kill -TERM " + pid).c_str()) == 0);
    bool gone = false;
    for (int i = 0; i < 200 && !gone; ++i) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        gone = std::system(("kill -0 " + pid + " 2>/dev/null").c_str()) != 0;
    }
    CHECK(gone);
    CHECK(slurp(err).find("shutting down") != std::string::npos);
}
