#include "dotvm/monitor.hpp"

#include <doctest.h>

#include <bit>

using namespace dotvm;

namespace {

const char* kCube = R"(
var x: f64;
var y: f64;
x = input(0);
y = x*x*x;
print(y);
)";

} // namespace

TEST_CASE("fresh shadow reads as zero bytes") {
  Prepared prep = prepare_source(kCube);
  MonitorSession session(prep, std::vector<double>{4.0}, -1);
  CHECK(session.command("dot 1000 8") == "00 00 00 00 00 00 00 00");
}

TEST_CASE("setdot, continue, dot reads back the derivative") {
  Prepared prep = prepare_source(kCube);
  // no seeding from the driver; the session writes the input slot's shadow
  MonitorSession session(prep, std::vector<double>{4.0}, -1);
  // bits of 1.0, little-endian
  CHECK(session.command("setdot 10000 000000000000F03F") == "ok");
  CHECK(session.command("continue") == "halted");
  // output slot 0 now carries the bits of 48.0
  CHECK(session.command("dot 20000 8") == "00 00 00 00 00 00 48 40");
  CHECK(session.command("mem 20000 8") == "00 00 00 00 00 00 50 40"); // 64.0
}

TEST_CASE("monitor and client-request seeding agree byte for byte") {
  Prepared prep = prepare_source(kCube);

  MonitorSession session(prep, std::vector<double>{4.0}, -1);
  session.command("setdot 10000 000000000000F03F");
  session.command("continue");
  const std::string via_monitor = session.command("dot 20000 8");

  const EngineOutcome direct = run_engine(prep, std::vector<double>{4.0}, 0, true);
  REQUIRE(direct.ok);
  MonitorSession inspect(prep, std::vector<double>{4.0}, 0);
  inspect.command("continue");
  CHECK(inspect.command("dot 20000 8") == via_monitor);
  CHECK(direct.out_dots.at(0) == 48.0);
}

TEST_CASE("breakpoints pause at instruction marks") {
  Prepared prep = prepare_source(kCube);
  REQUIRE(!prep.compiled.imark_lines.empty());
  // break on the third statement's mark (y = x*x*x is statement 2)
  const uint64_t mark = prep.compiled.imark_lines.at(1).first;
  MonitorSession session(prep, std::vector<double>{4.0}, 0);
  const std::string set = session.command("break 400008");
  CHECK(set.find("breakpoint set") != std::string::npos);
  const std::string stop = session.command("continue");
  CHECK(stop.find("stopped at") != std::string::npos);
  CHECK(session.command("where") != "0x0");
  CHECK(session.command("continue") == "halted");
  (void)mark;
}

TEST_CASE("break rejects addresses without an instruction mark") {
  Prepared prep = prepare_source(kCube);
  MonitorSession session(prep, std::vector<double>{4.0}, 0);
  CHECK(session.command("break 12345") == "no such instruction mark");
}

TEST_CASE("step advances one superblock") {
  Prepared prep = prepare_source(R"(
var i: f64;
for (i = 0.0; i < 3.0; i = i + 1.0) {
  print(i);
}
)");
  MonitorSession session(prep, {}, -1);
  int steps = 0;
  while (!session.halted() && steps < 100) {
    session.command("step");
    ++steps;
  }
  CHECK(session.halted());
  CHECK(steps > 3); // several superblocks per iteration
}

TEST_CASE("setdot then dot round-trips bytes exactly") {
  Prepared prep = prepare_source(kCube);
  MonitorSession session(prep, std::vector<double>{4.0}, -1);
  session.command("setdot 7700 DEADBEEF01234567");
  CHECK(session.command("dot 7700 8") == "DE AD BE EF 01 23 45 67");
}

TEST_CASE("malformed commands return usage text") {
  Prepared prep = prepare_source(kCube);
  MonitorSession session(prep, std::vector<double>{4.0}, -1);
  CHECK(session.command("dot").find("usage") != std::string::npos);
  CHECK(session.command("setdot 10 zz").find("usage") != std::string::npos);
  CHECK(session.command("frobnicate").find("unknown command") != std::string::npos);
  CHECK(session.command("help").find("commands") != std::string::npos);
}
