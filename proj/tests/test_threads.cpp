#include "dotvm/instrument.hpp"
#include "dotvm/ir_text.hpp"
#include "dotvm/machine.hpp"
#include "dotvm/validate.hpp"

#include <doctest.h>

#include <bit>

using namespace dotvm;

namespace {

// Two threads add their own seeded value into a shared accumulator through a
// load / compare-and-swap retry loop. The load and the CAS sit in different
// superblocks, so the scheduler can interleave another thread's update in
// between and force retries.
const char* kCasLoop = R"(
entry 0x1000
sb 0x1000 tmps: I64 I1 F64
  imark 0x100 1
  t0 = GET:I64(0)
  t1 = CmpEQ64(t0,I64{0x4})
  if (t1) goto 0x4000
  t2 = LD:F64(I64{0x9000})
  PUT(16) = t2
  if (I1{0x1}) goto 0x2000
sb 0x2000 tmps: F64 F64 F64 I64 I64 I1
  imark 0x200 1
  t0 = GET:F64(16)
  t1 = AddF64(t0,GET:F64(8))
  t2 = CAS(I64{0x9000} :: t0 -> t1)
  t3 = ReinterpF64asI64(t2)
  t4 = ReinterpF64asI64(t0)
  t5 = CmpEQ64(t3,t4)
  if (t5) goto 0x3000
  if (I1{0x1}) goto 0x1000
sb 0x3000 tmps: I64
  imark 0x300 1
  t0 = GET:I64(0)
  PUT(0) = Add64(t0,I64{0x1})
  if (I1{0x1}) goto 0x1000
sb 0x4000 tmps:
  halt
)";

void seed_thread(Machine& m, unsigned tid, double value, double dot) {
  auto g = m.guest(tid);
  const uint64_t vb = std::bit_cast<uint64_t>(value);
  const uint64_t db = std::bit_cast<uint64_t>(dot);
  for (int i = 0; i < 8; ++i) {
    g[8 + i] = static_cast<uint8_t>(vb >> (8 * i));
    g[1024 + 8 + i] = static_cast<uint8_t>(db >> (8 * i));
  }
}

double mem_f64(Machine& m, uint64_t addr) {
  auto b = m.memory().read_vec(addr, 8);
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

double dot_f64(Machine& m, uint64_t addr) {
  auto b = m.shadow().read_vec(addr, 8);
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

} // namespace

TEST_CASE("two-thread CAS accumulation matches the sequential result") {
  Program plain = parse_asm(kCasLoop);
  AdPolicy policy;
  Program prog = instrument_program(plain, policy);
  REQUIRE(validate(prog).empty());

  // dyadic addends keep every partial sum exact, so any interleaving must
  // produce the same bits
  const double xa = 1.5, da = 0.25;
  const double xb = 2.25, db = 0.5;

  // sequential oracle: thread 0 to completion, then thread 1
  Machine seq(prog);
  seq.add_thread(0x1000);
  seed_thread(seq, 0, xa, da);
  seed_thread(seq, 1, xb, db);
  REQUIRE(seq.run().reason == StopReason::Halted); // thread 0 only
  REQUIRE(seq.run_threads(0).reason == StopReason::Halted);
  const double seq_value = mem_f64(seq, 0x9000);
  const double seq_dot = dot_f64(seq, 0x9000);
  CHECK(seq_value == 4 * xa + 4 * xb);
  CHECK(seq_dot == 4 * da + 4 * db);

  for (uint64_t seed = 1; seed <= 10; ++seed) {
    Machine m(prog);
    m.add_thread(0x1000);
    seed_thread(m, 0, xa, da);
    seed_thread(m, 1, xb, db);
    RunResult r = m.run_threads(seed);
    REQUIRE(r.reason == StopReason::Halted);
    REQUIRE(std::bit_cast<uint64_t>(mem_f64(m, 0x9000)) ==
            std::bit_cast<uint64_t>(seq_value));
    REQUIRE(std::bit_cast<uint64_t>(dot_f64(m, 0x9000)) ==
            std::bit_cast<uint64_t>(seq_dot));
  }
}

TEST_CASE("interleaved runs are deterministic for a fixed schedule seed") {
  Program plain = parse_asm(kCasLoop);
  AdPolicy policy;
  Program prog = instrument_program(plain, policy);

  auto run_once = [&](uint64_t seed) {
    Machine m(prog);
    m.add_thread(0x1000);
    seed_thread(m, 0, 1.5, 0.25);
    seed_thread(m, 1, 2.25, 0.5);
    RunResult r = m.run_threads(seed);
    REQUIRE(r.reason == StopReason::Halted);
    return r.superblocks_executed;
  };
  CHECK(run_once(42) == run_once(42));
}

TEST_CASE("uninstrumented integer counter loops under the scheduler") {
  // both threads bump their own guest counter; shared memory is untouched
  Program p = parse_asm(R"(
sb 0x1000 tmps: I64 I1
  t0 = GET:I64(0)
  PUT(0) = Add64(t0,I64{0x1})
  t1 = CmpLT64U(GET:I64(0),I64{0x9})
  if (t1) goto 0x1000
  halt
)");
  Machine m(p);
  m.add_thread(0x1000);
  REQUIRE(m.run_threads(7).reason == StopReason::Halted);
  for (unsigned tid = 0; tid < 2; ++tid) {
    uint64_t v = 0;
    auto g = m.guest(tid);
    for (int i = 0; i < 8; ++i)
      v |= static_cast<uint64_t>(g[i]) << (8 * i);
    CHECK(v == 9);
  }
}
