#include "dotvm/instrument.hpp"

#include "dotvm/ir_text.hpp"
#include "dotvm/machine.hpp"
#include "dotvm/validate.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>

using namespace dotvm;

namespace {

uint64_t bits(double v) { return std::bit_cast<uint64_t>(v); }
double f64(uint64_t b) { return std::bit_cast<double>(b); }

void seed_f64(Machine& m, uint64_t addr, double v, double dot) {
  uint8_t b[8];
  uint64_t x = bits(v);
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<uint8_t>(x >> (8 * i));
  m.memory().write(addr, b);
  x = bits(dot);
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<uint8_t>(x >> (8 * i));
  m.shadow().write(addr, b);
}

double mem_f64(Machine& m, uint64_t addr) {
  auto v = m.memory().read_vec(addr, 8);
  uint64_t x = 0;
  for (int i = 0; i < 8; ++i)
    x |= static_cast<uint64_t>(v[i]) << (8 * i);
  return f64(x);
}

double dot_f64(Machine& m, uint64_t addr) {
  auto v = m.shadow().read_vec(addr, 8);
  uint64_t x = 0;
  for (int i = 0; i < 8; ++i)
    x |= static_cast<uint64_t>(v[i]) << (8 * i);
  return f64(x);
}

struct AdRun {
  double value;
  double dot;
  Machine machine;
};

// Convention for these tests: one f64 input at 0x5000, one output at 0x6000.
AdRun run_ad(const std::string& text, double x, double dx,
             InstrumentOptions opts = {}) {
  Program p = parse_asm(text);
  REQUIRE(validate(p).empty());
  AdPolicy policy;
  Program ip = instrument_program(p, policy, opts);
  REQUIRE(validate(ip).empty());
  AdRun run{0, 0, Machine(ip)};
  seed_f64(run.machine, 0x5000, x, dx);
  RunResult r = run.machine.run();
  REQUIRE(r.reason == StopReason::Halted);
  run.value = mem_f64(run.machine, 0x6000);
  run.dot = dot_f64(run.machine, 0x6000);
  return run;
}

} // namespace

TEST_CASE("structural form of an instrumented multiply") {
  Program p = parse_asm(R"(
sb 0x1000 tmps: F64 F64 F64 F64
  t2 = LD:F64(I64{0x5000})
  t3 = LD:F64(I64{0x5008})
  t1 = MulF64(t2,t3)
  halt
)");
  AdPolicy policy;
  Superblock isb = instrument_superblock(p.blocks.at(0x1000), policy);
  // m_tmp is 4: the shadow of t1 is t5, reading shadows t6 and t7
  // the shadow of the multiply precedes it and applies the product rule
  bool found = false;
  for (size_t i = 0; i + 1 < isb.stmts.size(); ++i) {
    const Stmt& s = isb.stmts[i];
    if (s.kind == Stmt::Kind::WrTmp && s.tmp == 1 + 4) {
      found = true;
      CHECK(print_expr(*s.data) == "AddF64(MulF64(t6,t3),MulF64(t2,t7))");
      const Stmt& next = isb.stmts[i + 1];
      CHECK(next.kind == Stmt::Kind::WrTmp);
      CHECK(next.tmp == 1);
    }
  }
  CHECK(found);
}

TEST_CASE("constants get a zero dot of the same type") {
  Program p = parse_asm(R"(
sb 0x1000 tmps:
  PUT(0) = F64{0x4000000000000000}
  halt
)");
  AdPolicy policy;
  Superblock isb = instrument_superblock(p.blocks.at(0x1000), policy);
  REQUIRE(isb.stmts.size() == 3);
  CHECK(isb.stmts[0].kind == Stmt::Kind::Put);
  CHECK(isb.stmts[0].offset == 1024);
  CHECK(print_expr(*isb.stmts[0].data) == "F64{0x0}");
  CHECK(isb.stmts[1].offset == 0);
}

TEST_CASE("integer-only blocks keep their primal statements in order") {
  Program p = parse_asm(R"(
sb 0x1000 tmps: I64 I64
  t0 = I64{0x7}
  t1 = Add64(t0,I64{0x5})
  PUT(0) = t1
  halt
)");
  AdPolicy policy;
  Superblock isb = instrument_superblock(p.blocks.at(0x1000), policy);
  std::vector<std::string> primal;
  for (const Stmt& s : isb.stmts)
    primal.push_back(print_stmt(s));
  // every original statement appears, in order, each preceded by its shadow
  REQUIRE(isb.stmts.size() == 7);
  CHECK(primal[0] == "t2 = I64{0x0}");
  CHECK(primal[1] == "t0 = I64{0x7}");
  CHECK(primal[2] == "t3 = I64{0x0}"); // integer add: zero derivative
  CHECK(primal[3] == "t1 = Add64(t0,I64{0x5})");
  CHECK(primal[4] == "PUT(1024) = t3");
  CHECK(primal[5] == "PUT(0) = t1");
  CHECK(policy.warnings.empty());
}

TEST_CASE("cube program: value 64, dot 48 at x=4") {
  AdRun r = run_ad(R"(
sb 0x1000 tmps: F64 F64 F64
  t0 = LD:F64(I64{0x5000})
  t1 = MulF64(t0,t0)
  t2 = MulF64(t1,t0)
  ST(I64{0x6000}) = t2
  halt
)",
                   4.0, 1.0);
  CHECK(r.value == 64.0);
  CHECK(r.dot == 48.0);
}

TEST_CASE("division and square root rules") {
  AdRun r = run_ad(R"(
sb 0x1000 tmps: F64 F64 F64
  t0 = LD:F64(I64{0x5000})
  t1 = DivF64(F64{0x3FF0000000000000},t0)
  t2 = SqrtF64(t1)
  ST(I64{0x6000}) = t2
  halt
)",
                   4.0, 1.0);
  // mirror the instrumentation formulas step by step
  const double x = 4.0, dx = 1.0;
  const double q = 1.0 / x;
  const double dq = (0.0 * x - 1.0 * dx) / (x * x);
  const double expect = dq / (2.0 * std::sqrt(q));
  CHECK(r.value == std::sqrt(0.25));
  CHECK(r.dot == expect);
}

TEST_CASE("abs via the 128-bit and, as compilers emit it") {
  // andpd with the constant from .long -1, 2147483647, 0, 0
  AdRun r = run_ad(R"(
sb 0x1000 tmps: F64 I64 V128 V128 I64 F64
  t0 = LD:F64(I64{0x5000})
  t1 = ReinterpF64asI64(t0)
  t2 = 64x2toV128(I64{0x0},t1)
  t3 = AndV128(t2,V128{0x00000000000000007FFFFFFFFFFFFFFF})
  t4 = V128to64lo(t3)
  t5 = ReinterpI64asF64(t4)
  ST(I64{0x6000}) = t5
  halt
)",
                   -3.0, 1.0);
  CHECK(r.value == 3.0);
  CHECK(r.dot == -1.0);
}

TEST_CASE("negation via xor with the sign mask") {
  AdRun r = run_ad(R"(
sb 0x1000 tmps: F64 I64 I64 F64
  t0 = LD:F64(I64{0x5000})
  t1 = ReinterpF64asI64(t0)
  t2 = Xor64(t1,I64{0x8000000000000000})
  t3 = ReinterpI64asF64(t2)
  ST(I64{0x6000}) = t3
  halt
)",
                   2.0, 1.0);
  CHECK(r.value == -2.0);
  CHECK(r.dot == -1.0);
}

TEST_CASE("masking select picks value and dot as an if-then-else") {
  // f(a) = a < 0 ? 2 + a : 2a, built exactly like the compiler output:
  // cmpltsd mask, andpd/andnpd/orpd select, addsd.
  const char* text = R"(
sb 0x1000 tmps: F64 I64 V128 V128 V128 V128 V128 V128 I64 F64 F64
  t0 = LD:F64(I64{0x5000})
  t1 = ReinterpF64asI64(t0)
  t2 = 64x2toV128(I64{0x0},t1)
  t3 = XorV128(t2,t2)
  t4 = CmpLT64F0x2(t2,t3)
  t5 = AndV128(t4,V128{0x00000000000000004000000000000000})
  t6 = NotV128(t4)
  t7 = AndV128(t6,t2)
  t8 = V128to64lo(OrV128(t5,t7))
  t9 = ReinterpI64asF64(t8)
  t10 = AddF64(t0,t9)
  ST(I64{0x6000}) = t10
  halt
)";
  AdRun lo = run_ad(text, -1.0, 1.0);
  CHECK(lo.value == 1.0);
  CHECK(lo.dot == 1.0);
  AdRun hi = run_ad(text, 3.0, 1.0);
  CHECK(hi.value == 6.0);
  CHECK(hi.dot == 2.0);
}

TEST_CASE("ITE carries the condition over to the dots") {
  AdRun r = run_ad(R"(
sb 0x1000 tmps: F64 I1 F64
  t0 = LD:F64(I64{0x5000})
  t1 = CmpEQ32(CmpF64(t0,F64{0x0}),I32{0x1})
  t2 = ITE(t1,NegF64(t0),MulF64(t0,t0))
  ST(I64{0x6000}) = t2
  halt
)",
                   -2.0, 1.0);
  CHECK(r.value == 2.0);
  CHECK(r.dot == -1.0);
  AdRun r2 = run_ad(R"(
sb 0x1000 tmps: F64 I1 F64
  t0 = LD:F64(I64{0x5000})
  t1 = CmpEQ32(CmpF64(t0,F64{0x0}),I32{0x1})
  t2 = ITE(t1,NegF64(t0),MulF64(t0,t0))
  ST(I64{0x6000}) = t2
  halt
)",
                    3.0, 1.0);
  CHECK(r2.value == 9.0);
  CHECK(r2.dot == 6.0);
}

TEST_CASE("shadow registers shift by the guest-state size") {
  Program p = parse_asm(R"(
sb 0x1000 tmps: F64
  t0 = GET:F64(16)
  PUT(24) = t0
  halt
)");
  AdPolicy policy;
  Program ip = instrument_program(p, policy);
  Machine m(ip);
  // write value into band 0 and dot into band 1 by hand
  auto g = m.guest();
  uint64_t v = bits(2.5), d = bits(0.5);
  for (int i = 0; i < 8; ++i) {
    g[16 + i] = static_cast<uint8_t>(v >> (8 * i));
    g[1024 + 16 + i] = static_cast<uint8_t>(d >> (8 * i));
  }
  REQUIRE(m.run().reason == StopReason::Halted);
  uint64_t vo = 0, vd = 0;
  for (int i = 0; i < 8; ++i) {
    vo |= static_cast<uint64_t>(g[24 + i]) << (8 * i);
    vd |= static_cast<uint64_t>(g[1024 + 24 + i]) << (8 * i);
  }
  CHECK(f64(vo) == 2.5);
  CHECK(f64(vd) == 0.5);
}

TEST_CASE("lowest-lane multiply keeps the first operand's upper dot lanes") {
  Program p = parse_asm(R"(
sb 0x1000 tmps: V128 V128 V128
  t0 = LD:V128(I64{0x5000})
  t1 = LD:V128(I64{0x5010})
  t2 = Mul32F0x4(t0,t1)
  ST(I64{0x6000}) = t2
  halt
)");
  AdPolicy policy;
  Program ip = instrument_program(p, policy);
  Machine m(ip);
  // q lanes 1..3 carry distinct values and dots
  float q[4] = {3.0f, 10.f, 20.f, 30.f};
  float s[4] = {2.0f, -1.f, -2.f, -3.f};
  float dq[4] = {1.0f, 4.f, 5.f, 6.f};
  float ds[4] = {0.5f, 9.f, 9.f, 9.f};
  auto write_vec = [&](uint64_t addr, float* vals, ShadowMap& target) {
    std::vector<uint8_t> b(16);
    for (int lane = 0; lane < 4; ++lane) {
      uint32_t u = std::bit_cast<uint32_t>(vals[lane]);
      for (int i = 0; i < 4; ++i)
        b[4 * lane + i] = static_cast<uint8_t>(u >> (8 * i));
    }
    target.write(addr, b);
  };
  write_vec(0x5000, q, m.memory());
  write_vec(0x5010, s, m.memory());
  write_vec(0x5000, dq, m.shadow());
  write_vec(0x5010, ds, m.shadow());
  REQUIRE(m.run().reason == StopReason::Halted);

  auto lane_f32 = [&](ShadowMap& src, uint64_t addr, int lane) {
    auto b = src.read_vec(addr + 4 * lane, 4);
    uint32_t u = 0;
    for (int i = 0; i < 4; ++i)
      u |= static_cast<uint32_t>(b[i]) << (8 * i);
    return std::bit_cast<float>(u);
  };
  // value: lane0 product, upper lanes from q
  CHECK(lane_f32(m.memory(), 0x6000, 0) == 6.0f);
  CHECK(lane_f32(m.memory(), 0x6000, 1) == 10.f);
  // dot: lane0 product rule, upper lanes dq
  CHECK(lane_f32(m.shadow(), 0x6000, 0) == 1.0f * 2.0f + 3.0f * 0.5f);
  CHECK(lane_f32(m.shadow(), 0x6000, 1) == 4.f);
  CHECK(lane_f32(m.shadow(), 0x6000, 2) == 5.f);
  CHECK(lane_f32(m.shadow(), 0x6000, 3) == 6.f);
}

TEST_CASE("SIMD multiply applies the product rule per lane") {
  Program p = parse_asm(R"(
sb 0x1000 tmps: V128 V128 V128
  t0 = LD:V128(I64{0x5000})
  t1 = LD:V128(I64{0x5010})
  t2 = Mul64Fx2(t0,t1)
  ST(I64{0x6000}) = t2
  halt
)");
  AdPolicy policy;
  Program ip = instrument_program(p, policy);
  Machine m(ip);
  auto write_pair = [&](uint64_t addr, double lo, double hi, ShadowMap& t) {
    std::vector<uint8_t> b(16);
    uint64_t u0 = bits(lo), u1 = bits(hi);
    for (int i = 0; i < 8; ++i) {
      b[i] = static_cast<uint8_t>(u0 >> (8 * i));
      b[8 + i] = static_cast<uint8_t>(u1 >> (8 * i));
    }
    t.write(addr, b);
  };
  write_pair(0x5000, 3.0, -2.0, m.memory());
  write_pair(0x5010, 5.0, 7.0, m.memory());
  write_pair(0x5000, 1.0, 0.5, m.shadow());
  write_pair(0x5010, 0.0, 2.0, m.shadow());
  REQUIRE(m.run().reason == StopReason::Halted);
  CHECK(mem_f64(m, 0x6000) == 15.0);
  CHECK(mem_f64(m, 0x6008) == -14.0);
  CHECK(dot_f64(m, 0x6000) == 1.0 * 5.0 + 3.0 * 0.0);
  CHECK(dot_f64(m, 0x6008) == 0.5 * 7.0 + -2.0 * 2.0);
}

TEST_CASE("unknown opcodes get a zero dot and a warning") {
  Program p = parse_asm(R"(
sb 0x1000 tmps: F64 F64
  t0 = LD:F64(I64{0x5000})
  t1 = Frob:F64(t0)
  halt
)");
  AdPolicy policy;
  Program ip = instrument_program(p, policy);
  REQUIRE(policy.warnings.size() == 1);
  CHECK(policy.warnings[0].opcode == "Frob");
  CHECK(policy.warnings[0].sb_addr == 0x1000);
  CHECK(policy.warnings[0].stmt_index == 1);
}

TEST_CASE("x87 dirty calls are matched on the shadow side") {
  AdRun r = run_ad(R"(
sb 0x1000 tmps: F64 F64
  t0 = LD:F64(I64{0x5000})
  dirty x87_store80(I64{0x7000},t0)
  t1 = dirty x87_load80(I64{0x7000})
  ST(I64{0x6000}) = t1
  halt
)",
                   1.25, 0.75);
  CHECK(r.value == 1.25);
  CHECK(r.dot == 0.75);
}

TEST_CASE("read_input destinations get an initialized zero shadow") {
  Program p = parse_asm(R"(
sb 0x1000 tmps: F64
  t0 = dirty read_input(I64{0x0})
  ST(I64{0x6000}) = t0
  halt
)");
  AdPolicy policy;
  Program ip = instrument_program(p, policy);
  REQUIRE(validate(ip).empty());
  Machine m(ip);
  m.set_inputs({42.0});
  // poison the shadow of the output location to prove it gets overwritten
  uint8_t junk[8] = {0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF};
  m.shadow().write(0x6000, junk);
  REQUIRE(m.run().reason == StopReason::Halted);
  CHECK(mem_f64(m, 0x6000) == 42.0);
  CHECK(dot_f64(m, 0x6000) == 0.0);
}

TEST_CASE("instrumented CAS replays the dual-comparison semantics") {
  // mem holds 1.0 with dot 0.5; expected is a load of a second location with
  // matching value/dot; new value doubles it.
  const char* text = R"(
sb 0x1000 tmps: F64 F64 F64
  t0 = LD:F64(I64{0x5000})
  t1 = MulF64(t0,F64{0x4000000000000000})
  t2 = CAS(I64{0x7000} :: t0 -> t1)
  ST(I64{0x6000}) = t2
  halt
)";
  Program p = parse_asm(text);
  AdPolicy policy;
  Program ip = instrument_program(p, policy);
  REQUIRE(validate(ip).empty());

  SUBCASE("matching value and dot write both sides") {
    Machine m(ip);
    seed_f64(m, 0x5000, 1.0, 0.5);
    seed_f64(m, 0x7000, 1.0, 0.5);
    REQUIRE(m.run().reason == StopReason::Halted);
    CHECK(mem_f64(m, 0x7000) == 2.0);
    CHECK(dot_f64(m, 0x7000) == 1.0); // d(2x) with dx = 0.5
    CHECK(mem_f64(m, 0x6000) == 1.0); // old value lands in the destination
    CHECK(dot_f64(m, 0x6000) == 0.5); // and so does the old dot
  }
  SUBCASE("dot mismatch suppresses the write although values match") {
    Machine m(ip);
    seed_f64(m, 0x5000, 1.0, 0.0);
    seed_f64(m, 0x7000, 1.0, 0.5);
    REQUIRE(m.run().reason == StopReason::Halted);
    CHECK(mem_f64(m, 0x7000) == 1.0);
    CHECK(dot_f64(m, 0x7000) == 0.5);
  }
  SUBCASE("uninstrumented CAS ignores the shadow") {
    Machine m(p);
    seed_f64(m, 0x5000, 1.0, 0.0);
    seed_f64(m, 0x7000, 1.0, 0.5);
    REQUIRE(m.run().reason == StopReason::Halted);
    CHECK(mem_f64(m, 0x7000) == 2.0);
  }
}

TEST_CASE("layout discipline of instrumented blocks") {
  Program p = parse_asm(R"(
sb 0x1000 tmps: F64 F64
  t0 = LD:F64(I64{0x5000})
  t1 = AddF64(t0,GET:F64(8))
  PUT(8) = t1
  ST(I64{0x6000}) = t1
  halt
)");
  AdPolicy policy;
  Superblock isb = instrument_superblock(p.blocks.at(0x1000), policy);
  const uint32_t m_tmp = 2;
  for (const Stmt& s : isb.stmts) {
    if (s.kind == Stmt::Kind::Put)
      CHECK((s.offset == 8 || s.offset == 8 + 1024));
    if (s.kind == Stmt::Kind::WrTmp)
      CHECK(s.tmp < 2 * m_tmp + 16);
  }
  // shadow assignment of t1 is exactly t1 + m_tmp
  bool shadow_seen = false;
  for (const Stmt& s : isb.stmts)
    if (s.kind == Stmt::Kind::WrTmp && s.tmp == 1 + m_tmp)
      shadow_seen = true;
  CHECK(shadow_seen);
}

TEST_CASE("the rounding trick keeps the dot, by design") {
  // (y + 1.5*2^52) - 1.5*2^52 rounds the value but the dot flows through
  AdRun r = run_ad(R"(
sb 0x1000 tmps: F64 F64 F64
  t0 = LD:F64(I64{0x5000})
  t1 = AddF64(t0,F64{0x4338000000000000})
  t2 = SubF64(t1,F64{0x4338000000000000})
  ST(I64{0x6000}) = t2
  halt
)",
                   2.7, 1.0);
  CHECK(r.value == 3.0);
  CHECK(r.dot == 1.0); // the correct derivative of rounding would be 0
}
