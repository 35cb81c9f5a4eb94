// Acceptance suite: one line per criterion, nonzero exit when any fail.

#include "dotvm/bench.hpp"
#include "dotvm/bitlogic.hpp"
#include "dotvm/fpcodec.hpp"
#include "dotvm/genprog.hpp"
#include "dotvm/instrument.hpp"
#include "dotvm/ir_text.hpp"
#include "dotvm/limitations.hpp"
#include "dotvm/machine.hpp"
#include "dotvm/mathwrap.hpp"
#include "dotvm/monitor.hpp"
#include "dotvm/oracle.hpp"
#include "dotvm/pipeline.hpp"
#include "dotvm/validate.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <vector>

using namespace dotvm;

namespace {

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::printf("%s  %2d  %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass)
    ++failures;
}

uint64_t bits(double v) { return std::bit_cast<uint64_t>(v); }

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

struct CorpusEntry {
  GenResult gen;
  Prepared prep;
  std::vector<double> inputs;
};

constexpr int kCorpusSize = 1000;

std::vector<CorpusEntry> build_corpus() {
  std::vector<CorpusEntry> corpus;
  corpus.reserve(kCorpusSize);
  std::mt19937_64 rng(987654321);
  for (int seed = 1; seed <= kCorpusSize; ++seed) {
    CorpusEntry e;
    e.gen = gen_random(static_cast<uint64_t>(seed), 18);
    e.prep = prepare_source(e.gen.source);
    e.inputs.resize(e.gen.n_inputs);
    for (auto& v : e.inputs)
      v = std::uniform_real_distribution<double>(-2, 2)(rng);
    corpus.push_back(std::move(e));
  }
  return corpus;
}

// --------------------------------------------------------------------------

void criterion_1(const std::vector<CorpusEntry>& corpus, double build_seconds) {
  const double t0 = now_seconds();
  int outputs = 0;
  bool pass = true;
  std::string detail;
  for (size_t i = 0; i < corpus.size() && pass; ++i) {
    const CorpusEntry& e = corpus[i];
    const EngineOutcome engine = run_engine(e.prep, e.inputs, e.gen.seed_input, true);
    const OracleResult oracle = oracle_eval(*e.prep.ast, e.inputs, e.gen.seed_input);
    if (!engine.ok || !oracle.ok) {
      pass = false;
      detail = "program " + std::to_string(i + 1) + " failed to run: " +
               (engine.ok ? oracle.error : engine.error);
      break;
    }
    for (size_t k = 0; k < engine.out_dots.size(); ++k) {
      ++outputs;
      if (bits(engine.out_dots[k]) != bits(oracle.out_dots[k]) ||
          bits(engine.out_values[k]) != bits(oracle.out_values[k])) {
        pass = false;
        detail = "program " + std::to_string(i + 1) + " output " + std::to_string(k) +
                 " differs from the oracle";
        break;
      }
    }
  }
  const double secs = now_seconds() - t0 + build_seconds;
  if (pass && secs >= 120) {
    pass = false;
    detail = "too slow";
  }
  if (pass) {
    std::ostringstream os;
    os << corpus.size() << " programs, " << outputs
       << " outputs bit-identical to the dual oracle (0 ULP), "
       << std::fixed << secs << " s";
    detail = os.str();
  }
  report(1, "oracle equivalence", pass, detail);
}

void criterion_2(const std::vector<CorpusEntry>& corpus) {
  bool pass = true;
  std::string detail;
  for (size_t i = 0; i < corpus.size() && pass; ++i) {
    const CorpusEntry& e = corpus[i];
    const EngineOutcome with_ad = run_engine(e.prep, e.inputs, e.gen.seed_input, true);
    const EngineOutcome without = run_engine(e.prep, e.inputs, -1, false);
    if (!with_ad.ok || !without.ok ||
        with_ad.printed.size() != without.printed.size()) {
      pass = false;
      detail = "program " + std::to_string(i + 1) + " did not run cleanly both ways";
      break;
    }
    for (size_t k = 0; k < with_ad.printed.size(); ++k)
      if (bits(with_ad.printed[k]) != bits(without.printed[k])) {
        pass = false;
        detail = "program " + std::to_string(i + 1) + " primal output " +
                 std::to_string(k) + " changed under instrumentation";
      }
    for (size_t k = 0; k < with_ad.out_values.size(); ++k)
      if (bits(with_ad.out_values[k]) != bits(without.out_values[k]))
        pass = false;
  }
  if (pass) {
    Prepared burgers = prepare_source(burgers_source(20, 10));
    const std::vector<double> in = {0.0};
    const EngineOutcome a = run_engine(burgers, in, -1, true);
    const EngineOutcome b = run_engine(burgers, in, -1, false);
    if (!a.ok || !b.ok || bits(a.out_values.at(0)) != bits(b.out_values.at(0))) {
      pass = false;
      detail = "burgers primal output changed under instrumentation";
    }
  }
  if (pass)
    detail = std::to_string(corpus.size()) +
             " programs plus the burgers benchmark: primal outputs bit-identical";
  report(2, "non-interference", pass, detail);
}

void criterion_3(const std::vector<CorpusEntry>& corpus) {
  const double h = 1e-6;
  int checked_programs = 0, checked_outputs = 0;
  bool pass = true;
  std::string detail;
  double worst = 0;
  for (size_t i = 0; i < corpus.size() && pass; ++i) {
    const CorpusEntry& e = corpus[i];
    if (!e.gen.fd_safe)
      continue;
    if (!fd_path_stable(*e.prep.ast, e.inputs, e.gen.seed_input, h))
      continue;
    const EngineOutcome engine = run_engine(e.prep, e.inputs, e.gen.seed_input, true);
    const std::vector<double> fd = finite_diff(e.prep, e.inputs, e.gen.seed_input, h);
    if (!engine.ok || fd.size() != engine.out_dots.size()) {
      pass = false;
      detail = "program " + std::to_string(i + 1) + " failed to run";
      break;
    }
    ++checked_programs;
    for (size_t k = 0; k < fd.size(); ++k) {
      ++checked_outputs;
      const double rel =
          std::fabs(engine.out_dots[k] - fd[k]) / (1.0 + std::fabs(fd[k]));
      worst = std::max(worst, rel);
      if (rel > 1e-4) {
        pass = false;
        detail = "program " + std::to_string(i + 1) + " output " + std::to_string(k) +
                 " misses the fd tolerance (rel " + std::to_string(rel) + ")";
      }
    }
  }
  if (pass && checked_programs < 100) {
    pass = false;
    detail = "smooth subset too small: " + std::to_string(checked_programs);
  }
  if (pass) {
    std::ostringstream os;
    os << checked_programs << " smooth programs, " << checked_outputs
       << " outputs within 1e-4 of central differences (worst rel err " << worst << ")";
    detail = os.str();
  }
  report(3, "gradient check", pass, detail);
}

// --------------------------------------------------------------------------

struct TrickCase {
  std::string label;
  bool exact = false;
};

void criterion_4() {
  std::vector<TrickCase> cases;
  auto add = [&](const std::string& label, bool ok) { cases.push_back({label, ok}); };

  constexpr uint64_t kAbs64 = 0x7FFFFFFFFFFFFFFFull;
  constexpr uint64_t kSign64 = 0x8000000000000000ull;
  constexpr uint32_t kAbs32 = 0x7FFFFFFFu;
  constexpr uint32_t kSign32 = 0x80000000u;

  // Granularity drivers: each packs one operand/dot pair at a given lane
  // position and extracts the resulting dot lane.
  struct Gran {
    const char* name;
    std::function<uint64_t(BitOp, uint64_t mask, uint64_t y, uint64_t dy)> run;
    bool is32;
  };
  std::vector<Gran> grans;
  grans.push_back({"i64", [&](BitOp op, uint64_t mask, uint64_t y, uint64_t dy) {
                     return ad_bitlogic(op, make_i64(mask), make_i64(y), make_i64(0),
                                        make_i64(dy))
                         .u64();
                   },
                   false});
  grans.push_back({"i32", [&](BitOp op, uint64_t mask, uint64_t y, uint64_t dy) {
                     return static_cast<uint64_t>(
                         ad_bitlogic(op, make_i32(static_cast<uint32_t>(mask)),
                                     make_i32(static_cast<uint32_t>(y)), make_i32(0),
                                     make_i32(static_cast<uint32_t>(dy)))
                             .u32());
                   },
                   true});
  grans.push_back({"v128/64", [&](BitOp op, uint64_t mask, uint64_t y, uint64_t dy) {
                     return ad_bitlogic(op, make_v128(0x1234, mask), make_v128(0, y),
                                        make_v128(0, 0), make_v128(0, dy))
                         .lane64(1);
                   },
                   false});
  grans.push_back({"v128/32", [&](BitOp op, uint64_t mask, uint64_t y, uint64_t dy) {
                     // place the pattern in 32-bit sub-lane 2 (no 64-bit match)
                     Value x = make_v128(0, 0x12345u);
                     x.set_lane32(2, static_cast<uint32_t>(mask));
                     Value yy = make_v128(0, 0);
                     yy.set_lane32(2, static_cast<uint32_t>(y));
                     yy.set_lane32(3, 0x7F000000u); // defeat 64-bit zero patterns
                     Value dyy = make_v128(0, 0);
                     dyy.set_lane32(2, static_cast<uint32_t>(dy));
                     return static_cast<uint64_t>(
                         ad_bitlogic(op, x, yy, make_v128(0, 0), dyy).lane32(2));
                   },
                   true});

  for (const Gran& g : grans) {
    const uint64_t absmask = g.is32 ? kAbs32 : kAbs64;
    const uint64_t signmask = g.is32 ? kSign32 : kSign64;
    const uint64_t ones = g.is32 ? 0xFFFFFFFFull : ~0ull;
    const uint64_t pos = g.is32 ? std::bit_cast<uint32_t>(3.5f) : bits(3.5);
    const uint64_t neg = g.is32 ? std::bit_cast<uint32_t>(-3.5f) : bits(-3.5);
    const uint64_t dy = g.is32 ? std::bit_cast<uint32_t>(1.5f) : bits(1.5);
    const uint64_t dy_neg = dy ^ signmask;

    add(std::string("fabs+ ") + g.name,
        g.run(BitOp::And, absmask, pos, dy) == dy);
    add(std::string("fabs- ") + g.name,
        g.run(BitOp::And, absmask, neg, dy) == dy_neg);
    add(std::string("neg+ ") + g.name,
        g.run(BitOp::Xor, signmask, pos, dy) == dy_neg);
    add(std::string("neg- ") + g.name,
        g.run(BitOp::Xor, signmask, neg, dy) == dy_neg);
    add(std::string("negabs+ ") + g.name,
        g.run(BitOp::Or, signmask, pos, dy) == dy_neg);
    add(std::string("negabs- ") + g.name,
        g.run(BitOp::Or, signmask, neg, dy) == dy);
    add(std::string("select-and-ones ") + g.name,
        g.run(BitOp::And, ones, pos, dy) == dy);
    add(std::string("select-and-zeros ") + g.name,
        g.run(BitOp::And, 0, pos, dy) == 0);
    add(std::string("select-or-zero ") + g.name,
        g.run(BitOp::Or, 0, pos, dy) == dy);
    add(std::string("nan-mask ") + g.name,
        g.run(BitOp::And, absmask, absmask, dy) == 0);
  }

  // Listing-1 shape: 128-bit and against (0x7FFF.., 0x0) computes |x|.
  {
    AdPolicy policy;
    Program p = parse_asm(R"(
sb 0x1000 tmps: F64 I64 V128 V128 I64 F64
  t0 = LD:F64(I64{0x5000})
  t1 = ReinterpF64asI64(t0)
  t2 = 64x2toV128(I64{0x0},t1)
  t3 = AndV128(t2,V128{0x00000000000000007FFFFFFFFFFFFFFF})
  t4 = V128to64lo(t3)
  t5 = ReinterpI64asF64(t4)
  ST(I64{0x6000}) = t5
  halt
)");
    Program ip = instrument_program(p, policy);
    Machine m(ip);
    uint8_t vb[8], db[8];
    for (int i = 0; i < 8; ++i) {
      vb[i] = static_cast<uint8_t>(bits(-3.0) >> (8 * i));
      db[i] = static_cast<uint8_t>(bits(1.0) >> (8 * i));
    }
    m.memory().write(0x5000, vb);
    m.shadow().write(0x5000, db);
    const bool ran = m.run().reason == StopReason::Halted;
    auto rd = [&](const ShadowMap& s) {
      uint8_t b[8];
      s.read(0x6000, b);
      uint64_t u = 0;
      for (int i = 0; i < 8; ++i)
        u |= static_cast<uint64_t>(b[i]) << (8 * i);
      return u;
    };
    add("andpd-abs value", ran && rd(m.memory()) == bits(3.0));
    add("andpd-abs negated dot", ran && rd(m.shadow()) == bits(-1.0));
  }

  // Listing-2 shape: mask select between 2+a and 2a, dots 1 and 2.
  {
    Prepared prep = prepare_source(R"(
var a: f64;
var r: f64;
a = input(0);
r = a + select(a < 0.0, 2.0, a);
print(r);
)");
    const EngineOutcome lo = run_engine(prep, std::vector<double>{-1.0}, 0, true);
    const EngineOutcome hi = run_engine(prep, std::vector<double>{3.0}, 0, true);
    add("mask-select low branch",
        lo.ok && lo.out_values.at(0) == 1.0 && lo.out_dots.at(0) == 1.0);
    add("mask-select high branch",
        hi.ok && hi.out_values.at(0) == 6.0 && hi.out_dots.at(0) == 2.0);
  }

  int exact = 0;
  std::string first_bad;
  for (const TrickCase& c : cases) {
    if (c.exact)
      ++exact;
    else if (first_bad.empty())
      first_bad = c.label;
  }
  const bool pass = exact == static_cast<int>(cases.size()) && cases.size() >= 24;
  std::ostringstream os;
  if (pass)
    os << exact << " directed cases exact across i32/i64 and both V128 granularities";
  else
    os << exact << "/" << cases.size() << " exact; first failure: " << first_bad;
  report(4, "bit-trick suite", pass, os.str());
}

// --------------------------------------------------------------------------

void criterion_5() {
  bool pass = true;
  std::string detail;

  // directed: a value match with a dot mismatch must not write
  {
    Machine m(parse_asm("sb 0x1000 tmps:\n  halt\n"));
    auto byte_vec = [](double v) {
      std::vector<uint8_t> b(8);
      for (int i = 0; i < 8; ++i)
        b[i] = static_cast<uint8_t>(bits(v) >> (8 * i));
      return b;
    };
    m.memory().write(0x9000, byte_vec(1.0));
    m.shadow().write(0x9000, byte_vec(0.5));
    auto out = m.cas_step(0x9000, byte_vec(1.0), byte_vec(2.0), byte_vec(0.0),
                          byte_vec(1.0), true);
    if (out.success || m.memory().read_vec(0x9000, 8) != byte_vec(1.0) ||
        m.shadow().read_vec(0x9000, 8) != byte_vec(0.5)) {
      pass = false;
      detail = "dot mismatch wrote anyway";
    }
    auto ok = m.cas_step(0x9000, byte_vec(1.0), byte_vec(2.0), byte_vec(0.5),
                         byte_vec(1.0), true);
    if (!ok.success || m.memory().read_vec(0x9000, 8) != byte_vec(2.0) ||
        m.shadow().read_vec(0x9000, 8) != byte_vec(1.0)) {
      pass = false;
      detail = "matching dual comparison did not write both locations";
    }
  }

  // two threads accumulate through instrumented CAS retry loops
  if (pass) {
    const char* loop = R"(
entry 0x1000
sb 0x1000 tmps: I64 I1 F64
  t0 = GET:I64(0)
  t1 = CmpEQ64(t0,I64{0x4})
  if (t1) goto 0x4000
  t2 = LD:F64(I64{0x9000})
  PUT(16) = t2
  if (I1{0x1}) goto 0x2000
sb 0x2000 tmps: F64 F64 F64 I64 I64 I1
  t0 = GET:F64(16)
  t1 = AddF64(t0,GET:F64(8))
  t2 = CAS(I64{0x9000} :: t0 -> t1)
  t3 = ReinterpF64asI64(t2)
  t4 = ReinterpF64asI64(t0)
  t5 = CmpEQ64(t3,t4)
  if (t5) goto 0x3000
  if (I1{0x1}) goto 0x1000
sb 0x3000 tmps: I64
  t0 = GET:I64(0)
  PUT(0) = Add64(t0,I64{0x1})
  if (I1{0x1}) goto 0x1000
sb 0x4000 tmps:
  halt
)";
    AdPolicy policy;
    Program prog = instrument_program(parse_asm(loop), policy);
    auto seed_thread = [](Machine& m, unsigned tid, double x, double dx) {
      auto g = m.guest(tid);
      for (int i = 0; i < 8; ++i) {
        g[8 + i] = static_cast<uint8_t>(bits(x) >> (8 * i));
        g[1024 + 8 + i] = static_cast<uint8_t>(bits(dx) >> (8 * i));
      }
    };
    auto accum = [&](const ShadowMap& s) {
      uint8_t b[8];
      s.read(0x9000, b);
      uint64_t u = 0;
      for (int i = 0; i < 8; ++i)
        u |= static_cast<uint64_t>(b[i]) << (8 * i);
      return u;
    };

    Machine seq(prog);
    seq.add_thread(0x1000);
    seed_thread(seq, 0, 1.5, 0.25);
    seed_thread(seq, 1, 2.25, 0.5);
    seq.run();
    seq.run_threads(0);
    const uint64_t want_value = accum(seq.memory());
    const uint64_t want_dot = accum(seq.shadow());
    if (std::bit_cast<double>(want_value) != 4 * 1.5 + 4 * 2.25 ||
        std::bit_cast<double>(want_dot) != 4 * 0.25 + 4 * 0.5) {
      pass = false;
      detail = "sequential oracle produced an unexpected total";
    }
    for (uint64_t seed = 1; pass && seed <= 10; ++seed) {
      Machine m(prog);
      m.add_thread(0x1000);
      seed_thread(m, 0, 1.5, 0.25);
      seed_thread(m, 1, 2.25, 0.5);
      if (m.run_threads(seed).reason != StopReason::Halted ||
          accum(m.memory()) != want_value || accum(m.shadow()) != want_dot) {
        pass = false;
        detail = "schedule seed " + std::to_string(seed) +
                 " differs from the sequential oracle";
      }
    }
  }
  if (pass)
    detail = "dual comparison and two-thread accumulation hold for 10 schedule seeds";
  report(5, "CAS suite", pass, detail);
}

void criterion_6() {
  BenchmarkConfig cfg;
  cfg.nx = 20;
  cfg.nt = 10;
  cfg.reps = 3;
  const BenchReport rep = bench_burgers(cfg);
  std::ostringstream os;
  bool pass = rep.ok && rep.dot_bit_equal && rep.fd_rel_err <= 1e-4 && rep.shadow_pages_ok;
  if (!pass) {
    os << (rep.error.empty() ? "tolerances missed" : rep.error);
  } else {
    os.precision(3);
    os << "dot bit-identical to the oracle, fd rel err " << rep.fd_rel_err
       << ", shadow pages " << rep.shadow_pages << " <= bound; slow-down factor "
       << rep.slowdown << " (reported only)";
  }
  report(6, "burgers benchmark", pass, os.str());
}

void criterion_7(const std::string& dir) {
  auto cases = discover_limitation_cases(dir);
  bool pass = cases.size() >= 4;
  std::string detail = pass ? "" : "corpus has fewer than 4 cases";
  for (const auto& c : cases) {
    const LimitationOutcome out = run_limitation_case(c);
    if (!out.pass) {
      pass = false;
      detail = c.name + ": " + out.detail;
      break;
    }
  }
  if (pass)
    detail = std::to_string(cases.size()) +
             " pinned wrong-by-design dots reproduced bit-exactly (golden values)";
  report(7, "limitation corpus", pass, detail);
}

void criterion_8() {
  bool pass = true;
  std::string detail;
  std::mt19937_64 rng(20240817);
  const double h = 1e-6;

  auto sample = [&](std::string_view name, int which) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double r = u(rng);
    if (name == "asin" || name == "acos")
      return 0.9 * r;
    if (name == "log" || name == "log10" || name == "sqrt")
      return 0.25 + 2.0 * (r + 1.0);
    if (name == "tan")
      return 1.2 * r;
    if (name == "pow")
      return which == 0 ? 0.5 + 2.0 * (r + 1.0) : 3.0 * r;
    if (name == "fmod")
      return which == 0 ? 5.0 * r : 1.5 + (r + 1.0);
    if (name == "ldexp")
      return which == 0 ? 5.0 * r : std::floor(8.0 * r);
    if (name == "exp" || name == "sinh" || name == "cosh")
      return 3.0 * r;
    if (name == "floor" || name == "ceil")
      return 8.0 * r + 0.5; // off the lattice by construction below
    return 4.0 * r;
  };

  int points_total = 0;
  for (const MathCall& f : math_calls()) {
    const std::string_view name = f.name;
    int points = 0;
    while (points < 1000 && pass) {
      double a1 = sample(name, 0);
      double a2 = f.arity == 2 ? sample(name, 1) : 0.0;
      if ((name == "floor" || name == "ceil") &&
          std::fabs(a1 - std::round(a1)) < 1e-3)
        continue;
      if (name == "fabs" && std::fabs(a1) < 1e-3)
        continue;
      if (name == "fmod" && (std::fabs(std::fmod(a1, a2)) < 1e-3 ||
                             std::fabs(std::fmod(a1, a2)) > std::fabs(a2) - 1e-3))
        continue;
      ++points;
      ++points_total;
      for (int wrt = 0; wrt < f.arity; ++wrt) {
        if (name == "ldexp" && wrt == 1)
          continue; // integral argument
        const double p1 = wrt == 0 ? a1 + h : a1;
        const double p2 = wrt == 1 ? a2 + h : a2;
        const double m1 = wrt == 0 ? a1 - h : a1;
        const double m2 = wrt == 1 ? a2 - h : a2;
        const double fd = (math_value(f, p1, p2) - math_value(f, m1, m2)) / (2 * h);
        const double dot = math_dot(f, a1, a2, wrt == 0 ? 1.0 : 0.0, wrt == 1 ? 1.0 : 0.0);
        if (std::fabs(dot - fd) > 1e-5 * (1.0 + std::fabs(fd))) {
          pass = false;
          std::ostringstream os;
          os << name << " at (" << a1 << ", " << a2 << ") wrt " << wrt << ": dot "
             << dot << " vs fd " << fd;
          detail = os.str();
        }
      }
    }
  }

  // The wrapped sine is analytic; without wrappers the table-based inline
  // sine loses the derivative outside the small-argument interval.
  if (pass) {
    const char* sine = "var x: f64;\nvar y: f64;\nx = input(0);\ny = sin(x);\nprint(y);\n";
    Prepared wrapped = prepare_source(sine, true);
    Prepared blackbox = prepare_source(sine, false);
    for (double x : {0.3, 0.5, 0.8, -0.6}) {
      const EngineOutcome w = run_engine(wrapped, std::vector<double>{x}, 0, true);
      const EngineOutcome b = run_engine(blackbox, std::vector<double>{x}, 0, true);
      if (!w.ok || bits(w.out_dots.at(0)) != bits(std::cos(x) * 1.0)) {
        pass = false;
        detail = "wrapped sine dot is not exactly cos(x)*dx";
      } else if (!b.ok || b.out_dots.at(0) == std::cos(x)) {
        pass = false;
        detail = "black-box sine unexpectedly produced the analytic derivative";
      } else if (b.out_dots.at(0) != 0.0) {
        pass = false;
        detail = "black-box sine dot should collapse to zero via the rounding trick";
      }
    }
  }
  if (pass)
    detail = "20 wrappers x 1000 points within 1e-5*(1+|fd|); wrapper on/off contrast reproduced";
  report(8, "math wrappers", pass, detail);
}

void criterion_9() {
  bool pass = true;
  std::string detail;
  std::mt19937_64 rng(424242);

  int done = 0;
  while (done < 1'000'000 && pass) {
    const uint64_t b = rng();
    if (((b >> 52) & 0x7FF) == 0x7FF && (b & 0xFFFFFFFFFFFFFull))
      continue; // NaN payloads are not preserved through the real line
    if (encode_binary64(decode_binary64(b)) != b) {
      pass = false;
      detail = "binary64 round-trip failed";
    }
    ++done;
  }
  done = 0;
  while (done < 1'000'000 && pass) {
    const auto b = static_cast<uint32_t>(rng());
    if (((b >> 23) & 0xFF) == 0xFF && (b & 0x7FFFFFu))
      continue;
    if (encode_binary32(decode_binary32(b)) != b) {
      pass = false;
      detail = "binary32 round-trip failed";
    }
    ++done;
  }
  done = 0;
  while (done < 10'000 && pass) {
    const uint64_t b = rng();
    if (((b >> 52) & 0x7FF) == 0x7FF)
      continue; // finite doubles only
    if (x87_to_f64(f64_to_x87(b)) != b) {
      pass = false;
      detail = "x87 round-trip failed";
    }
    ++done;
  }
  if (pass)
    detail = "10^6 binary32 + 10^6 binary64 round-trips and 10^4 x87 round-trips exact";
  report(9, "codec", pass, detail);
}

void criterion_10() {
  const char* cube = "var x: f64;\nvar y: f64;\nx = input(0);\ny = x*x*x;\nprint(y);\n";
  Prepared prep = prepare_source(cube);
  bool pass = true;
  std::string detail;

  MonitorSession session(prep, std::vector<double>{4.0}, -1);
  if (session.command("setdot 10000 000000000000F03F") != "ok")
    pass = false;
  if (session.command("continue") != "halted")
    pass = false;
  const std::string via_monitor = session.command("dot 20000 8");

  // the client-request route: dg_set_dot/dg_get_dot from inside the program
  Prepared client = prepare_source(
      "var x: f64;\nvar y: f64;\nvar d: f64;\nx = input(0);\ndg_set_dot(x, 1.0);\n"
      "y = x*x*x;\nd = dg_get_dot(y);\nprint(y);\nprint(d);\n");
  const EngineOutcome out = run_engine(client, std::vector<double>{4.0}, -1, true);
  if (!out.ok || out.out_values.size() != 2) {
    pass = false;
    detail = "client-request program failed";
  } else {
    std::ostringstream os;
    static const char* digits = "0123456789ABCDEF";
    const uint64_t dbits = bits(out.out_values.at(1)); // the dot, read as a value
    for (int i = 0; i < 8; ++i) {
      if (i)
        os << ' ';
      os << digits[(dbits >> (8 * i + 4)) & 0xF] << digits[(dbits >> (8 * i)) & 0xF];
    }
    if (os.str() != via_monitor) {
      pass = false;
      detail = "monitor bytes '" + via_monitor + "' differ from client request bytes '" +
               os.str() + "'";
    }
    if (out.out_values.at(1) != 48.0)
      pass = false;
  }
  if (pass)
    detail = "setdot/run/dot session matches client-request results byte for byte";
  report(10, "monitor REPL", pass, detail);
}

} // namespace

int main(int argc, char** argv) {
  std::string limitations_dir = DOTVM_SOURCE_DIR "/limitations";
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--limitations")
      limitations_dir = argv[i + 1];

  const double t0 = now_seconds();
  std::vector<CorpusEntry> corpus = build_corpus();
  const double build_seconds = now_seconds() - t0;

  criterion_1(corpus, build_seconds);
  criterion_2(corpus);
  criterion_3(corpus);
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7(limitations_dir);
  criterion_8();
  criterion_9();
  criterion_10();

  if (failures)
    std::printf("%d criterion(s) failed\n", failures);
  else
    std::printf("all criteria passed\n");
  return failures == 0 ? 0 : 1;
}
