#include "dotvm/machine.hpp"

#include "dotvm/bitlogic.hpp"
#include "dotvm/builtin_names.hpp"
#include "dotvm/fpcodec.hpp"
#include "dotvm/mathwrap.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <ostream>
#include <random>
#include <sstream>

namespace dotvm {

namespace {

std::string shortest_decimal(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double f64_of(uint64_t bits) { return std::bit_cast<double>(bits); }
uint64_t bits_of(double v) { return std::bit_cast<uint64_t>(v); }
float f32_of(uint32_t bits) { return std::bit_cast<float>(bits); }
uint32_t bits_of(float v) { return std::bit_cast<uint32_t>(v); }

uint64_t neg64(uint64_t b) { return b ^ 0x8000000000000000ull; }
uint32_t neg32(uint32_t b) { return b ^ 0x80000000u; }

uint64_t scalar64(Op o, uint64_t a, uint64_t b) {
  switch (o) {
  case Op::AddF64: return bits_of(f64_of(a) + f64_of(b));
  case Op::SubF64: return bits_of(f64_of(a) - f64_of(b));
  case Op::MulF64: return bits_of(f64_of(a) * f64_of(b));
  case Op::DivF64: return bits_of(f64_of(a) / f64_of(b));
  case Op::SqrtF64: return bits_of(std::sqrt(f64_of(a)));
  case Op::NegF64: return neg64(a);
  case Op::AbsF64: return a & 0x7FFFFFFFFFFFFFFFull;
  default: break;
  }
  return 0;
}

uint32_t scalar32(Op o, uint32_t a, uint32_t b) {
  switch (o) {
  case Op::AddF32: return bits_of(f32_of(a) + f32_of(b));
  case Op::SubF32: return bits_of(f32_of(a) - f32_of(b));
  case Op::MulF32: return bits_of(f32_of(a) * f32_of(b));
  case Op::DivF32: return bits_of(f32_of(a) / f32_of(b));
  case Op::SqrtF32: return bits_of(std::sqrt(f32_of(a)));
  case Op::NegF32: return neg32(a);
  case Op::AbsF32: return a & 0x7FFFFFFFu;
  default: break;
  }
  return 0;
}

// VEX-style condition code for scalar fp comparison.
uint32_t fcmp_code(double a, double b) {
  if (std::isnan(a) || std::isnan(b))
    return 0x45;
  if (a == b)
    return 0x40;
  if (a < b)
    return 0x01;
  return 0x00;
}

} // namespace

Machine::Machine(const Program& prog) : prog_(prog) {
  threads_.emplace_back();
  threads_[0].pc = prog.entry;
  for (const auto& seg : prog.data)
    memory_.write(seg.addr, seg.bytes);
  register_builtins();
}

void Machine::register_dirty(const std::string& name, DirtyFn fn) {
  if (!dirties_.emplace(name, std::move(fn)).second)
    throw std::invalid_argument("dirty call already registered: " + name);
}

void Machine::register_ccall(const std::string& name, CCallFn fn) {
  if (!ccalls_.emplace(name, std::move(fn)).second)
    throw std::invalid_argument("ccall already registered: " + name);
}

unsigned Machine::add_thread(uint64_t entry) {
  ThreadContext t;
  t.pc = entry;
  threads_.push_back(std::move(t));
  return static_cast<unsigned>(threads_.size() - 1);
}

std::span<uint8_t> Machine::guest(unsigned thread) {
  return {threads_.at(thread).guest.data(), threads_.at(thread).guest.size()};
}

uint64_t Machine::current_imark(unsigned thread) const { return threads_.at(thread).imark; }
bool Machine::halted(unsigned thread) const { return threads_.at(thread).halted; }
uint64_t Machine::pc(unsigned thread) const { return threads_.at(thread).pc; }

void Machine::fault(ThreadContext& t, std::string msg) const {
  Fault f;
  f.message = std::move(msg);
  f.block_addr = t.block ? t.block->addr : t.pc;
  f.stmt_index = t.block ? static_cast<int>(t.stmt_index) : -1;
  throw FaultException{std::move(f)};
}

void Machine::write_guest(ThreadContext& t, uint32_t offset, const Value& v) {
  const unsigned w = type_width(v.type);
  if (offset + w > t.guest.size())
    fault(t, "guest-state write out of range");
  std::memcpy(t.guest.data() + offset, v.b.data(), w);
}

Value Machine::read_guest(ThreadContext& t, uint32_t offset, IrType type) {
  const unsigned w = type_width(type);
  if (offset + w > t.guest.size())
    fault(t, "guest-state read out of range");
  return value_from_bytes(type, {t.guest.data() + offset, w});
}

Value Machine::eval(const Expr& e, ThreadContext& t) {
  switch (e.kind) {
  case Expr::Kind::RdTmp:
    return t.tmps[e.tmp];
  case Expr::Kind::Get:
    return read_guest(t, e.offset, e.type);
  case Expr::Kind::Load: {
    const uint64_t addr = eval(*e.args[0], t).u64();
    Value v = zero_value(e.type);
    memory_.read(addr, {v.b.data(), type_width(e.type)});
    return v;
  }
  case Expr::Kind::Const:
    return e.literal;
  case Expr::Kind::ITE:
    return eval(*e.args[0], t).truthy() ? eval(*e.args[1], t) : eval(*e.args[2], t);
  case Expr::Kind::CCall: {
    auto it = ccalls_.find(e.name);
    if (it == ccalls_.end())
      fault(t, "unhandled ccall " + e.name);
    std::vector<Value> args;
    args.reserve(e.args.size());
    for (const auto& a : e.args)
      args.push_back(eval(*a, t));
    try {
      return it->second(args);
    } catch (const std::exception& ex) {
      fault(t, e.name + ": " + ex.what());
    }
  }
  case Expr::Kind::Op:
    return eval_op(e, t);
  }
  fault(t, "corrupt expression");
}

Value Machine::eval_op(const Expr& e, ThreadContext& t) {
  if (e.op == Op::Unknown)
    fault(t, "unhandled opcode " + e.name);
  const OpInfo& info = op_info(e.op);
  Value a = eval(*e.args[0], t);
  Value b = info.arity > 1 ? eval(*e.args[1], t) : Value{};

  switch (info.cls) {
  case OpClass::ScalarF64: {
    Value r = zero_value(IrType::F64);
    r.set_lane64(0, scalar64(e.op, a.u64(), b.u64()));
    return r;
  }
  case OpClass::ScalarF32: {
    Value r = zero_value(IrType::F32);
    r.set_lane32(0, scalar32(e.op, a.u32(), b.u32()));
    return r;
  }
  case OpClass::SimdF64: {
    static const std::unordered_map<Op, Op> to_scalar = {
        {Op::Add64Fx2, Op::AddF64}, {Op::Sub64Fx2, Op::SubF64},
        {Op::Mul64Fx2, Op::MulF64}, {Op::Div64Fx2, Op::DivF64},
        {Op::Sqrt64Fx2, Op::SqrtF64}};
    Value r = zero_value(IrType::V128);
    for (unsigned i = 0; i < 2; ++i)
      r.set_lane64(i, scalar64(to_scalar.at(e.op), a.lane64(i), b.lane64(i)));
    return r;
  }
  case OpClass::SimdF32: {
    static const std::unordered_map<Op, Op> to_scalar = {
        {Op::Add32Fx4, Op::AddF32}, {Op::Sub32Fx4, Op::SubF32},
        {Op::Mul32Fx4, Op::MulF32}, {Op::Div32Fx4, Op::DivF32},
        {Op::Sqrt32Fx4, Op::SqrtF32}};
    Value r = zero_value(IrType::V128);
    for (unsigned i = 0; i < 4; ++i)
      r.set_lane32(i, scalar32(to_scalar.at(e.op), a.lane32(i), b.lane32(i)));
    return r;
  }
  case OpClass::Lane0F64: {
    static const std::unordered_map<Op, Op> to_scalar = {
        {Op::Add64F0x2, Op::AddF64}, {Op::Sub64F0x2, Op::SubF64},
        {Op::Mul64F0x2, Op::MulF64}, {Op::Div64F0x2, Op::DivF64},
        {Op::Sqrt64F0x2, Op::SqrtF64}};
    Value r = a; // upper lane passes through the first operand
    r.set_lane64(0, scalar64(to_scalar.at(e.op), a.lane64(0), b.lane64(0)));
    return r;
  }
  case OpClass::Lane0F32: {
    static const std::unordered_map<Op, Op> to_scalar = {
        {Op::Add32F0x4, Op::AddF32}, {Op::Sub32F0x4, Op::SubF32},
        {Op::Mul32F0x4, Op::MulF32}, {Op::Div32F0x4, Op::DivF32},
        {Op::Sqrt32F0x4, Op::SqrtF32}};
    Value r = a;
    r.set_lane32(0, scalar32(to_scalar.at(e.op), a.lane32(0), b.lane32(0)));
    return r;
  }
  case OpClass::Convert:
    switch (e.op) {
    case Op::F64toF32: {
      Value r = zero_value(IrType::F32);
      r.set_lane32(0, encode_binary32(a.f64()));
      return r;
    }
    case Op::F32toF64: return make_f64(static_cast<double>(a.f32()));
    case Op::I64toF64: return make_f64(static_cast<double>(static_cast<int64_t>(a.u64())));
    case Op::F64toI64: return make_i64(static_cast<uint64_t>(f64_to_i64_rne(a.f64())));
    default: break;
    }
    break;
  case OpClass::Reinterp: {
    Value r = zero_value(info.result);
    std::memcpy(r.b.data(), a.b.data(), type_width(info.result));
    return r;
  }
  case OpClass::Pack:
    switch (e.op) {
    case Op::Pack64x2toV128: // (hi, lo)
      return make_v128(b.u64(), a.u64());
    case Op::V128to64lo: return make_i64(a.lane64(0));
    case Op::V128to64hi: return make_i64(a.lane64(1));
    case Op::Pack32x4toV128: { // (a3, a2, a1, a0)
      Value r = zero_value(IrType::V128);
      r.set_lane32(3, a.u32());
      r.set_lane32(2, b.u32());
      r.set_lane32(1, eval(*e.args[2], t).u32());
      r.set_lane32(0, eval(*e.args[3], t).u32());
      return r;
    }
    case Op::Pack32x2to64: // (hi, lo)
      return make_i64((static_cast<uint64_t>(a.u32()) << 32) | b.u32());
    case Op::I64to32lo: return make_i32(static_cast<uint32_t>(a.u64()));
    case Op::I64to32hi: return make_i32(static_cast<uint32_t>(a.u64() >> 32));
    default: break;
    }
    break;
  case OpClass::Bitwise: {
    Value r = zero_value(info.result);
    const unsigned w = type_width(info.result);
    for (unsigned i = 0; i < w; ++i) {
      switch (e.op) {
      case Op::And32: case Op::And64: case Op::AndV128: r.b[i] = a.b[i] & b.b[i]; break;
      case Op::Or32: case Op::Or64: case Op::OrV128: r.b[i] = a.b[i] | b.b[i]; break;
      case Op::Xor32: case Op::Xor64: case Op::XorV128: r.b[i] = a.b[i] ^ b.b[i]; break;
      case Op::Not32: case Op::Not64: case Op::NotV128: r.b[i] = ~a.b[i]; break;
      default: break;
      }
    }
    return r;
  }
  case OpClass::IntArith: {
    const unsigned w = type_width(info.result);
    const uint64_t mask = w == 8 ? ~0ull : ((1ull << (8 * w)) - 1);
    const uint64_t x = a.u64() & mask;
    const uint64_t y = b.u64() & mask;
    uint64_t r = 0;
    switch (e.op) {
    case Op::Add8: case Op::Add16: case Op::Add32: case Op::Add64: r = x + y; break;
    case Op::Sub8: case Op::Sub16: case Op::Sub32: case Op::Sub64: r = x - y; break;
    case Op::Mul8: case Op::Mul16: case Op::Mul32: case Op::Mul64: r = x * y; break;
    case Op::Shl32: case Op::Shl64: r = x << (b.b[0] & (8 * w - 1)); break;
    case Op::Shr32: case Op::Shr64: r = x >> (b.b[0] & (8 * w - 1)); break;
    case Op::Sar32:
      r = static_cast<uint64_t>(
          static_cast<int32_t>(x) >> (b.b[0] & 31));
      break;
    case Op::Sar64:
      r = static_cast<uint64_t>(static_cast<int64_t>(x) >> (b.b[0] & 63));
      break;
    default: break;
    }
    Value out = zero_value(info.result);
    out.set_lane64(0, r & mask);
    return out;
  }
  case OpClass::Logic1: {
    const bool x = a.truthy();
    const bool y = info.arity > 1 && b.truthy();
    switch (e.op) {
    case Op::And1: return make_i1(x && y);
    case Op::Or1: return make_i1(x || y);
    case Op::Xor1: return make_i1(x != y);
    case Op::Not1: return make_i1(!x);
    default: break;
    }
    break;
  }
  case OpClass::CmpInt: {
    const uint64_t x = a.u64();
    const uint64_t y = b.u64();
    switch (e.op) {
    case Op::CmpEQ32: return make_i1(a.u32() == b.u32());
    case Op::CmpEQ64: return make_i1(x == y);
    case Op::CmpNE32: return make_i1(a.u32() != b.u32());
    case Op::CmpNE64: return make_i1(x != y);
    case Op::CmpLT32S: return make_i1(static_cast<int32_t>(a.u32()) < static_cast<int32_t>(b.u32()));
    case Op::CmpLT64S: return make_i1(static_cast<int64_t>(x) < static_cast<int64_t>(y));
    case Op::CmpLE32S: return make_i1(static_cast<int32_t>(a.u32()) <= static_cast<int32_t>(b.u32()));
    case Op::CmpLE64S: return make_i1(static_cast<int64_t>(x) <= static_cast<int64_t>(y));
    case Op::CmpLT32U: return make_i1(a.u32() < b.u32());
    case Op::CmpLT64U: return make_i1(x < y);
    default: break;
    }
    break;
  }
  case OpClass::CmpF:
    if (e.op == Op::CmpF64)
      return make_i32(fcmp_code(a.f64(), b.f64()));
    return make_i32(fcmp_code(a.f32(), b.f32()));
  case OpClass::CmpMask: {
    Value r = a; // lowest-lane forms pass the first operand's upper lanes through
    auto mask64 = [](bool c) { return c ? ~0ull : 0ull; };
    auto mask32 = [](bool c) { return c ? ~0u : 0u; };
    switch (e.op) {
    case Op::CmpLT64Fx2:
      for (unsigned i = 0; i < 2; ++i)
        r.set_lane64(i, mask64(f64_of(a.lane64(i)) < f64_of(b.lane64(i))));
      return r;
    case Op::CmpLT32Fx4:
      for (unsigned i = 0; i < 4; ++i)
        r.set_lane32(i, mask32(f32_of(a.lane32(i)) < f32_of(b.lane32(i))));
      return r;
    case Op::CmpLT64F0x2:
      r.set_lane64(0, mask64(f64_of(a.lane64(0)) < f64_of(b.lane64(0))));
      return r;
    case Op::CmpLE64F0x2:
      r.set_lane64(0, mask64(f64_of(a.lane64(0)) <= f64_of(b.lane64(0))));
      return r;
    case Op::CmpEQ64F0x2:
      r.set_lane64(0, mask64(f64_of(a.lane64(0)) == f64_of(b.lane64(0))));
      return r;
    case Op::CmpLT32F0x4:
      r.set_lane32(0, mask32(f32_of(a.lane32(0)) < f32_of(b.lane32(0))));
      return r;
    case Op::CmpLE32F0x4:
      r.set_lane32(0, mask32(f32_of(a.lane32(0)) <= f32_of(b.lane32(0))));
      return r;
    case Op::CmpEQ32F0x4:
      r.set_lane32(0, mask32(f32_of(a.lane32(0)) == f32_of(b.lane32(0))));
      return r;
    default: break;
    }
    break;
  }
  case OpClass::Unknown:
    break;
  }
  fault(t, std::string("unhandled opcode ") + info.name);
}

void Machine::exec_stmt(const Stmt& s, ThreadContext& t) {
  switch (s.kind) {
  case Stmt::Kind::WrTmp:
    t.tmps[s.tmp] = eval(*s.data, t);
    return;
  case Stmt::Kind::Put:
    write_guest(t, s.offset, eval(*s.data, t));
    return;
  case Stmt::Kind::Store: {
    const uint64_t addr = eval(*s.addr, t).u64();
    const Value v = eval(*s.data, t);
    memory_.write(addr, v.bytes());
    return;
  }
  case Stmt::Kind::StoreG: {
    if (!eval(*s.guard, t).truthy())
      return;
    const uint64_t addr = eval(*s.addr, t).u64();
    const Value v = eval(*s.data, t);
    memory_.write(addr, v.bytes());
    return;
  }
  case Stmt::Kind::Cas: {
    const uint64_t addr = eval(*s.addr, t).u64();
    const Value expected = eval(*s.expected, t);
    const Value newval = eval(*s.data, t);
    CasOutcome outcome =
        cas_step(addr, expected.bytes(), newval.bytes(), {}, {}, false);
    t.tmps[s.tmp] = value_from_bytes(expected.type, outcome.old_bytes);
    return;
  }
  case Stmt::Kind::Dirty: {
    if (s.guard && !eval(*s.guard, t).truthy()) {
      if (s.has_dest)
        t.tmps[s.tmp] = zero_value(t.block->tmp_types[s.tmp]);
      return;
    }
    auto it = dirties_.find(s.name);
    if (it == dirties_.end())
      fault(t, "unknown dirty call " + s.name);
    std::vector<Value> args;
    args.reserve(s.args.size());
    for (const auto& a : s.args)
      args.push_back(eval(*a, t));
    std::optional<IrType> dest_type;
    if (s.has_dest)
      dest_type = t.block->tmp_types[s.tmp];
    std::optional<Value> result;
    try {
      result = it->second(*this, args, dest_type);
    } catch (const std::exception& ex) {
      fault(t, s.name + ": " + ex.what());
    }
    if (s.has_dest) {
      if (!result)
        fault(t, "dirty call " + s.name + " produced no value");
      t.tmps[s.tmp] = *result;
    }
    return;
  }
  case Stmt::Kind::IMark:
    t.imark = s.imark_addr;
    return;
  case Stmt::Kind::Exit:
  case Stmt::Kind::Halt:
    return; // handled by the block loop
  }
}

bool Machine::exec_quantum(ThreadContext& t, const RunControl& rc, RunResult& res) {
  if (!t.mid_block) {
    auto it = prog_.blocks.find(t.pc);
    if (it == prog_.blocks.end())
      fault(t, "no superblock at target address");
    t.block = &it->second;
    t.stmt_index = 0;
    t.tmps.clear();
    t.tmps.reserve(t.block->tmp_types.size());
    for (IrType ty : t.block->tmp_types)
      t.tmps.push_back(zero_value(ty));
    res.superblocks_executed += 1;
  }
  t.mid_block = false;

  while (t.stmt_index < t.block->stmts.size()) {
    const Stmt& s = t.block->stmts[t.stmt_index];
    if (s.kind == Stmt::Kind::IMark && rc.breakpoints && !t.skip_bp_once &&
        rc.breakpoints->count(s.imark_addr)) {
      t.mid_block = true;
      t.skip_bp_once = true;
      t.imark = s.imark_addr;
      return false;
    }
    t.skip_bp_once = false;
    res.statements_executed += 1;
    if (s.kind == Stmt::Kind::Halt) {
      t.halted = true;
      return true;
    }
    if (s.kind == Stmt::Kind::Exit) {
      if (eval(*s.guard, t).truthy()) {
        t.pc = s.target;
        t.tmps.clear(); // temporaries live only for the superblock
        return true;
      }
      t.stmt_index += 1;
      continue;
    }
    exec_stmt(s, t);
    t.stmt_index += 1;
  }
  fault(t, "fell off the end of a superblock");
}

RunResult Machine::run(uint64_t fuel) {
  RunControl rc;
  rc.fuel = fuel;
  return resume(rc);
}

RunResult Machine::resume(const RunControl& rc) {
  RunResult res;
  ThreadContext& t = threads_[0];
  active_thread_ = 0;
  try {
    while (!t.halted) {
      if (!t.mid_block && res.superblocks_executed >= rc.fuel) {
        res.reason = StopReason::FuelExhausted;
        res.fault = Fault{"fuel exhausted", t.pc, -1};
        return res;
      }
      const bool boundary = exec_quantum(t, rc, res);
      if (!boundary) {
        res.reason = StopReason::Breakpoint;
        return res;
      }
      if (rc.single_block && !t.halted) {
        res.reason = StopReason::BlockStep;
        return res;
      }
    }
  } catch (FaultException& fe) {
    res.reason = StopReason::Faulted;
    res.fault = std::move(fe.fault);
    t.halted = true;
    return res;
  }
  res.reason = StopReason::Halted;
  return res;
}

RunResult Machine::run_threads(uint64_t schedule_seed, uint64_t fuel) {
  RunResult res;
  RunControl rc;
  std::mt19937_64 rng(schedule_seed);
  try {
    while (res.superblocks_executed < fuel) {
      std::vector<unsigned> alive;
      for (unsigned i = 0; i < threads_.size(); ++i)
        if (!threads_[i].halted)
          alive.push_back(i);
      if (alive.empty()) {
        res.reason = StopReason::Halted;
        return res;
      }
      const unsigned tid = alive[rng() % alive.size()];
      active_thread_ = tid;
      exec_quantum(threads_[tid], rc, res);
    }
  } catch (FaultException& fe) {
    res.reason = StopReason::Faulted;
    res.fault = std::move(fe.fault);
    return res;
  }
  res.reason = StopReason::FuelExhausted;
  res.fault = Fault{"fuel exhausted", 0, -1};
  return res;
}

CasOutcome Machine::cas_step(uint64_t addr, std::span<const uint8_t> expected,
                             std::span<const uint8_t> new_bytes,
                             std::span<const uint8_t> expected_shadow,
                             std::span<const uint8_t> new_shadow,
                             bool compare_shadow) {
  CasOutcome out;
  out.old_bytes = memory_.read_vec(addr, expected.size());
  bool match = std::memcmp(out.old_bytes.data(), expected.data(), expected.size()) == 0;
  if (compare_shadow) {
    const std::vector<uint8_t> old_shadow = shadow_.read_vec(addr, expected_shadow.size());
    match = match && std::memcmp(old_shadow.data(), expected_shadow.data(),
                                 expected_shadow.size()) == 0;
  }
  out.success = match;
  if (match) {
    memory_.write(addr, new_bytes);
    if (compare_shadow)
      shadow_.write(addr, new_shadow);
  }
  return out;
}

void Machine::register_builtins() {
  auto arg_check = [](const std::vector<Value>& args, size_t n, const char* name) {
    if (args.size() != n)
      throw std::invalid_argument(std::string(name) + ": bad argument count");
  };

  register_dirty(builtin::kX87Store,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType>) -> std::optional<Value> {
                   arg_check(args, 2, builtin::kX87Store);
                   const X87Bytes b = f64_to_x87(args[1].u64());
                   m.memory().write(args[0].u64(), b);
                   return std::nullopt;
                 });
  register_dirty(builtin::kX87Load,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType>) -> std::optional<Value> {
                   arg_check(args, 1, builtin::kX87Load);
                   X87Bytes b{};
                   m.memory().read(args[0].u64(), b);
                   Value v = zero_value(IrType::F64);
                   v.set_lane64(0, x87_to_f64(b));
                   return v;
                 });
  register_dirty(builtin::kShadowX87Store,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType>) -> std::optional<Value> {
                   arg_check(args, 2, builtin::kShadowX87Store);
                   const X87Bytes b = f64_to_x87(args[1].u64());
                   m.shadow().write(args[0].u64(), b);
                   return std::nullopt;
                 });
  register_dirty(builtin::kShadowX87Load,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType>) -> std::optional<Value> {
                   arg_check(args, 1, builtin::kShadowX87Load);
                   X87Bytes b{};
                   m.shadow().read(args[0].u64(), b);
                   Value v = zero_value(IrType::F64);
                   v.set_lane64(0, x87_to_f64(b));
                   return v;
                 });
  register_dirty(builtin::kShadowStore,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType>) -> std::optional<Value> {
                   arg_check(args, 2, builtin::kShadowStore);
                   m.shadow().write(args[0].u64(), args[1].bytes());
                   return std::nullopt;
                 });
  register_dirty(builtin::kShadowLoad,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType> dest) -> std::optional<Value> {
                   arg_check(args, 1, builtin::kShadowLoad);
                   const IrType ty = dest.value_or(IrType::F64);
                   Value v = zero_value(ty);
                   m.shadow().read(args[0].u64(), {v.b.data(), type_width(ty)});
                   return v;
                 });
  register_dirty(builtin::kSetDot,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType>) -> std::optional<Value> {
                   arg_check(args, 3, builtin::kSetDot);
                   const auto bytes = m.memory().read_vec(args[1].u64(), args[2].u64());
                   m.shadow().write(args[0].u64(), bytes);
                   return std::nullopt;
                 });
  register_dirty(builtin::kGetDot,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType>) -> std::optional<Value> {
                   arg_check(args, 3, builtin::kGetDot);
                   const auto bytes = m.shadow().read_vec(args[0].u64(), args[2].u64());
                   m.memory().write(args[1].u64(), bytes);
                   return std::nullopt;
                 });
  register_dirty(builtin::kSetDotReg,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType>) -> std::optional<Value> {
                   arg_check(args, 3, builtin::kSetDotReg);
                   const uint64_t off = args[0].u64();
                   const uint64_t len = args[2].u64();
                   auto g = m.guest(m.active_thread_);
                   if (off + len > kGuestSize)
                     throw std::invalid_argument("dg_set_dot_reg: offset out of range");
                   const auto bytes = m.memory().read_vec(args[1].u64(), len);
                   std::memcpy(g.data() + kGuestSize + off, bytes.data(), len);
                   return std::nullopt;
                 });
  register_dirty(builtin::kGetDotReg,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType>) -> std::optional<Value> {
                   arg_check(args, 3, builtin::kGetDotReg);
                   const uint64_t off = args[0].u64();
                   const uint64_t len = args[2].u64();
                   auto g = m.guest(m.active_thread_);
                   if (off + len > kGuestSize)
                     throw std::invalid_argument("dg_get_dot_reg: offset out of range");
                   m.memory().write(args[1].u64(), {g.data() + kGuestSize + off, len});
                   return std::nullopt;
                 });
  register_dirty(builtin::kPrintF64,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType>) -> std::optional<Value> {
                   arg_check(args, 1, builtin::kPrintF64);
                   const double v = args[0].f64();
                   std::string line = shortest_decimal(v);
                   if (m.echo_)
                     *m.echo_ << line << "\n";
                   m.printed_values_.push_back(v);
                   m.print_log_.push_back(std::move(line));
                   return std::nullopt;
                 });
  register_dirty(builtin::kReadInput,
                 [arg_check](Machine& m, const std::vector<Value>& args,
                             std::optional<IrType>) -> std::optional<Value> {
                   arg_check(args, 1, builtin::kReadInput);
                   const uint64_t slot = args[0].u64();
                   if (slot >= m.inputs_.size())
                     throw std::invalid_argument("read_input: no such input slot");
                   return make_f64(m.inputs_[slot]);
                 });

  for (const MathCall& f : math_calls()) {
    register_dirty(std::string(builtin::kMathPrefix) + f.name,
                   [&f, arg_check](Machine&, const std::vector<Value>& args,
                                   std::optional<IrType>) -> std::optional<Value> {
                     arg_check(args, static_cast<size_t>(f.arity), f.name);
                     const double a1 = args[0].f64();
                     const double a2 = f.arity == 2 ? args[1].f64() : 0.0;
                     return make_f64(math_value(f, a1, a2));
                   });
    register_ccall(std::string(builtin::kMathDotPrefix) + f.name,
                   [&f](const std::vector<Value>& args) -> Value {
                     const auto n = static_cast<size_t>(f.arity);
                     if (args.size() != 2 * n)
                       throw std::invalid_argument("math dot ccall: bad argument count");
                     const double a1 = args[0].f64();
                     const double a2 = n == 2 ? args[1].f64() : 0.0;
                     const double d1 = args[n].f64();
                     const double d2 = n == 2 ? args[n + 1].f64() : 0.0;
                     return make_f64(math_dot(f, a1, a2, d1, d2));
                   });
  }

  auto bit_ccall = [](BitOp op) {
    return [op](const std::vector<Value>& args) -> Value {
      if (args.size() != 4)
        throw std::invalid_argument("ad_bitlogic ccall: bad argument count");
      return ad_bitlogic(op, args[0], args[1], args[2], args[3]);
    };
  };
  register_ccall(builtin::kBitlogicAnd, bit_ccall(BitOp::And));
  register_ccall(builtin::kBitlogicOr, bit_ccall(BitOp::Or));
  register_ccall(builtin::kBitlogicXor, bit_ccall(BitOp::Xor));
}

} // namespace dotvm
