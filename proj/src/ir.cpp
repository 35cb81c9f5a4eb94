#include "dotvm/ir.hpp"

#include <bit>
#include <cassert>
#include <cstring>
#include <stdexcept>
#include <unordered_map>

namespace dotvm {

unsigned type_width(IrType t) {
  switch (t) {
  case IrType::I1:
  case IrType::I8:
    return 1;
  case IrType::I16:
    return 2;
  case IrType::I32:
  case IrType::F32:
    return 4;
  case IrType::I64:
  case IrType::F64:
    return 8;
  case IrType::V128:
    return 16;
  }
  return 0;
}

const char* type_name(IrType t) {
  switch (t) {
  case IrType::I1: return "I1";
  case IrType::I8: return "I8";
  case IrType::I16: return "I16";
  case IrType::I32: return "I32";
  case IrType::I64: return "I64";
  case IrType::F32: return "F32";
  case IrType::F64: return "F64";
  case IrType::V128: return "V128";
  }
  return "?";
}

std::optional<IrType> type_from_name(std::string_view name) {
  static const std::unordered_map<std::string_view, IrType> table = {
      {"I1", IrType::I1},   {"I8", IrType::I8},   {"I16", IrType::I16},
      {"I32", IrType::I32}, {"I64", IrType::I64}, {"F32", IrType::F32},
      {"F64", IrType::F64}, {"V128", IrType::V128}};
  auto it = table.find(name);
  if (it == table.end())
    return std::nullopt;
  return it->second;
}

uint64_t Value::u64() const {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

uint32_t Value::u32() const { return static_cast<uint32_t>(u64()); }

uint64_t Value::lane64(unsigned i) const {
  uint64_t v = 0;
  for (int k = 0; k < 8; ++k)
    v |= static_cast<uint64_t>(b[8 * i + k]) << (8 * k);
  return v;
}

uint32_t Value::lane32(unsigned i) const {
  uint32_t v = 0;
  for (int k = 0; k < 4; ++k)
    v |= static_cast<uint32_t>(b[4 * i + k]) << (8 * k);
  return v;
}

void Value::set_lane64(unsigned i, uint64_t v) {
  for (int k = 0; k < 8; ++k)
    b[8 * i + k] = static_cast<uint8_t>(v >> (8 * k));
}

void Value::set_lane32(unsigned i, uint32_t v) {
  for (int k = 0; k < 4; ++k)
    b[4 * i + k] = static_cast<uint8_t>(v >> (8 * k));
}

double Value::f64() const { return std::bit_cast<double>(u64()); }
float Value::f32() const { return std::bit_cast<float>(u32()); }

bool Value::truthy() const {
  for (unsigned i = 0; i < type_width(type); ++i)
    if (b[i])
      return true;
  return false;
}

bool Value::operator==(const Value& o) const {
  if (type != o.type)
    return false;
  return std::memcmp(b.data(), o.b.data(), type_width(type)) == 0;
}

Value make_i1(bool v) {
  Value r;
  r.type = IrType::I1;
  r.b[0] = v ? 1 : 0;
  return r;
}

Value make_i8(uint8_t v) {
  Value r;
  r.type = IrType::I8;
  r.b[0] = v;
  return r;
}

Value make_i16(uint16_t v) {
  Value r;
  r.type = IrType::I16;
  r.set_lane32(0, v); // low bytes only; width limits the view
  r.b[2] = r.b[3] = 0;
  return r;
}

Value make_i32(uint32_t v) {
  Value r;
  r.type = IrType::I32;
  r.set_lane32(0, v);
  return r;
}

Value make_i64(uint64_t v) {
  Value r;
  r.type = IrType::I64;
  r.set_lane64(0, v);
  return r;
}

Value make_f32(float v) {
  Value r;
  r.type = IrType::F32;
  r.set_lane32(0, std::bit_cast<uint32_t>(v));
  return r;
}

Value make_f64(double v) {
  Value r;
  r.type = IrType::F64;
  r.set_lane64(0, std::bit_cast<uint64_t>(v));
  return r;
}

Value make_v128(uint64_t lo, uint64_t hi) {
  Value r;
  r.type = IrType::V128;
  r.set_lane64(0, lo);
  r.set_lane64(1, hi);
  return r;
}

Value zero_value(IrType t) {
  Value r;
  r.type = t;
  return r;
}

Value value_from_bytes(IrType t, std::span<const uint8_t> bytes) {
  Value r;
  r.type = t;
  assert(bytes.size() >= type_width(t));
  std::memcpy(r.b.data(), bytes.data(), type_width(t));
  return r;
}

// ---------------------------------------------------------------------------

namespace {

constexpr IrType I1 = IrType::I1;
constexpr IrType I8 = IrType::I8;
constexpr IrType I32 = IrType::I32;
constexpr IrType I64 = IrType::I64;
constexpr IrType F32 = IrType::F32;
constexpr IrType F64 = IrType::F64;
constexpr IrType V128 = IrType::V128;

struct OpEntry {
  Op op;
  OpInfo info;
};

const OpEntry kOps[] = {
    {Op::AddF64, {"AddF64", OpClass::ScalarF64, F64, 2, {F64, F64}}},
    {Op::SubF64, {"SubF64", OpClass::ScalarF64, F64, 2, {F64, F64}}},
    {Op::MulF64, {"MulF64", OpClass::ScalarF64, F64, 2, {F64, F64}}},
    {Op::DivF64, {"DivF64", OpClass::ScalarF64, F64, 2, {F64, F64}}},
    {Op::SqrtF64, {"SqrtF64", OpClass::ScalarF64, F64, 1, {F64}}},
    {Op::NegF64, {"NegF64", OpClass::ScalarF64, F64, 1, {F64}}},
    {Op::AbsF64, {"AbsF64", OpClass::ScalarF64, F64, 1, {F64}}},
    {Op::AddF32, {"AddF32", OpClass::ScalarF32, F32, 2, {F32, F32}}},
    {Op::SubF32, {"SubF32", OpClass::ScalarF32, F32, 2, {F32, F32}}},
    {Op::MulF32, {"MulF32", OpClass::ScalarF32, F32, 2, {F32, F32}}},
    {Op::DivF32, {"DivF32", OpClass::ScalarF32, F32, 2, {F32, F32}}},
    {Op::SqrtF32, {"SqrtF32", OpClass::ScalarF32, F32, 1, {F32}}},
    {Op::NegF32, {"NegF32", OpClass::ScalarF32, F32, 1, {F32}}},
    {Op::AbsF32, {"AbsF32", OpClass::ScalarF32, F32, 1, {F32}}},
    {Op::Add64Fx2, {"Add64Fx2", OpClass::SimdF64, V128, 2, {V128, V128}}},
    {Op::Sub64Fx2, {"Sub64Fx2", OpClass::SimdF64, V128, 2, {V128, V128}}},
    {Op::Mul64Fx2, {"Mul64Fx2", OpClass::SimdF64, V128, 2, {V128, V128}}},
    {Op::Div64Fx2, {"Div64Fx2", OpClass::SimdF64, V128, 2, {V128, V128}}},
    {Op::Sqrt64Fx2, {"Sqrt64Fx2", OpClass::SimdF64, V128, 1, {V128}}},
    {Op::Add32Fx4, {"Add32Fx4", OpClass::SimdF32, V128, 2, {V128, V128}}},
    {Op::Sub32Fx4, {"Sub32Fx4", OpClass::SimdF32, V128, 2, {V128, V128}}},
    {Op::Mul32Fx4, {"Mul32Fx4", OpClass::SimdF32, V128, 2, {V128, V128}}},
    {Op::Div32Fx4, {"Div32Fx4", OpClass::SimdF32, V128, 2, {V128, V128}}},
    {Op::Sqrt32Fx4, {"Sqrt32Fx4", OpClass::SimdF32, V128, 1, {V128}}},
    {Op::Add64F0x2, {"Add64F0x2", OpClass::Lane0F64, V128, 2, {V128, V128}}},
    {Op::Sub64F0x2, {"Sub64F0x2", OpClass::Lane0F64, V128, 2, {V128, V128}}},
    {Op::Mul64F0x2, {"Mul64F0x2", OpClass::Lane0F64, V128, 2, {V128, V128}}},
    {Op::Div64F0x2, {"Div64F0x2", OpClass::Lane0F64, V128, 2, {V128, V128}}},
    {Op::Sqrt64F0x2, {"Sqrt64F0x2", OpClass::Lane0F64, V128, 1, {V128}}},
    {Op::Add32F0x4, {"Add32F0x4", OpClass::Lane0F32, V128, 2, {V128, V128}}},
    {Op::Sub32F0x4, {"Sub32F0x4", OpClass::Lane0F32, V128, 2, {V128, V128}}},
    {Op::Mul32F0x4, {"Mul32F0x4", OpClass::Lane0F32, V128, 2, {V128, V128}}},
    {Op::Div32F0x4, {"Div32F0x4", OpClass::Lane0F32, V128, 2, {V128, V128}}},
    {Op::Sqrt32F0x4, {"Sqrt32F0x4", OpClass::Lane0F32, V128, 1, {V128}}},
    {Op::F64toF32, {"F64toF32", OpClass::Convert, F32, 1, {F64}}},
    {Op::F32toF64, {"F32toF64", OpClass::Convert, F64, 1, {F32}}},
    {Op::I64toF64, {"I64toF64", OpClass::Convert, F64, 1, {I64}}},
    {Op::F64toI64, {"F64toI64", OpClass::Convert, I64, 1, {F64}}},
    {Op::ReinterpF64asI64, {"ReinterpF64asI64", OpClass::Reinterp, I64, 1, {F64}}},
    {Op::ReinterpI64asF64, {"ReinterpI64asF64", OpClass::Reinterp, F64, 1, {I64}}},
    {Op::ReinterpF32asI32, {"ReinterpF32asI32", OpClass::Reinterp, I32, 1, {F32}}},
    {Op::ReinterpI32asF32, {"ReinterpI32asF32", OpClass::Reinterp, F32, 1, {I32}}},
    {Op::Pack64x2toV128, {"64x2toV128", OpClass::Pack, V128, 2, {I64, I64}}},
    {Op::V128to64lo, {"V128to64lo", OpClass::Pack, I64, 1, {V128}}},
    {Op::V128to64hi, {"V128to64hi", OpClass::Pack, I64, 1, {V128}}},
    {Op::Pack32x4toV128, {"32x4toV128", OpClass::Pack, V128, 4, {I32, I32, I32, I32}}},
    {Op::Pack32x2to64, {"32x2to64", OpClass::Pack, I64, 2, {I32, I32}}},
    {Op::I64to32lo, {"64to32lo", OpClass::Pack, I32, 1, {I64}}},
    {Op::I64to32hi, {"64to32hi", OpClass::Pack, I32, 1, {I64}}},
    {Op::And32, {"And32", OpClass::Bitwise, I32, 2, {I32, I32}}},
    {Op::Or32, {"Or32", OpClass::Bitwise, I32, 2, {I32, I32}}},
    {Op::Xor32, {"Xor32", OpClass::Bitwise, I32, 2, {I32, I32}}},
    {Op::Not32, {"Not32", OpClass::Bitwise, I32, 1, {I32}}},
    {Op::And64, {"And64", OpClass::Bitwise, I64, 2, {I64, I64}}},
    {Op::Or64, {"Or64", OpClass::Bitwise, I64, 2, {I64, I64}}},
    {Op::Xor64, {"Xor64", OpClass::Bitwise, I64, 2, {I64, I64}}},
    {Op::Not64, {"Not64", OpClass::Bitwise, I64, 1, {I64}}},
    {Op::AndV128, {"AndV128", OpClass::Bitwise, V128, 2, {V128, V128}}},
    {Op::OrV128, {"OrV128", OpClass::Bitwise, V128, 2, {V128, V128}}},
    {Op::XorV128, {"XorV128", OpClass::Bitwise, V128, 2, {V128, V128}}},
    {Op::NotV128, {"NotV128", OpClass::Bitwise, V128, 1, {V128}}},
    {Op::Add8, {"Add8", OpClass::IntArith, I8, 2, {I8, I8}}},
    {Op::Add16, {"Add16", OpClass::IntArith, IrType::I16, 2, {IrType::I16, IrType::I16}}},
    {Op::Add32, {"Add32", OpClass::IntArith, I32, 2, {I32, I32}}},
    {Op::Add64, {"Add64", OpClass::IntArith, I64, 2, {I64, I64}}},
    {Op::Sub8, {"Sub8", OpClass::IntArith, I8, 2, {I8, I8}}},
    {Op::Sub16, {"Sub16", OpClass::IntArith, IrType::I16, 2, {IrType::I16, IrType::I16}}},
    {Op::Sub32, {"Sub32", OpClass::IntArith, I32, 2, {I32, I32}}},
    {Op::Sub64, {"Sub64", OpClass::IntArith, I64, 2, {I64, I64}}},
    {Op::Mul8, {"Mul8", OpClass::IntArith, I8, 2, {I8, I8}}},
    {Op::Mul16, {"Mul16", OpClass::IntArith, IrType::I16, 2, {IrType::I16, IrType::I16}}},
    {Op::Mul32, {"Mul32", OpClass::IntArith, I32, 2, {I32, I32}}},
    {Op::Mul64, {"Mul64", OpClass::IntArith, I64, 2, {I64, I64}}},
    {Op::Shl32, {"Shl32", OpClass::IntArith, I32, 2, {I32, I8}}},
    {Op::Shl64, {"Shl64", OpClass::IntArith, I64, 2, {I64, I8}}},
    {Op::Shr32, {"Shr32", OpClass::IntArith, I32, 2, {I32, I8}}},
    {Op::Shr64, {"Shr64", OpClass::IntArith, I64, 2, {I64, I8}}},
    {Op::Sar32, {"Sar32", OpClass::IntArith, I32, 2, {I32, I8}}},
    {Op::Sar64, {"Sar64", OpClass::IntArith, I64, 2, {I64, I8}}},
    {Op::And1, {"And1", OpClass::Logic1, I1, 2, {I1, I1}}},
    {Op::Or1, {"Or1", OpClass::Logic1, I1, 2, {I1, I1}}},
    {Op::Xor1, {"Xor1", OpClass::Logic1, I1, 2, {I1, I1}}},
    {Op::Not1, {"Not1", OpClass::Logic1, I1, 1, {I1}}},
    {Op::CmpEQ32, {"CmpEQ32", OpClass::CmpInt, I1, 2, {I32, I32}}},
    {Op::CmpEQ64, {"CmpEQ64", OpClass::CmpInt, I1, 2, {I64, I64}}},
    {Op::CmpNE32, {"CmpNE32", OpClass::CmpInt, I1, 2, {I32, I32}}},
    {Op::CmpNE64, {"CmpNE64", OpClass::CmpInt, I1, 2, {I64, I64}}},
    {Op::CmpLT32S, {"CmpLT32S", OpClass::CmpInt, I1, 2, {I32, I32}}},
    {Op::CmpLT64S, {"CmpLT64S", OpClass::CmpInt, I1, 2, {I64, I64}}},
    {Op::CmpLE32S, {"CmpLE32S", OpClass::CmpInt, I1, 2, {I32, I32}}},
    {Op::CmpLE64S, {"CmpLE64S", OpClass::CmpInt, I1, 2, {I64, I64}}},
    {Op::CmpLT32U, {"CmpLT32U", OpClass::CmpInt, I1, 2, {I32, I32}}},
    {Op::CmpLT64U, {"CmpLT64U", OpClass::CmpInt, I1, 2, {I64, I64}}},
    {Op::CmpF64, {"CmpF64", OpClass::CmpF, I32, 2, {F64, F64}}},
    {Op::CmpF32, {"CmpF32", OpClass::CmpF, I32, 2, {F32, F32}}},
    {Op::CmpLT64Fx2, {"CmpLT64Fx2", OpClass::CmpMask, V128, 2, {V128, V128}}},
    {Op::CmpLT32Fx4, {"CmpLT32Fx4", OpClass::CmpMask, V128, 2, {V128, V128}}},
    {Op::CmpLT64F0x2, {"CmpLT64F0x2", OpClass::CmpMask, V128, 2, {V128, V128}}},
    {Op::CmpLE64F0x2, {"CmpLE64F0x2", OpClass::CmpMask, V128, 2, {V128, V128}}},
    {Op::CmpEQ64F0x2, {"CmpEQ64F0x2", OpClass::CmpMask, V128, 2, {V128, V128}}},
    {Op::CmpLT32F0x4, {"CmpLT32F0x4", OpClass::CmpMask, V128, 2, {V128, V128}}},
    {Op::CmpLE32F0x4, {"CmpLE32F0x4", OpClass::CmpMask, V128, 2, {V128, V128}}},
    {Op::CmpEQ32F0x4, {"CmpEQ32F0x4", OpClass::CmpMask, V128, 2, {V128, V128}}},
};

const std::unordered_map<std::string_view, Op>& name_table() {
  static const auto* table = [] {
    auto* t = new std::unordered_map<std::string_view, Op>();
    for (const auto& e : kOps)
      t->emplace(e.info.name, e.op);
    return t;
  }();
  return *table;
}

} // namespace

const OpInfo& op_info(Op opcode) {
  static const auto* table = [] {
    auto* t = new std::unordered_map<Op, OpInfo>();
    for (const auto& e : kOps)
      t->emplace(e.op, e.info);
    return t;
  }();
  auto it = table->find(opcode);
  if (it == table->end())
    throw std::logic_error("op_info: no metadata for opcode");
  return it->second;
}

std::optional<Op> op_from_name(std::string_view name) {
  auto it = name_table().find(name);
  if (it == name_table().end())
    return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------

ExprPtr rdtmp(uint32_t tmp, IrType type) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::RdTmp;
  e->type = type;
  e->tmp = tmp;
  return e;
}

ExprPtr get(uint32_t offset, IrType type) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Get;
  e->type = type;
  e->offset = offset;
  return e;
}

ExprPtr load(ExprPtr addr, IrType type) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Load;
  e->type = type;
  e->args = {std::move(addr)};
  return e;
}

ExprPtr op(Op opcode, std::vector<ExprPtr> args) {
  const OpInfo& info = op_info(opcode);
  if (args.size() != info.arity)
    throw std::invalid_argument(std::string("operand count mismatch for ") + info.name);
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Op;
  e->type = info.result;
  e->op = opcode;
  e->args = std::move(args);
  return e;
}

ExprPtr op_unknown(std::string name, IrType result, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Op;
  e->type = result;
  e->op = Op::Unknown;
  e->name = std::move(name);
  e->args = std::move(args);
  return e;
}

ExprPtr constant(Value v) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Const;
  e->type = v.type;
  e->literal = v;
  return e;
}

ExprPtr ite(ExprPtr cond, ExprPtr iftrue, ExprPtr iffalse) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::ITE;
  e->type = iftrue->type;
  e->args = {std::move(cond), std::move(iftrue), std::move(iffalse)};
  return e;
}

ExprPtr ccall(std::string name, IrType result, std::vector<ExprPtr> args) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::CCall;
  e->type = result;
  e->name = std::move(name);
  e->args = std::move(args);
  return e;
}

Stmt wrtmp(uint32_t tmp, ExprPtr value) {
  Stmt s;
  s.kind = Stmt::Kind::WrTmp;
  s.tmp = tmp;
  s.data = std::move(value);
  return s;
}

Stmt put(uint32_t offset, ExprPtr value) {
  Stmt s;
  s.kind = Stmt::Kind::Put;
  s.offset = offset;
  s.data = std::move(value);
  return s;
}

Stmt store(ExprPtr addr, ExprPtr value) {
  Stmt s;
  s.kind = Stmt::Kind::Store;
  s.addr = std::move(addr);
  s.data = std::move(value);
  return s;
}

Stmt storeg(ExprPtr guard, ExprPtr addr, ExprPtr value) {
  Stmt s;
  s.kind = Stmt::Kind::StoreG;
  s.guard = std::move(guard);
  s.addr = std::move(addr);
  s.data = std::move(value);
  return s;
}

Stmt cas(uint32_t old_tmp, ExprPtr addr, ExprPtr expected, ExprPtr newval) {
  Stmt s;
  s.kind = Stmt::Kind::Cas;
  s.tmp = old_tmp;
  s.addr = std::move(addr);
  s.expected = std::move(expected);
  s.data = std::move(newval);
  return s;
}

Stmt dirty(std::string name, std::vector<ExprPtr> args) {
  Stmt s;
  s.kind = Stmt::Kind::Dirty;
  s.name = std::move(name);
  s.args = std::move(args);
  return s;
}

Stmt dirty_dest(uint32_t dest, std::string name, std::vector<ExprPtr> args) {
  Stmt s = dirty(std::move(name), std::move(args));
  s.tmp = dest;
  s.has_dest = true;
  return s;
}

Stmt dirty_guarded(ExprPtr guard, std::string name, std::vector<ExprPtr> args) {
  Stmt s = dirty(std::move(name), std::move(args));
  s.guard = std::move(guard);
  return s;
}

Stmt imark(uint64_t addr, uint32_t len) {
  Stmt s;
  s.kind = Stmt::Kind::IMark;
  s.imark_addr = addr;
  s.imark_len = len;
  return s;
}

Stmt exit_if(ExprPtr guard, uint64_t target) {
  Stmt s;
  s.kind = Stmt::Kind::Exit;
  s.guard = std::move(guard);
  s.target = target;
  return s;
}

Stmt halt() {
  Stmt s;
  s.kind = Stmt::Kind::Halt;
  return s;
}

// ---------------------------------------------------------------------------

bool expr_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.type != b.type)
    return false;
  switch (a.kind) {
  case Expr::Kind::RdTmp:
    return a.tmp == b.tmp;
  case Expr::Kind::Get:
    return a.offset == b.offset;
  case Expr::Kind::Const:
    return a.literal == b.literal;
  default:
    break;
  }
  if (a.op != b.op || a.name != b.name || a.args.size() != b.args.size())
    return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!expr_equal(*a.args[i], *b.args[i]))
      return false;
  return true;
}

namespace {
bool opt_expr_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b)
    return !a && !b;
  return expr_equal(*a, *b);
}
} // namespace

bool stmt_equal(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind || a.tmp != b.tmp || a.has_dest != b.has_dest ||
      a.offset != b.offset || a.name != b.name || a.imark_addr != b.imark_addr ||
      a.imark_len != b.imark_len || a.target != b.target)
    return false;
  if (!opt_expr_equal(a.addr, b.addr) || !opt_expr_equal(a.guard, b.guard) ||
      !opt_expr_equal(a.data, b.data) || !opt_expr_equal(a.expected, b.expected))
    return false;
  if (a.args.size() != b.args.size())
    return false;
  for (size_t i = 0; i < a.args.size(); ++i)
    if (!expr_equal(*a.args[i], *b.args[i]))
      return false;
  return true;
}

bool program_equal(const Program& a, const Program& b) {
  if (a.entry != b.entry || a.blocks.size() != b.blocks.size() ||
      a.data.size() != b.data.size())
    return false;
  for (auto ita = a.blocks.begin(), itb = b.blocks.begin(); ita != a.blocks.end();
       ++ita, ++itb) {
    if (ita->first != itb->first)
      return false;
    const Superblock& sa = ita->second;
    const Superblock& sb = itb->second;
    if (sa.addr != sb.addr || sa.tmp_types != sb.tmp_types ||
        sa.stmts.size() != sb.stmts.size())
      return false;
    for (size_t i = 0; i < sa.stmts.size(); ++i)
      if (!stmt_equal(sa.stmts[i], sb.stmts[i]))
        return false;
  }
  for (size_t i = 0; i < a.data.size(); ++i)
    if (a.data[i].addr != b.data[i].addr || a.data[i].bytes != b.data[i].bytes)
      return false;
  return true;
}

} // namespace dotvm
