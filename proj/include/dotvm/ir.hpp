#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dotvm {

enum class IrType : uint8_t { I1, I8, I16, I32, I64, F32, F64, V128 };

unsigned type_width(IrType t); // bytes; I1 occupies one byte of storage
const char* type_name(IrType t);
std::optional<IrType> type_from_name(std::string_view name);

/// A runtime value: little-endian bytes, b[0] least significant. Only the
/// first type_width(type) bytes are meaningful.
struct Value {
  IrType type = IrType::I64;
  std::array<uint8_t, 16> b{};

  uint64_t u64() const;           // low 8 bytes
  uint32_t u32() const;           // low 4 bytes
  uint64_t lane64(unsigned i) const;
  uint32_t lane32(unsigned i) const;
  void set_lane64(unsigned i, uint64_t v);
  void set_lane32(unsigned i, uint32_t v);
  double f64() const;
  float f32() const;
  bool truthy() const;            // guards: nonzero = true
  std::span<const uint8_t> bytes() const { return {b.data(), type_width(type)}; }

  bool operator==(const Value& o) const;
};

Value make_i1(bool v);
Value make_i8(uint8_t v);
Value make_i16(uint16_t v);
Value make_i32(uint32_t v);
Value make_i64(uint64_t v);
Value make_f32(float v);
Value make_f64(double v);
Value make_v128(uint64_t lo, uint64_t hi);
Value zero_value(IrType t);
Value value_from_bytes(IrType t, std::span<const uint8_t> bytes);

// ---------------------------------------------------------------------------
// Opcodes

enum class Op : uint16_t {
  // scalar binary64
  AddF64, SubF64, MulF64, DivF64, SqrtF64, NegF64, AbsF64,
  // scalar binary32
  AddF32, SubF32, MulF32, DivF32, SqrtF32, NegF32, AbsF32,
  // SIMD, all lanes
  Add64Fx2, Sub64Fx2, Mul64Fx2, Div64Fx2, Sqrt64Fx2,
  Add32Fx4, Sub32Fx4, Mul32Fx4, Div32Fx4, Sqrt32Fx4,
  // SIMD, lowest lane only; upper lanes pass through the first operand
  Add64F0x2, Sub64F0x2, Mul64F0x2, Div64F0x2, Sqrt64F0x2,
  Add32F0x4, Sub32F0x4, Mul32F0x4, Div32F0x4, Sqrt32F0x4,
  // conversions
  F64toF32, F32toF64, I64toF64, F64toI64,
  // reinterpretation
  ReinterpF64asI64, ReinterpI64asF64, ReinterpF32asI32, ReinterpI32asF32,
  // pack / unpack
  Pack64x2toV128, V128to64lo, V128to64hi, Pack32x4toV128,
  Pack32x2to64, I64to32lo, I64to32hi,
  // bitwise
  And32, Or32, Xor32, Not32,
  And64, Or64, Xor64, Not64,
  AndV128, OrV128, XorV128, NotV128,
  // integer arithmetic
  Add8, Add16, Add32, Add64,
  Sub8, Sub16, Sub32, Sub64,
  Mul8, Mul16, Mul32, Mul64,
  Shl32, Shl64, Shr32, Shr64, Sar32, Sar64,
  // 1-bit logic (guards)
  And1, Or1, Xor1, Not1,
  // integer comparisons -> I1
  CmpEQ32, CmpEQ64, CmpNE32, CmpNE64,
  CmpLT32S, CmpLT64S, CmpLE32S, CmpLE64S, CmpLT32U, CmpLT64U,
  // scalar fp comparisons -> I32 condition code (0x40 EQ, 0x01 LT, 0x00 GT, 0x45 UN)
  CmpF64, CmpF32,
  // fp comparisons producing all-ones / all-zeros lane masks
  CmpLT64Fx2, CmpLT32Fx4,
  CmpLT64F0x2, CmpLE64F0x2, CmpEQ64F0x2,
  CmpLT32F0x4, CmpLE32F0x4, CmpEQ32F0x4,
  // sentinel for textual opcodes outside the interpreted set
  Unknown,
};

enum class OpClass {
  ScalarF64, ScalarF32, SimdF64, SimdF32, Lane0F64, Lane0F32,
  Convert, Reinterp, Pack, Bitwise, IntArith, Logic1, CmpInt, CmpF, CmpMask,
  Unknown,
};

struct OpInfo {
  const char* name;
  OpClass cls;
  IrType result;
  uint8_t arity;
  std::array<IrType, 4> operand;
};

const OpInfo& op_info(Op op);
std::optional<Op> op_from_name(std::string_view name);

// ---------------------------------------------------------------------------
// Expressions (side-effect free trees)

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { RdTmp, Get, Load, Op, Const, ITE, CCall };

  Kind kind;
  IrType type;            // result type
  uint32_t tmp = 0;       // RdTmp
  uint32_t offset = 0;    // Get
  Op op = Op::Unknown;    // Op
  std::string name;       // unknown opcode or CCall target
  Value literal{};        // Const
  std::vector<ExprPtr> args; // operands; Load: [addr]; ITE: [cond, iftrue, iffalse]
};

ExprPtr rdtmp(uint32_t tmp, IrType type);
ExprPtr get(uint32_t offset, IrType type);
ExprPtr load(ExprPtr addr, IrType type);
ExprPtr op(Op opcode, std::vector<ExprPtr> args);
ExprPtr op_unknown(std::string name, IrType result, std::vector<ExprPtr> args);
ExprPtr constant(Value v);
ExprPtr ite(ExprPtr cond, ExprPtr iftrue, ExprPtr iffalse);
ExprPtr ccall(std::string name, IrType result, std::vector<ExprPtr> args);

// ---------------------------------------------------------------------------
// Statements

struct Stmt {
  enum class Kind { WrTmp, Put, Store, StoreG, Cas, Dirty, IMark, Exit, Halt };

  Kind kind;
  uint32_t tmp = 0;        // WrTmp / Cas / Dirty destination
  bool has_dest = false;   // Dirty only
  uint32_t offset = 0;     // Put
  ExprPtr addr;            // Store / StoreG / Cas
  ExprPtr guard;           // StoreG / Exit / optional Dirty guard
  ExprPtr data;            // WrTmp / Put / Store / StoreG / Cas new value
  ExprPtr expected;        // Cas
  std::string name;        // Dirty callee
  std::vector<ExprPtr> args;
  uint64_t imark_addr = 0;
  uint32_t imark_len = 0;
  uint64_t target = 0;     // Exit
};

Stmt wrtmp(uint32_t tmp, ExprPtr value);
Stmt put(uint32_t offset, ExprPtr value);
Stmt store(ExprPtr addr, ExprPtr value);
Stmt storeg(ExprPtr guard, ExprPtr addr, ExprPtr value);
Stmt cas(uint32_t old_tmp, ExprPtr addr, ExprPtr expected, ExprPtr newval);
Stmt dirty(std::string name, std::vector<ExprPtr> args);
Stmt dirty_dest(uint32_t dest, std::string name, std::vector<ExprPtr> args);
Stmt dirty_guarded(ExprPtr guard, std::string name, std::vector<ExprPtr> args);
Stmt imark(uint64_t addr, uint32_t len);
Stmt exit_if(ExprPtr guard, uint64_t target);
Stmt halt();

// ---------------------------------------------------------------------------
// Superblocks and programs

struct Superblock {
  uint64_t addr = 0;
  std::vector<IrType> tmp_types;
  std::vector<Stmt> stmts;
};

struct DataSegment {
  uint64_t addr = 0;
  std::vector<uint8_t> bytes;
};

struct Program {
  uint64_t entry = 0;
  std::map<uint64_t, Superblock> blocks;
  std::vector<DataSegment> data;
};

bool expr_equal(const Expr& a, const Expr& b);
bool stmt_equal(const Stmt& a, const Stmt& b);
bool program_equal(const Program& a, const Program& b);

} // namespace dotvm
