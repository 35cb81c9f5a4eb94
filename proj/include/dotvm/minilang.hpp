#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace dotvm::ml {

struct CompileError : std::runtime_error {
  CompileError(const std::string& msg, int line, int col)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ", column " +
                           std::to_string(col) + ")"),
        line(line), col(col) {}
  int line;
  int col;
};

enum class Type { F64, F32 };

enum class BinOp { Add, Sub, Mul, Div };
enum class CmpOp { LT, LE, GT, GE, EQ, NE };

// Bit-pattern intrinsics; the 64-bit forms act on f64 values, the 32-bit
// forms on f32 values. AddI/SubI perform integer arithmetic on the pattern.
enum class BitsOp { And64, Or64, Xor64, And32, Or32, Xor32, AddI64, SubI64 };

struct Expr;
using ExprP = std::unique_ptr<Expr>;

struct LValue {
  std::string name;
  ExprP index; // null for scalars
  int line = 0, col = 0;
};

struct Cond {
  ExprP lhs;
  CmpOp op{};
  ExprP rhs;
};

struct Expr {
  enum class Kind {
    Num, Var, Elem, Neg, Bin, Abs, NegAbs, Select, CastF32, CastF64,
    Input, GetDot, MathCall, Bits, Round
  };
  Kind kind{};
  Type type = Type::F64; // filled in by the checker
  double num = 0;
  std::string name;            // Var / Elem / MathCall
  BinOp bin{};                 // Bin
  std::vector<ExprP> args;     // operands; Elem index in args[0]
  std::unique_ptr<Cond> cond;  // Select
  BitsOp bits{};               // Bits
  uint64_t bits_operand = 0;   // mask or integer summand
  int input_slot = 0;          // Input
  std::unique_ptr<LValue> lv;  // GetDot
  int line = 0, col = 0;
};

struct Stmt {
  enum class Kind { Assign, If, While, For, Print, SetDot };
  Kind kind{};
  std::unique_ptr<LValue> lv; // Assign / SetDot
  ExprP value;                // Assign / Print / SetDot
  std::unique_ptr<Cond> cond; // If / While / For
  std::vector<Stmt> body;     // While / For / If-then
  std::vector<Stmt> else_body;
  std::unique_ptr<Stmt> init, step; // For
  int line = 0, col = 0;
};

struct Decl {
  std::string name;
  Type type = Type::F64;
  bool is_array = false;
  uint32_t length = 0;
  bool has_init = false;
  double init = 0;
  int line = 0, col = 0;
};

struct Program {
  std::vector<Decl> decls;
  std::vector<Stmt> stmts;
  // filled in by the checker
  int n_prints = 0;
  int n_inputs = 0;           // 1 + highest input slot
  bool uses_nonsmooth = false;  // floor/ceil/fmod/round appear
  bool uses_limitation = false; // bit intrinsics outside the supported patterns
};

/// Parse and type-check a source file. Throws CompileError.
Program parse(const std::string& source);

const char* type_word(Type t);

} // namespace dotvm::ml
