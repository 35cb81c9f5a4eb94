#include "dotvm/compile.hpp"

#include "dotvm/builtin_names.hpp"

#include <bit>
#include <cmath>

namespace dotvm {

namespace {

using ml::CompileError;

constexpr uint64_t kAbs64 = 0x7FFFFFFFFFFFFFFFull;
constexpr uint64_t kSign64 = 0x8000000000000000ull;
constexpr uint32_t kAbs32 = 0x7FFFFFFFu;
constexpr uint32_t kSign32 = 0x80000000u;

IrType ir_type(ml::Type t) { return t == ml::Type::F64 ? IrType::F64 : IrType::F32; }

struct Compiler {
  const ml::Program& ast;
  CompileOptions opts;
  Compiled out;
  Superblock* cur = nullptr;
  uint64_t next_addr = 0x1000;
  uint64_t next_imark = 0x400000;
  int out_slot = 0;
  bool emitted_sine_tables = false;

  Compiler(const ml::Program& ast, const CompileOptions& opts) : ast(ast), opts(opts) {}

  [[noreturn]] static void fail(const std::string& msg, int line, int col) {
    throw CompileError(msg, line, col);
  }

  uint64_t new_block() {
    const uint64_t addr = next_addr;
    next_addr += 0x1000;
    Superblock sb;
    sb.addr = addr;
    out.program.blocks.emplace(addr, std::move(sb));
    return addr;
  }

  void enter(uint64_t addr) { cur = &out.program.blocks.at(addr); }

  uint32_t fresh(IrType t) {
    cur->tmp_types.push_back(t);
    return static_cast<uint32_t>(cur->tmp_types.size() - 1);
  }

  ExprPtr totmp(ExprPtr e) {
    const IrType t = e->type;
    const uint32_t i = fresh(t);
    cur->stmts.push_back(wrtmp(i, std::move(e)));
    return rdtmp(i, t);
  }

  void stmt_mark(int line) {
    cur->stmts.push_back(imark(next_imark, 1));
    out.imark_lines.emplace_back(next_imark, line);
    next_imark += 8;
  }

  void jump(uint64_t target) {
    cur->stmts.push_back(exit_if(constant(make_i1(true)), target));
  }

  void branch(ExprPtr guard, uint64_t target) {
    cur->stmts.push_back(exit_if(std::move(guard), target));
  }

  const CompiledSymbol& sym(const std::string& name, int line, int col) {
    auto it = out.symbols.find(name);
    if (it == out.symbols.end())
      fail("undeclared variable '" + name + "'", line, col);
    return it->second;
  }

  ExprPtr const_i64(uint64_t v) { return constant(make_i64(v)); }
  ExprPtr const_f64(double v) { return constant(make_f64(v)); }

  // Memory address of an array element: base + width * round(index).
  ExprPtr elem_addr(const CompiledSymbol& s, const ml::Expr& index) {
    ExprPtr idx = lower(index);
    ExprPtr as_int = totmp(op(Op::F64toI64, {std::move(idx)}));
    const uint8_t shift = s.type == ml::Type::F64 ? 3 : 2;
    ExprPtr scaled = totmp(op(Op::Shl64, {std::move(as_int), constant(make_i8(shift))}));
    return totmp(op(Op::Add64, {const_i64(s.base), std::move(scaled)}));
  }

  ExprPtr lower_lvalue_read(const ml::LValue& lv) {
    const CompiledSymbol& s = sym(lv.name, lv.line, lv.col);
    if (s.is_array)
      return totmp(load(elem_addr(s, *lv.index), ir_type(s.type)));
    return totmp(get(s.guest_offset, ir_type(s.type)));
  }

  // f64 <-> i64 / f32 <-> i32 reinterpret chains for the bit tricks.
  ExprPtr bits_of(ExprPtr v) {
    const Op o = v->type == IrType::F64 ? Op::ReinterpF64asI64 : Op::ReinterpF32asI32;
    return totmp(op(o, {std::move(v)}));
  }

  ExprPtr from_bits(ExprPtr b, IrType target) {
    const Op o = target == IrType::F64 ? Op::ReinterpI64asF64 : Op::ReinterpI32asF32;
    return totmp(op(o, {std::move(b)}));
  }

  // abs of an f64 goes through the 128-bit "andpd" pattern compilers emit.
  ExprPtr lower_abs(ExprPtr v) {
    if (v->type == IrType::F64) {
      ExprPtr b = bits_of(std::move(v));
      ExprPtr vec = totmp(op(Op::Pack64x2toV128, {const_i64(0), std::move(b)}));
      ExprPtr anded = totmp(op(Op::AndV128, {std::move(vec), constant(make_v128(kAbs64, 0))}));
      ExprPtr lo = totmp(op(Op::V128to64lo, {std::move(anded)}));
      return from_bits(std::move(lo), IrType::F64);
    }
    ExprPtr b = bits_of(std::move(v));
    ExprPtr anded = totmp(op(Op::And32, {std::move(b), constant(make_i32(kAbs32))}));
    return from_bits(std::move(anded), IrType::F32);
  }

  ExprPtr lower_neg(ExprPtr v) {
    const IrType t = v->type;
    ExprPtr b = bits_of(std::move(v));
    ExprPtr flipped =
        t == IrType::F64
            ? totmp(op(Op::Xor64, {std::move(b), const_i64(kSign64)}))
            : totmp(op(Op::Xor32, {std::move(b), constant(make_i32(kSign32))}));
    return from_bits(std::move(flipped), t);
  }

  ExprPtr lower_negabs(ExprPtr v) {
    const IrType t = v->type;
    ExprPtr b = bits_of(std::move(v));
    ExprPtr ored = t == IrType::F64
                       ? totmp(op(Op::Or64, {std::move(b), const_i64(kSign64)}))
                       : totmp(op(Op::Or32, {std::move(b), constant(make_i32(kSign32))}));
    return from_bits(std::move(ored), t);
  }

  // I1 guard for scalar conditions (if/while/for).
  ExprPtr lower_guard(const ml::Cond& c) {
    ExprPtr a = lower(*c.lhs);
    ExprPtr b = lower(*c.rhs);
    const bool f64 = a->type == IrType::F64;
    ml::CmpOp cop = c.op;
    if (cop == ml::CmpOp::GT || cop == ml::CmpOp::GE) {
      std::swap(a, b);
      cop = cop == ml::CmpOp::GT ? ml::CmpOp::LT : ml::CmpOp::LE;
    }
    ExprPtr code = totmp(op(f64 ? Op::CmpF64 : Op::CmpF32, {std::move(a), std::move(b)}));
    auto code_is = [&](uint32_t want) {
      return totmp(op(Op::CmpEQ32, {code, constant(make_i32(want))}));
    };
    switch (cop) {
    case ml::CmpOp::LT:
      return code_is(0x01);
    case ml::CmpOp::EQ:
      return code_is(0x40);
    case ml::CmpOp::LE:
      return totmp(op(Op::Or1, {code_is(0x01), code_is(0x40)}));
    case ml::CmpOp::NE:
      return totmp(op(Op::Not1, {code_is(0x40)}));
    default:
      break;
    }
    fail("unsupported comparison", 0, 0);
  }

  // Branchless select through the cmp-mask / and / andn / or pattern.
  ExprPtr lower_select(const ml::Expr& e) {
    const ml::Cond& c = *e.cond;
    const ml::Expr* tru = e.args[0].get();
    const ml::Expr* fls = e.args[1].get();
    const ml::Expr* lhs = c.lhs.get();
    const ml::Expr* rhs = c.rhs.get();
    ml::CmpOp cop = c.op;
    if (cop == ml::CmpOp::GT || cop == ml::CmpOp::GE) {
      std::swap(lhs, rhs);
      cop = cop == ml::CmpOp::GT ? ml::CmpOp::LT : ml::CmpOp::LE;
    }
    if (cop == ml::CmpOp::NE) {
      std::swap(tru, fls);
      cop = ml::CmpOp::EQ;
    }
    const bool f64 = ir_type(e.type) == IrType::F64;

    auto to_vec = [&](const ml::Expr& scalar) {
      ExprPtr b = bits_of(lower(scalar));
      if (f64)
        return totmp(op(Op::Pack64x2toV128, {const_i64(0), std::move(b)}));
      ExprPtr z = constant(make_i32(0));
      return totmp(op(Op::Pack32x4toV128, {z, z, z, std::move(b)}));
    };

    ExprPtr va = to_vec(*lhs);
    ExprPtr vb = to_vec(*rhs);
    Op cmp_op;
    if (f64)
      cmp_op = cop == ml::CmpOp::LT   ? Op::CmpLT64F0x2
               : cop == ml::CmpOp::LE ? Op::CmpLE64F0x2
                                      : Op::CmpEQ64F0x2;
    else
      cmp_op = cop == ml::CmpOp::LT   ? Op::CmpLT32F0x4
               : cop == ml::CmpOp::LE ? Op::CmpLE32F0x4
                                      : Op::CmpEQ32F0x4;
    ExprPtr mask = totmp(op(cmp_op, {std::move(va), std::move(vb)}));
    ExprPtr vt = to_vec(*tru);
    ExprPtr vf = to_vec(*fls);
    ExprPtr picked_t = totmp(op(Op::AndV128, {mask, std::move(vt)}));
    ExprPtr inv = totmp(op(Op::NotV128, {mask}));
    ExprPtr picked_f = totmp(op(Op::AndV128, {std::move(inv), std::move(vf)}));
    ExprPtr sel = totmp(op(Op::OrV128, {std::move(picked_t), std::move(picked_f)}));
    ExprPtr lo = totmp(op(Op::V128to64lo, {std::move(sel)}));
    if (f64)
      return from_bits(std::move(lo), IrType::F64);
    ExprPtr lo32 = totmp(op(Op::I64to32lo, {std::move(lo)}));
    return from_bits(std::move(lo32), IrType::F32);
  }

  ExprPtr lower_bits(const ml::Expr& e) {
    ExprPtr b = bits_of(lower(*e.args[0]));
    ExprPtr r;
    switch (e.bits) {
    case ml::BitsOp::And64:
      r = totmp(op(Op::And64, {std::move(b), const_i64(e.bits_operand)}));
      break;
    case ml::BitsOp::Or64:
      r = totmp(op(Op::Or64, {std::move(b), const_i64(e.bits_operand)}));
      break;
    case ml::BitsOp::Xor64:
      r = totmp(op(Op::Xor64, {std::move(b), const_i64(e.bits_operand)}));
      break;
    case ml::BitsOp::And32:
      r = totmp(op(Op::And32, {std::move(b), constant(make_i32(static_cast<uint32_t>(e.bits_operand)))}));
      break;
    case ml::BitsOp::Or32:
      r = totmp(op(Op::Or32, {std::move(b), constant(make_i32(static_cast<uint32_t>(e.bits_operand)))}));
      break;
    case ml::BitsOp::Xor32:
      r = totmp(op(Op::Xor32, {std::move(b), constant(make_i32(static_cast<uint32_t>(e.bits_operand)))}));
      break;
    case ml::BitsOp::AddI64:
      r = totmp(op(Op::Add64, {std::move(b), const_i64(e.bits_operand)}));
      break;
    case ml::BitsOp::SubI64:
      r = totmp(op(Op::Sub64, {std::move(b), const_i64(e.bits_operand)}));
      break;
    }
    return from_bits(std::move(r), ir_type(e.type));
  }

  void emit_sine_tables() {
    if (emitted_sine_tables)
      return;
    emitted_sine_tables = true;
    DataSegment sins, coss;
    sins.addr = layout::kSineTable;
    coss.addr = layout::kCosineTable;
    for (int i = 0; i <= 320; ++i) {
      const double x = (i - 160) / 128.0;
      const uint64_t sb = std::bit_cast<uint64_t>(std::sin(x));
      const uint64_t cb = std::bit_cast<uint64_t>(std::cos(x));
      for (int k = 0; k < 8; ++k) {
        sins.bytes.push_back(static_cast<uint8_t>(sb >> (8 * k)));
        coss.bytes.push_back(static_cast<uint8_t>(cb >> (8 * k)));
      }
    }
    out.program.data.push_back(std::move(sins));
    out.program.data.push_back(std::move(coss));
  }

  // Inline sine: a small-argument Taylor branch and a lookup-table branch
  // whose range reduction rounds by adding and subtracting 1.5 * 2^52.
  // Splits the current superblock; the result lands in a memory slot.
  ExprPtr lower_inline_sin(const ml::Expr& arg) {
    emit_sine_tables();
    ExprPtr x = lower(arg);
    cur->stmts.push_back(store(const_i64(layout::kSineState), std::move(x)));

    const uint64_t taylor_b = new_block();
    const uint64_t table_b = new_block();
    const uint64_t join_b = new_block();

    ExprPtr xr = totmp(load(const_i64(layout::kSineState), IrType::F64));
    ExprPtr ax = lower_abs(xr);
    ExprPtr code = totmp(op(Op::CmpF64, {std::move(ax), const_f64(0.126)}));
    ExprPtr small = totmp(op(Op::CmpEQ32, {std::move(code), constant(make_i32(0x01))}));
    branch(std::move(small), taylor_b);
    jump(table_b);

    auto horner_sin = [&](ExprPtr t) {
      // t - t^3/6 + t^5/120 - t^7/5040 + t^9/362880
      ExprPtr t2 = totmp(op(Op::MulF64, {t, t}));
      ExprPtr acc = const_f64(1.0 / 362880.0);
      const double coef[] = {-1.0 / 5040.0, 1.0 / 120.0, -1.0 / 6.0, 1.0};
      for (double c : coef) {
        acc = totmp(op(Op::MulF64, {std::move(acc), t2}));
        acc = totmp(op(Op::AddF64, {std::move(acc), const_f64(c)}));
      }
      return totmp(op(Op::MulF64, {std::move(acc), std::move(t)}));
    };

    enter(taylor_b);
    {
      ExprPtr t = totmp(load(const_i64(layout::kSineState), IrType::F64));
      ExprPtr res = horner_sin(std::move(t));
      cur->stmts.push_back(store(const_i64(layout::kSineState + 8), std::move(res)));
      jump(join_b);
    }

    enter(table_b);
    {
      const double big = 6755399441055744.0; // 1.5 * 2^52
      ExprPtr t = totmp(load(const_i64(layout::kSineState), IrType::F64));
      ExprPtr scaled = totmp(op(Op::MulF64, {t, const_f64(128.0)}));
      ExprPtr shifted = totmp(op(Op::AddF64, {std::move(scaled), const_f64(big)}));
      ExprPtr n_f = totmp(op(Op::SubF64, {std::move(shifted), const_f64(big)}));
      ExprPtr x_tab = totmp(op(Op::MulF64, {n_f, const_f64(1.0 / 128.0)}));
      ExprPtr x_rem = totmp(op(Op::SubF64, {t, std::move(x_tab)}));

      ExprPtr idx = totmp(op(Op::F64toI64, {n_f}));
      ExprPtr idx_off = totmp(op(Op::Add64, {std::move(idx), const_i64(160)}));
      ExprPtr scaled_idx =
          totmp(op(Op::Shl64, {std::move(idx_off), constant(make_i8(3))}));
      ExprPtr sin_addr =
          totmp(op(Op::Add64, {const_i64(layout::kSineTable), scaled_idx}));
      ExprPtr cos_addr =
          totmp(op(Op::Add64, {const_i64(layout::kCosineTable), scaled_idx}));
      ExprPtr sin_tab = totmp(load(std::move(sin_addr), IrType::F64));
      ExprPtr cos_tab = totmp(load(std::move(cos_addr), IrType::F64));

      ExprPtr srem = horner_sin(x_rem);
      // cos(t) ~ 1 - t^2/2 + t^4/24
      ExprPtr r2 = totmp(op(Op::MulF64, {x_rem, x_rem}));
      ExprPtr crem = const_f64(1.0 / 24.0);
      crem = totmp(op(Op::MulF64, {std::move(crem), r2}));
      crem = totmp(op(Op::AddF64, {std::move(crem), const_f64(-0.5)}));
      crem = totmp(op(Op::MulF64, {std::move(crem), r2}));
      crem = totmp(op(Op::AddF64, {std::move(crem), const_f64(1.0)}));

      ExprPtr left = totmp(op(Op::MulF64, {std::move(sin_tab), std::move(crem)}));
      ExprPtr right = totmp(op(Op::MulF64, {std::move(cos_tab), std::move(srem)}));
      ExprPtr res = totmp(op(Op::AddF64, {std::move(left), std::move(right)}));
      cur->stmts.push_back(store(const_i64(layout::kSineState + 8), std::move(res)));
      jump(join_b);
    }

    enter(join_b);
    return totmp(load(const_i64(layout::kSineState + 8), IrType::F64));
  }

  ExprPtr lower(const ml::Expr& e) {
    switch (e.kind) {
    case ml::Expr::Kind::Num:
      return e.type == ml::Type::F64 ? const_f64(e.num)
                                     : constant(make_f32(static_cast<float>(e.num)));
    case ml::Expr::Kind::Var:
      return totmp(get(sym(e.name, e.line, e.col).guest_offset, ir_type(e.type)));
    case ml::Expr::Kind::Elem: {
      const CompiledSymbol& s = sym(e.name, e.line, e.col);
      return totmp(load(elem_addr(s, *e.args[0]), ir_type(e.type)));
    }
    case ml::Expr::Kind::Neg:
      return lower_neg(lower(*e.args[0]));
    case ml::Expr::Kind::Abs:
      return lower_abs(lower(*e.args[0]));
    case ml::Expr::Kind::NegAbs:
      return lower_negabs(lower(*e.args[0]));
    case ml::Expr::Kind::Bin: {
      ExprPtr a = lower(*e.args[0]);
      ExprPtr b = lower(*e.args[1]);
      const bool f64 = e.type == ml::Type::F64;
      Op o;
      switch (e.bin) {
      case ml::BinOp::Add: o = f64 ? Op::AddF64 : Op::AddF32; break;
      case ml::BinOp::Sub: o = f64 ? Op::SubF64 : Op::SubF32; break;
      case ml::BinOp::Mul: o = f64 ? Op::MulF64 : Op::MulF32; break;
      case ml::BinOp::Div: o = f64 ? Op::DivF64 : Op::DivF32; break;
      }
      return totmp(op(o, {std::move(a), std::move(b)}));
    }
    case ml::Expr::Kind::Select:
      return lower_select(e);
    case ml::Expr::Kind::CastF32:
      return totmp(op(Op::F64toF32, {lower(*e.args[0])}));
    case ml::Expr::Kind::CastF64:
      return totmp(op(Op::F32toF64, {lower(*e.args[0])}));
    case ml::Expr::Kind::Input:
      return totmp(load(const_i64(layout::kInputBase + 8 * e.input_slot), IrType::F64));
    case ml::Expr::Kind::GetDot: {
      const CompiledSymbol& s = sym(e.lv->name, e.line, e.col);
      const uint64_t width = s.type == ml::Type::F64 ? 8 : 4;
      if (s.is_array) {
        ExprPtr addr = elem_addr(s, *e.lv->index);
        cur->stmts.push_back(dirty(builtin::kGetDot,
                                   {std::move(addr), const_i64(layout::kScratchGet),
                                    const_i64(width)}));
      } else {
        cur->stmts.push_back(dirty(builtin::kGetDotReg,
                                   {const_i64(s.guest_offset),
                                    const_i64(layout::kScratchGet), const_i64(width)}));
      }
      return totmp(load(const_i64(layout::kScratchGet), ir_type(s.type)));
    }
    case ml::Expr::Kind::MathCall: {
      if (e.name == "sin" && opts.inline_sin)
        return lower_inline_sin(*e.args[0]);
      std::vector<ExprPtr> args;
      for (const auto& a : e.args)
        args.push_back(lower(*a));
      const uint32_t dest = fresh(IrType::F64);
      cur->stmts.push_back(
          dirty_dest(dest, std::string(builtin::kMathPrefix) + e.name, std::move(args)));
      return rdtmp(dest, IrType::F64);
    }
    case ml::Expr::Kind::Bits:
      return lower_bits(e);
    case ml::Expr::Kind::Round:
      return totmp(op(Op::I64toF64, {totmp(op(Op::F64toI64, {lower(*e.args[0])}))}));
    }
    fail("corrupt expression", e.line, e.col);
  }

  // True when the expression may split the current superblock while lowering.
  bool splits_blocks(const ml::Expr& e) const {
    if (e.kind == ml::Expr::Kind::MathCall && e.name == "sin" && opts.inline_sin)
      return true;
    for (const auto& a : e.args)
      if (a && splits_blocks(*a))
        return true;
    if (e.cond && (splits_blocks(*e.cond->lhs) || splits_blocks(*e.cond->rhs)))
      return true;
    if (e.lv && e.lv->index && splits_blocks(*e.lv->index))
      return true;
    return false;
  }

  // Inline sine splits superblocks and would orphan live temporaries, so it
  // may only form the entire right-hand side of an assignment or print.
  bool whole_rhs_split_ok(const ml::Expr& e) const {
    return e.kind == ml::Expr::Kind::MathCall && e.name == "sin" &&
           !splits_blocks(*e.args[0]);
  }

  void require_no_split(const ml::Expr& e, int line, int col) const {
    if (splits_blocks(e))
      fail("with --no-math-wrappers, sin() must be the entire right-hand side "
           "of an assignment or print",
           line, col);
  }

  void require_no_split(const ml::Cond& c, int line, int col) const {
    require_no_split(*c.lhs, line, col);
    require_no_split(*c.rhs, line, col);
  }

  void lower_stmt(const ml::Stmt& s) {
    stmt_mark(s.line);
    switch (s.kind) {
    case ml::Stmt::Kind::Assign: {
      if (splits_blocks(*s.value) && !whole_rhs_split_ok(*s.value))
        require_no_split(*s.value, s.line, s.col);
      if (s.lv->index)
        require_no_split(*s.lv->index, s.line, s.col);
      const CompiledSymbol& dst = sym(s.lv->name, s.lv->line, s.lv->col);
      if (dst.is_array) {
        ExprPtr v = lower(*s.value);
        ExprPtr addr = elem_addr(dst, *s.lv->index);
        cur->stmts.push_back(store(std::move(addr), std::move(v)));
      } else {
        ExprPtr v = lower(*s.value);
        cur->stmts.push_back(put(dst.guest_offset, std::move(v)));
      }
      break;
    }
    case ml::Stmt::Kind::Print: {
      if (splits_blocks(*s.value) && !whole_rhs_split_ok(*s.value))
        require_no_split(*s.value, s.line, s.col);
      ExprPtr v = lower(*s.value);
      if (v->type == IrType::F32)
        v = totmp(op(Op::F32toF64, {std::move(v)}));
      cur->stmts.push_back(store(const_i64(layout::kOutputBase + 8 * out_slot), v));
      cur->stmts.push_back(dirty(builtin::kPrintF64, {v}));
      out_slot += 1;
      break;
    }
    case ml::Stmt::Kind::SetDot: {
      require_no_split(*s.value, s.line, s.col);
      if (s.lv->index)
        require_no_split(*s.lv->index, s.line, s.col);
      const CompiledSymbol& dst = sym(s.lv->name, s.lv->line, s.lv->col);
      const uint64_t width = dst.type == ml::Type::F64 ? 8 : 4;
      ExprPtr v = lower(*s.value);
      cur->stmts.push_back(store(const_i64(layout::kScratchSet), std::move(v)));
      if (dst.is_array) {
        ExprPtr addr = elem_addr(dst, *s.lv->index);
        cur->stmts.push_back(dirty(builtin::kSetDot,
                                   {std::move(addr), const_i64(layout::kScratchSet),
                                    const_i64(width)}));
      } else {
        cur->stmts.push_back(dirty(builtin::kSetDotReg,
                                   {const_i64(dst.guest_offset),
                                    const_i64(layout::kScratchSet), const_i64(width)}));
      }
      break;
    }
    case ml::Stmt::Kind::If: {
      require_no_split(*s.cond, s.line, s.col);
      ExprPtr g = lower_guard(*s.cond);
      const uint64_t then_b = new_block();
      const uint64_t else_b = s.else_body.empty() ? 0 : new_block();
      const uint64_t join_b = new_block();
      branch(std::move(g), then_b);
      jump(else_b ? else_b : join_b);
      enter(then_b);
      for (const auto& c : s.body)
        lower_stmt(c);
      jump(join_b);
      if (else_b) {
        enter(else_b);
        for (const auto& c : s.else_body)
          lower_stmt(c);
        jump(join_b);
      }
      enter(join_b);
      break;
    }
    case ml::Stmt::Kind::While: {
      require_no_split(*s.cond, s.line, s.col);
      const uint64_t head = new_block();
      jump(head);
      enter(head);
      ExprPtr g = lower_guard(*s.cond);
      ExprPtr stop = totmp(op(Op::Not1, {std::move(g)}));
      const uint64_t body_b = new_block();
      const uint64_t join_b = new_block();
      branch(std::move(stop), join_b);
      jump(body_b);
      enter(body_b);
      for (const auto& c : s.body)
        lower_stmt(c);
      jump(head);
      enter(join_b);
      break;
    }
    case ml::Stmt::Kind::For: {
      require_no_split(*s.cond, s.line, s.col);
      lower_stmt(*s.init);
      const uint64_t head = new_block();
      jump(head);
      enter(head);
      ExprPtr g = lower_guard(*s.cond);
      ExprPtr stop = totmp(op(Op::Not1, {std::move(g)}));
      const uint64_t body_b = new_block();
      const uint64_t join_b = new_block();
      branch(std::move(stop), join_b);
      jump(body_b);
      enter(body_b);
      for (const auto& c : s.body)
        lower_stmt(c);
      lower_stmt(*s.step);
      jump(head);
      enter(join_b);
      break;
    }
    }
  }

  Compiled run() {
    // Lay out variables: scalars in the guest state, arrays in memory.
    uint32_t guest_next = 0;
    uint64_t heap_next = layout::kHeapBase;
    for (const ml::Decl& d : ast.decls) {
      CompiledSymbol s;
      s.is_array = d.is_array;
      s.type = d.type;
      const uint32_t width = d.type == ml::Type::F64 ? 8 : 4;
      if (d.is_array) {
        s.base = heap_next;
        s.length = d.length;
        heap_next += static_cast<uint64_t>(width) * d.length;
        heap_next = (heap_next + 63) & ~63ull;
      } else {
        guest_next = (guest_next + width - 1) & ~(width - 1);
        if (guest_next + width > 1024)
          fail("too many scalar variables", d.line, d.col);
        s.guest_offset = guest_next;
        guest_next += width;
      }
      out.symbols.emplace(d.name, s);
    }

    const uint64_t entry = new_block();
    out.program.entry = entry;
    enter(entry);
    for (const ml::Decl& d : ast.decls) {
      if (!d.is_array && d.has_init) {
        const CompiledSymbol& s = out.symbols.at(d.name);
        cur->stmts.push_back(
            put(s.guest_offset, d.type == ml::Type::F64
                                    ? const_f64(d.init)
                                    : constant(make_f32(static_cast<float>(d.init)))));
      }
    }
    for (const auto& s : ast.stmts)
      lower_stmt(s);
    cur->stmts.push_back(halt());

    out.n_outputs = ast.n_prints;
    out.n_inputs = ast.n_inputs;
    return std::move(out);
  }
};

} // namespace

Compiled compile(const ml::Program& ast, const CompileOptions& opts) {
  return Compiler(ast, opts).run();
}

} // namespace dotvm
