#include "dotvm/instrument.hpp"

#include "dotvm/builtin_names.hpp"
#include "dotvm/mathwrap.hpp"

#include <string_view>

namespace dotvm {

namespace {

ExprPtr zero_of(IrType t) { return constant(zero_value(t)); }

ExprPtr vec_splat64(double v) {
  const uint64_t bits = std::bit_cast<uint64_t>(v);
  return constant(make_v128(bits, bits));
}

ExprPtr vec_splat32(float v) {
  const uint64_t b = std::bit_cast<uint32_t>(v);
  const uint64_t lane = b | (b << 32);
  return constant(make_v128(lane, lane));
}

// I1 expression testing the sign bit of a scalar fp expression.
ExprPtr signbit_of(const ExprPtr& q) {
  if (q->type == IrType::F64) {
    auto mask = constant(make_i64(0x8000000000000000ull));
    return op(Op::CmpEQ64,
              {op(Op::And64, {op(Op::ReinterpF64asI64, {q}), mask}), mask});
  }
  auto mask = constant(make_i32(0x80000000u));
  return op(Op::CmpEQ32, {op(Op::And32, {op(Op::ReinterpF32asI32, {q}), mask}), mask});
}

struct Builder {
  const Superblock& src;
  AdPolicy& policy;
  const InstrumentOptions& opts;
  InstrumentationLayout layout;
  Superblock out;
  int cur_stmt = 0;

  Builder(const Superblock& sb, AdPolicy& policy, const InstrumentOptions& opts)
      : src(sb), policy(policy), opts(opts), layout(layout_for(sb)) {
    out.addr = sb.addr;
    out.tmp_types.resize(2 * layout.m_tmp, IrType::I8);
    for (size_t i = 0; i < sb.tmp_types.size(); ++i) {
      out.tmp_types[i] = sb.tmp_types[i];
      out.tmp_types[i + layout.m_tmp] = sb.tmp_types[i]; // shadow keeps the type
    }
  }

  uint32_t fresh(IrType t) {
    const uint32_t idx = layout.next_fresh++;
    out.tmp_types.push_back(t);
    return idx;
  }

  void emit(Stmt s) { out.stmts.push_back(std::move(s)); }

  ExprPtr shadow_rd(uint32_t tmp, IrType t) { return rdtmp(tmp + layout.m_tmp, t); }

  // Differentiated expression; may emit shadow-load dirty calls for Load
  // subexpressions, which therefore execute before the containing statement.
  ExprPtr diff(const ExprPtr& e) {
    switch (e->kind) {
    case Expr::Kind::RdTmp:
      return shadow_rd(e->tmp, e->type);
    case Expr::Kind::Get:
      return get(e->offset + layout.m_gs, e->type);
    case Expr::Kind::Load: {
      const uint32_t t = fresh(e->type);
      emit(dirty_dest(t, builtin::kShadowLoad, {e->args[0]}));
      return rdtmp(t, e->type);
    }
    case Expr::Kind::Const:
      return zero_of(e->type);
    case Expr::Kind::ITE:
      return ite(e->args[0], diff(e->args[1]), diff(e->args[2]));
    case Expr::Kind::CCall:
      return zero_of(e->type);
    case Expr::Kind::Op:
      return diff_op(*e);
    }
    return zero_of(e->type);
  }

  ExprPtr diff_op(const Expr& e) {
    if (e.op == Op::Unknown) {
      policy.warnings.push_back({src.addr, cur_stmt, e.name});
      return zero_of(e.type);
    }
    const OpInfo& info = op_info(e.op);
    switch (info.cls) {
    case OpClass::ScalarF64:
      return diff_fp(e, Op::AddF64, Op::SubF64, Op::MulF64, Op::DivF64, Op::SqrtF64,
                     Op::NegF64, Op::AbsF64, constant(make_f64(2.0)));
    case OpClass::ScalarF32:
      return diff_fp(e, Op::AddF32, Op::SubF32, Op::MulF32, Op::DivF32, Op::SqrtF32,
                     Op::NegF32, Op::AbsF32, constant(make_f32(2.0f)));
    case OpClass::SimdF64:
      return diff_fp(e, Op::Add64Fx2, Op::Sub64Fx2, Op::Mul64Fx2, Op::Div64Fx2,
                     Op::Sqrt64Fx2, Op::Unknown, Op::Unknown, vec_splat64(2.0));
    case OpClass::SimdF32:
      return diff_fp(e, Op::Add32Fx4, Op::Sub32Fx4, Op::Mul32Fx4, Op::Div32Fx4,
                     Op::Sqrt32Fx4, Op::Unknown, Op::Unknown, vec_splat32(2.0f));
    case OpClass::Lane0F64:
      return diff_fp(e, Op::Add64F0x2, Op::Sub64F0x2, Op::Mul64F0x2, Op::Div64F0x2,
                     Op::Sqrt64F0x2, Op::Unknown, Op::Unknown, vec_splat64(2.0));
    case OpClass::Lane0F32:
      return diff_fp(e, Op::Add32F0x4, Op::Sub32F0x4, Op::Mul32F0x4, Op::Div32F0x4,
                     Op::Sqrt32F0x4, Op::Unknown, Op::Unknown, vec_splat32(2.0f));
    case OpClass::Convert:
      // Precision changes carry the dot along; value<->integer conversions
      // round and therefore have a zero derivative almost everywhere.
      if (e.op == Op::F64toF32 || e.op == Op::F32toF64)
        return op(e.op, {diff(e.args[0])});
      return zero_of(e.type);
    case OpClass::Reinterp:
    case OpClass::Pack: {
      std::vector<ExprPtr> dargs;
      dargs.reserve(e.args.size());
      for (const auto& a : e.args)
        dargs.push_back(diff(a));
      return op(e.op, std::move(dargs));
    }
    case OpClass::Bitwise: {
      const char* target = nullptr;
      switch (e.op) {
      case Op::And32: case Op::And64: case Op::AndV128:
        target = builtin::kBitlogicAnd;
        break;
      case Op::Or32: case Op::Or64: case Op::OrV128:
        target = builtin::kBitlogicOr;
        break;
      case Op::Xor32: case Op::Xor64: case Op::XorV128:
        target = builtin::kBitlogicXor;
        break;
      default:
        return zero_of(e.type); // Not32/Not64/NotV128
      }
      return ccall(target, e.type,
                   {e.args[0], e.args[1], diff(e.args[0]), diff(e.args[1])});
    }
    case OpClass::IntArith:
    case OpClass::Logic1:
    case OpClass::CmpInt:
    case OpClass::CmpF:
    case OpClass::CmpMask:
      return zero_of(e.type);
    case OpClass::Unknown:
      break;
    }
    policy.warnings.push_back({src.addr, cur_stmt, info.name});
    return zero_of(e.type);
  }

  // Shared scalar/SIMD/lowest-lane differentiation. `two` is a constant 2 of
  // the operand shape; Unknown neg/abs means the shape has no such opcode.
  ExprPtr diff_fp(const Expr& e, Op add, Op sub, Op mul, Op div, Op sqrt, Op neg,
                  Op abs, ExprPtr two) {
    const ExprPtr& q = e.args[0];
    const ExprPtr s = e.args.size() > 1 ? e.args[1] : nullptr;
    if (e.op == add)
      return op(add, {diff(q), diff(s)});
    if (e.op == sub)
      return op(sub, {diff(q), diff(s)});
    if (e.op == mul)
      return op(add, {op(mul, {diff(q), s}), op(mul, {q, diff(s)})});
    if (e.op == div)
      return op(div, {op(sub, {op(mul, {diff(q), s}), op(mul, {q, diff(s)})}),
                      op(mul, {s, s})});
    if (e.op == sqrt)
      return op(div, {diff(q), op(mul, {std::move(two), op(sqrt, {q})})});
    if (neg != Op::Unknown && e.op == neg)
      return op(neg, {diff(q)});
    if (abs != Op::Unknown && e.op == abs)
      return ite(signbit_of(q), op(neg, {diff(q)}), diff(q));
    policy.warnings.push_back({src.addr, cur_stmt, op_info(e.op).name});
    return zero_of(e.type);
  }

  ExprPtr to_bits(const ExprPtr& e) {
    if (e->type == IrType::F64)
      return op(Op::ReinterpF64asI64, {e});
    if (e->type == IrType::F32)
      return op(Op::ReinterpF32asI32, {e});
    return e;
  }

  void rewrite_cas(const Stmt& s) {
    const IrType t = s.expected->type;
    const Op cmp = type_width(t) == 8 ? Op::CmpEQ64 : Op::CmpEQ32;
    const ExprPtr d_expected = diff(s.expected);
    const ExprPtr d_new = diff(s.data);

    // Old value and old shadow land in the destination pair.
    emit(wrtmp(s.tmp, load(s.addr, t)));
    const uint32_t t_sh = fresh(t);
    emit(dirty_dest(t_sh, builtin::kShadowLoad, {s.addr}));
    emit(wrtmp(s.tmp + layout.m_tmp, rdtmp(t_sh, t)));

    // Both the value and the dot value must match for the swap to happen.
    const uint32_t t_val = fresh(IrType::I1);
    emit(wrtmp(t_val, op(cmp, {to_bits(rdtmp(s.tmp, t)), to_bits(s.expected)})));
    const uint32_t t_dot = fresh(IrType::I1);
    emit(wrtmp(t_dot,
               op(cmp, {to_bits(shadow_rd(s.tmp, t)), to_bits(d_expected)})));
    const uint32_t t_ok = fresh(IrType::I1);
    emit(wrtmp(t_ok, op(Op::And1, {rdtmp(t_val, IrType::I1), rdtmp(t_dot, IrType::I1)})));

    emit(storeg(rdtmp(t_ok, IrType::I1), s.addr, s.data));
    emit(dirty_guarded(rdtmp(t_ok, IrType::I1), builtin::kShadowStore, {s.addr, d_new}));
  }

  void instrument_dirty(const Stmt& s) {
    const std::string_view name = s.name;
    if (name == builtin::kX87Store) {
      // Same 80-bit store on the shadow side, fed with the dot value.
      emit(dirty(builtin::kShadowX87Store, {s.args[0], diff(s.args[1])}));
      emit(s);
      return;
    }
    if (name == builtin::kX87Load) {
      emit(dirty_dest(s.tmp + layout.m_tmp, builtin::kShadowX87Load, {s.args[0]}));
      emit(s);
      return;
    }
    if (name == builtin::kSetDot || name == builtin::kGetDot ||
        name == builtin::kSetDotReg || name == builtin::kGetDotReg ||
        name == builtin::kPrintF64) {
      emit(s);
      return;
    }
    if (name.starts_with(builtin::kMathPrefix) && opts.math_wrappers && s.has_dest) {
      const MathCall* f = find_math_call(name.substr(5));
      if (f && s.args.size() == static_cast<size_t>(f->arity)) {
        std::vector<ExprPtr> dot_args = s.args;
        for (const auto& a : s.args)
          dot_args.push_back(diff(a));
        emit(wrtmp(s.tmp + layout.m_tmp,
                   ccall(std::string(builtin::kMathDotPrefix) + f->name, IrType::F64,
                         std::move(dot_args))));
        emit(s);
        return;
      }
    }
    // Anything else: shadows of output temporaries still need a defined value.
    if (s.has_dest)
      emit(wrtmp(s.tmp + layout.m_tmp, zero_of(src.tmp_types[s.tmp])));
    emit(s);
  }

  Superblock run() {
    for (size_t i = 0; i < src.stmts.size(); ++i) {
      cur_stmt = static_cast<int>(i);
      const Stmt& s = src.stmts[i];
      switch (s.kind) {
      case Stmt::Kind::WrTmp:
        emit(wrtmp(s.tmp + layout.m_tmp, diff(s.data)));
        emit(s);
        break;
      case Stmt::Kind::Put:
        emit(put(s.offset + layout.m_gs, diff(s.data)));
        emit(s);
        break;
      case Stmt::Kind::Store:
        emit(dirty(builtin::kShadowStore, {s.addr, diff(s.data)}));
        emit(s);
        break;
      case Stmt::Kind::StoreG:
        emit(dirty_guarded(s.guard, builtin::kShadowStore, {s.addr, diff(s.data)}));
        emit(s);
        break;
      case Stmt::Kind::Cas:
        rewrite_cas(s);
        break;
      case Stmt::Kind::Dirty:
        instrument_dirty(s);
        break;
      case Stmt::Kind::IMark:
      case Stmt::Kind::Exit:
      case Stmt::Kind::Halt:
        emit(s);
        break;
      }
    }
    return std::move(out);
  }
};

} // namespace

InstrumentationLayout layout_for(const Superblock& sb) {
  InstrumentationLayout layout;
  layout.m_tmp = std::max<uint32_t>(1, static_cast<uint32_t>(sb.tmp_types.size()));
  layout.next_fresh = 2 * layout.m_tmp;
  return layout;
}

Superblock instrument_superblock(const Superblock& sb, AdPolicy& policy,
                                 const InstrumentOptions& opts) {
  return Builder(sb, policy, opts).run();
}

Program instrument_program(const Program& prog, AdPolicy& policy,
                           const InstrumentOptions& opts) {
  Program out;
  out.entry = prog.entry;
  out.data = prog.data;
  for (const auto& [addr, sb] : prog.blocks)
    out.blocks.emplace(addr, instrument_superblock(sb, policy, opts));
  return out;
}

} // namespace dotvm
