#include "dotvm/oracle.hpp"

#include "dotvm/fpcodec.hpp"
#include "dotvm/mathwrap.hpp"

#include <bit>
#include <cmath>
#include <map>

namespace dotvm {

namespace {

using ml::Type;

struct Bailout {
  std::string message;
};

struct Interp {
  const ml::Program& ast;
  std::span<const double> inputs;
  int seed_input;
  OracleResult res;

  std::map<std::string, DualValue> scalars;
  std::map<std::string, std::vector<DualValue>> arrays;
  std::map<std::string, const ml::Decl*> decls;
  std::vector<double> slot_values;
  std::vector<double> slot_dots;
  std::map<const ml::Stmt*, int> print_slots;
  int next_slot = 0;

  // Print statements own one output slot each, in lexical order, matching
  // the compiler's layout; a print inside a loop overwrites its slot.
  void assign_slots(const std::vector<ml::Stmt>& body) {
    for (const auto& s : body) {
      switch (s.kind) {
      case ml::Stmt::Kind::Print:
        print_slots[&s] = next_slot++;
        break;
      case ml::Stmt::Kind::If:
        assign_slots(s.body);
        assign_slots(s.else_body);
        break;
      case ml::Stmt::Kind::While:
      case ml::Stmt::Kind::For:
        assign_slots(s.body);
        break;
      default:
        break;
      }
    }
  }

  void sig(uint64_t v) {
    res.path_sig ^= v + 0x9E3779B97F4A7C15ull;
    res.path_sig *= 1099511628211ull;
  }

  static double round32(double v) { return narrow_to_binary32(v); }

  // Round a dual through binary32 when the expression type is f32.
  static DualValue typed(Type t, double v, double d) {
    if (t == Type::F32)
      return {round32(v), round32(d)};
    return {v, d};
  }

  DualValue eval_bin(const ml::Expr& e, DualValue a, DualValue b) {
    const bool f32 = e.type == Type::F32;
    auto r = [&](double x) { return f32 ? round32(x) : x; };
    switch (e.bin) {
    case ml::BinOp::Add:
      return {r(a.value + b.value), r(a.dot + b.dot)};
    case ml::BinOp::Sub:
      return {r(a.value - b.value), r(a.dot - b.dot)};
    case ml::BinOp::Mul: {
      const double t1 = r(a.dot * b.value);
      const double t2 = r(a.value * b.dot);
      return {r(a.value * b.value), r(t1 + t2)};
    }
    case ml::BinOp::Div: {
      const double t1 = r(a.dot * b.value);
      const double t2 = r(a.value * b.dot);
      const double num = r(t1 - t2);
      const double den = r(b.value * b.value);
      return {r(a.value / b.value), r(num / den)};
    }
    }
    throw Bailout{"corrupt binary operator"};
  }

  bool eval_cond(const ml::Cond& c) {
    const DualValue a = eval(*c.lhs);
    const DualValue b = eval(*c.rhs);
    bool v = false;
    switch (c.op) {
    case ml::CmpOp::LT: v = a.value < b.value; break;
    case ml::CmpOp::LE: v = a.value <= b.value; break;
    case ml::CmpOp::GT: v = a.value > b.value; break;
    case ml::CmpOp::GE: v = a.value >= b.value; break;
    case ml::CmpOp::EQ: v = a.value == b.value; break;
    case ml::CmpOp::NE: v = a.value != b.value; break;
    }
    sig(v ? 0x51 : 0x50);
    return v;
  }

  DualValue* lvalue_slot(const ml::LValue& lv) {
    auto it = decls.find(lv.name);
    if (it == decls.end())
      throw Bailout{"undeclared variable " + lv.name};
    if (it->second->is_array) {
      const DualValue idx = eval(*lv.index);
      const int64_t i = f64_to_i64_rne(idx.value);
      if (i < 0 || i >= it->second->length)
        throw Bailout{"array index out of bounds on " + lv.name};
      return &arrays[lv.name][static_cast<size_t>(i)];
    }
    return &scalars[lv.name];
  }

  DualValue eval(const ml::Expr& e) {
    switch (e.kind) {
    case ml::Expr::Kind::Num:
      return typed(e.type, e.num, 0.0);
    case ml::Expr::Kind::Var:
      return scalars[e.name];
    case ml::Expr::Kind::Elem: {
      const DualValue idx = eval(*e.args[0]);
      const auto& d = *decls.at(e.name);
      const int64_t i = f64_to_i64_rne(idx.value);
      if (i < 0 || i >= d.length)
        throw Bailout{"array index out of bounds on " + e.name};
      return arrays[e.name][static_cast<size_t>(i)];
    }
    case ml::Expr::Kind::Neg: {
      const DualValue a = eval(*e.args[0]);
      return {-a.value, -a.dot};
    }
    case ml::Expr::Kind::Abs: {
      const DualValue a = eval(*e.args[0]);
      sig(std::signbit(a.value) ? 0x61 : 0x60);
      return {std::fabs(a.value), std::signbit(a.value) ? -a.dot : a.dot};
    }
    case ml::Expr::Kind::NegAbs: {
      const DualValue a = eval(*e.args[0]);
      sig(std::signbit(a.value) ? 0x63 : 0x62);
      return {-std::fabs(a.value), std::signbit(a.value) ? a.dot : -a.dot};
    }
    case ml::Expr::Kind::Bin:
      return eval_bin(e, eval(*e.args[0]), eval(*e.args[1]));
    case ml::Expr::Kind::Select:
      return eval_cond(*e.cond) ? eval(*e.args[0]) : eval(*e.args[1]);
    case ml::Expr::Kind::CastF32: {
      const DualValue a = eval(*e.args[0]);
      return {round32(a.value), round32(a.dot)};
    }
    case ml::Expr::Kind::CastF64:
      return eval(*e.args[0]);
    case ml::Expr::Kind::Input: {
      if (static_cast<size_t>(e.input_slot) >= inputs.size())
        throw Bailout{"missing input value"};
      return {inputs[e.input_slot], e.input_slot == seed_input ? 1.0 : 0.0};
    }
    case ml::Expr::Kind::GetDot: {
      const DualValue* slot = lvalue_slot(*e.lv);
      // The getter's own dot is the shadow of the staging slot, which is
      // never seeded: +0.0.
      return typed(e.type, slot->dot, 0.0);
    }
    case ml::Expr::Kind::MathCall: {
      const MathCall* f = find_math_call(e.name);
      if (!f)
        throw Bailout{"unknown math function " + e.name};
      DualValue a1 = eval(*e.args[0]);
      DualValue a2 = f->arity == 2 ? eval(*e.args[1]) : DualValue{};
      const double v = math_value(*f, a1.value, a2.value);
      const double d = math_dot(*f, a1.value, a2.value, a1.dot, a2.dot);
      if (e.name == "floor" || e.name == "ceil")
        sig(std::bit_cast<uint64_t>(v));
      if (e.name == "fmod")
        sig(std::bit_cast<uint64_t>(std::trunc(a1.value / a2.value)));
      return {v, d};
    }
    case ml::Expr::Kind::Bits:
      return eval_bits(e);
    case ml::Expr::Kind::Round: {
      const DualValue a = eval(*e.args[0]);
      const double v = static_cast<double>(f64_to_i64_rne(a.value));
      sig(std::bit_cast<uint64_t>(v));
      return {v, 0.0};
    }
    }
    throw Bailout{"corrupt expression"};
  }

  DualValue eval_bits(const ml::Expr& e) {
    const DualValue a = eval(*e.args[0]);
    const uint64_t m = e.bits_operand;
    switch (e.bits) {
    case ml::BitsOp::And64:
      if (m == 0x7FFFFFFFFFFFFFFFull) {
        sig(std::signbit(a.value) ? 0x61 : 0x60);
        return {std::fabs(a.value), std::signbit(a.value) ? -a.dot : a.dot};
      }
      if (m == ~0ull)
        return a;
      break;
    case ml::BitsOp::Or64:
      if (m == 0x8000000000000000ull) {
        sig(std::signbit(a.value) ? 0x63 : 0x62);
        return {-std::fabs(a.value), std::signbit(a.value) ? a.dot : -a.dot};
      }
      if (m == 0)
        return a;
      break;
    case ml::BitsOp::Xor64:
      if (m == 0x8000000000000000ull)
        return {-a.value, -a.dot};
      break;
    case ml::BitsOp::And32:
      if (m == 0x7FFFFFFFull) {
        sig(std::signbit(a.value) ? 0x61 : 0x60);
        return {round32(std::fabs(a.value)), std::signbit(a.value) ? -a.dot : a.dot};
      }
      if (m == 0xFFFFFFFFull)
        return a;
      break;
    case ml::BitsOp::Or32:
      if (m == 0x80000000ull) {
        sig(std::signbit(a.value) ? 0x63 : 0x62);
        return {round32(-std::fabs(a.value)), std::signbit(a.value) ? a.dot : -a.dot};
      }
      if (m == 0)
        return a;
      break;
    case ml::BitsOp::Xor32:
      if (m == 0x80000000ull)
        return {-a.value, -a.dot};
      break;
    case ml::BitsOp::AddI64:
    case ml::BitsOp::SubI64:
      break;
    }
    throw Bailout{"bit intrinsic outside the differentiable patterns"};
  }

  void exec(const ml::Stmt& s) {
    switch (s.kind) {
    case ml::Stmt::Kind::Assign: {
      const DualValue v = eval(*s.value);
      DualValue* slot = lvalue_slot(*s.lv);
      *slot = typed(decls.at(s.lv->name)->type, v.value, v.dot);
      break;
    }
    case ml::Stmt::Kind::SetDot: {
      const DualValue v = eval(*s.value);
      DualValue* slot = lvalue_slot(*s.lv);
      slot->dot = typed(decls.at(s.lv->name)->type, v.value, 0).value;
      break;
    }
    case ml::Stmt::Kind::Print: {
      DualValue v = eval(*s.value);
      if (s.value->type == Type::F32)
        v = {round32(v.value), round32(v.dot)}; // already rounded; widening is exact
      const int slot = print_slots.at(&s);
      res.print_values.push_back(v.value);
      slot_values[slot] = v.value;
      slot_dots[slot] = v.dot;
      break;
    }
    case ml::Stmt::Kind::If: {
      if (eval_cond(*s.cond)) {
        for (const auto& c : s.body)
          exec(c);
      } else {
        for (const auto& c : s.else_body)
          exec(c);
      }
      break;
    }
    case ml::Stmt::Kind::While: {
      uint64_t iter = 0;
      while (eval_cond(*s.cond)) {
        for (const auto& c : s.body)
          exec(c);
        if (++iter > 10'000'000)
          throw Bailout{"loop bound exceeded"};
      }
      break;
    }
    case ml::Stmt::Kind::For: {
      exec(*s.init);
      uint64_t iter = 0;
      while (eval_cond(*s.cond)) {
        for (const auto& c : s.body)
          exec(c);
        exec(*s.step);
        if (++iter > 10'000'000)
          throw Bailout{"loop bound exceeded"};
      }
      break;
    }
    }
  }

  OracleResult run() {
    for (const ml::Decl& d : ast.decls) {
      decls[d.name] = &d;
      if (d.is_array) {
        arrays[d.name] = std::vector<DualValue>(d.length);
      } else {
        const double init = d.has_init ? d.init : 0.0;
        scalars[d.name] =
            d.type == Type::F32 ? DualValue{round32(init), 0.0} : DualValue{init, 0.0};
      }
    }
    slot_values.assign(ast.n_prints, 0.0);
    slot_dots.assign(ast.n_prints, 0.0);
    assign_slots(ast.stmts);
    try {
      for (const auto& s : ast.stmts)
        exec(s);
    } catch (const Bailout& b) {
      res.ok = false;
      res.error = b.message;
      return std::move(res);
    }
    res.out_values = std::move(slot_values);
    res.out_dots = std::move(slot_dots);
    return std::move(res);
  }
};

} // namespace

OracleResult oracle_eval(const ml::Program& ast, std::span<const double> inputs,
                         int seed_input) {
  Interp interp{ast, inputs, seed_input, {}};
  return interp.run();
}

} // namespace dotvm
