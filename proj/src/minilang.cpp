#include "dotvm/minilang.hpp"

#include "dotvm/mathwrap.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

namespace dotvm::ml {

const char* type_word(Type t) { return t == Type::F64 ? "f64" : "f32"; }

namespace {

struct Token {
  enum class Kind { Ident, Number, HexInt, Punct, End };
  Kind kind;
  std::string text;
  double num = 0;
  uint64_t hex = 0;
  int line = 1, col = 1;
};

struct Lexer {
  const std::string& src;
  size_t pos = 0;
  int line = 1, col = 1;

  explicit Lexer(const std::string& s) : src(s) {}

  void advance(size_t n) {
    for (size_t i = 0; i < n && pos < src.size(); ++i, ++pos) {
      if (src[pos] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  }

  Token next() {
    for (;;) {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos])))
        advance(1);
      if (pos + 1 < src.size() && src[pos] == '/' && src[pos + 1] == '/') {
        while (pos < src.size() && src[pos] != '\n')
          advance(1);
        continue;
      }
      if (pos < src.size() && src[pos] == '#') {
        while (pos < src.size() && src[pos] != '\n')
          advance(1);
        continue;
      }
      break;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (pos >= src.size()) {
      t.kind = Token::Kind::End;
      return t;
    }
    const char c = src[pos];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos;
      while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) ||
                                  src[pos] == '_'))
        advance(1);
      t.kind = Token::Kind::Ident;
      t.text = src.substr(start, pos - start);
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && pos + 1 < src.size() &&
         std::isdigit(static_cast<unsigned char>(src[pos + 1])))) {
      if (c == '0' && pos + 1 < src.size() && (src[pos + 1] == 'x' || src[pos + 1] == 'X')) {
        size_t start = pos;
        advance(2);
        while (pos < src.size() && std::isxdigit(static_cast<unsigned char>(src[pos])))
          advance(1);
        t.kind = Token::Kind::HexInt;
        t.text = src.substr(start, pos - start);
        t.hex = std::strtoull(t.text.c_str() + 2, nullptr, 16);
        return t;
      }
      size_t start = pos;
      while (pos < src.size() && (std::isdigit(static_cast<unsigned char>(src[pos])) ||
                                  src[pos] == '.' || src[pos] == 'e' || src[pos] == 'E' ||
                                  ((src[pos] == '+' || src[pos] == '-') && pos > start &&
                                   (src[pos - 1] == 'e' || src[pos - 1] == 'E'))))
        advance(1);
      t.kind = Token::Kind::Number;
      t.text = src.substr(start, pos - start);
      t.num = std::strtod(t.text.c_str(), nullptr);
      return t;
    }
    // multi-character comparison operators
    static const char* two_char[] = {"<=", ">=", "==", "!="};
    for (const char* op : two_char) {
      if (src.compare(pos, 2, op) == 0) {
        t.kind = Token::Kind::Punct;
        t.text = op;
        advance(2);
        return t;
      }
    }
    t.kind = Token::Kind::Punct;
    t.text = std::string(1, c);
    advance(1);
    return t;
  }
};

const std::set<std::string>& keyword_set() {
  static const std::set<std::string> kw = {"var", "arr",   "if",    "else",
                                           "while", "for", "print", "dg_set_dot",
                                           "f64", "f32"};
  return kw;
}

struct Parser {
  Lexer lex;
  Token tok;

  explicit Parser(const std::string& src) : lex(src) { tok = lex.next(); }

  [[noreturn]] void fail(const std::string& msg) { throw CompileError(msg, tok.line, tok.col); }

  void bump() { tok = lex.next(); }

  bool is_punct(const char* p) const {
    return tok.kind == Token::Kind::Punct && tok.text == p;
  }
  bool is_ident(const char* w) const {
    return tok.kind == Token::Kind::Ident && tok.text == w;
  }
  void expect_punct(const char* p) {
    if (!is_punct(p))
      fail(std::string("expected '") + p + "'");
    bump();
  }
  std::string expect_ident() {
    if (tok.kind != Token::Kind::Ident)
      fail("expected identifier");
    std::string s = tok.text;
    bump();
    return s;
  }

  Program parse_program() {
    Program prog;
    while (tok.kind != Token::Kind::End) {
      if (is_ident("var") || is_ident("arr"))
        prog.decls.push_back(parse_decl());
      else
        prog.stmts.push_back(parse_stmt());
    }
    return prog;
  }

  Decl parse_decl() {
    Decl d;
    d.line = tok.line;
    d.col = tok.col;
    d.is_array = tok.text == "arr";
    bump();
    d.name = expect_ident();
    if (d.is_array) {
      expect_punct("[");
      if (tok.kind != Token::Kind::Number)
        fail("expected array length");
      d.length = static_cast<uint32_t>(tok.num);
      if (d.length == 0)
        fail("array length must be positive");
      bump();
      expect_punct("]");
    }
    expect_punct(":");
    if (is_ident("f64"))
      d.type = Type::F64;
    else if (is_ident("f32"))
      d.type = Type::F32;
    else
      fail("expected f64 or f32");
    bump();
    if (is_punct("=")) {
      if (d.is_array)
        fail("arrays cannot have initializers");
      bump();
      double sign = 1.0;
      if (is_punct("-")) {
        sign = -1.0;
        bump();
      }
      if (tok.kind != Token::Kind::Number)
        fail("expected numeric initializer");
      d.has_init = true;
      d.init = sign * tok.num;
      bump();
    }
    expect_punct(";");
    return d;
  }

  std::unique_ptr<LValue> parse_lvalue() {
    auto lv = std::make_unique<LValue>();
    lv->line = tok.line;
    lv->col = tok.col;
    lv->name = expect_ident();
    if (is_punct("[")) {
      bump();
      lv->index = parse_expr();
      expect_punct("]");
    }
    return lv;
  }

  Stmt parse_stmt() {
    Stmt s;
    s.line = tok.line;
    s.col = tok.col;
    if (is_ident("if")) {
      bump();
      s.kind = Stmt::Kind::If;
      expect_punct("(");
      s.cond = parse_cond();
      expect_punct(")");
      s.body = parse_block();
      if (is_ident("else")) {
        bump();
        s.else_body = parse_block();
      }
      return s;
    }
    if (is_ident("while")) {
      bump();
      s.kind = Stmt::Kind::While;
      expect_punct("(");
      s.cond = parse_cond();
      expect_punct(")");
      s.body = parse_block();
      return s;
    }
    if (is_ident("for")) {
      bump();
      s.kind = Stmt::Kind::For;
      expect_punct("(");
      s.init = std::make_unique<Stmt>(parse_assign_core());
      expect_punct(";");
      s.cond = parse_cond();
      expect_punct(";");
      s.step = std::make_unique<Stmt>(parse_assign_core());
      expect_punct(")");
      s.body = parse_block();
      return s;
    }
    if (is_ident("print")) {
      bump();
      s.kind = Stmt::Kind::Print;
      expect_punct("(");
      s.value = parse_expr();
      expect_punct(")");
      expect_punct(";");
      return s;
    }
    if (is_ident("dg_set_dot")) {
      bump();
      s.kind = Stmt::Kind::SetDot;
      expect_punct("(");
      s.lv = parse_lvalue();
      expect_punct(",");
      s.value = parse_expr();
      expect_punct(")");
      expect_punct(";");
      return s;
    }
    s = parse_assign_core();
    expect_punct(";");
    return s;
  }

  Stmt parse_assign_core() {
    Stmt s;
    s.line = tok.line;
    s.col = tok.col;
    s.kind = Stmt::Kind::Assign;
    s.lv = parse_lvalue();
    expect_punct("=");
    s.value = parse_expr();
    return s;
  }

  std::vector<Stmt> parse_block() {
    expect_punct("{");
    std::vector<Stmt> body;
    while (!is_punct("}"))
      body.push_back(parse_stmt());
    bump();
    return body;
  }

  std::unique_ptr<Cond> parse_cond() {
    auto c = std::make_unique<Cond>();
    c->lhs = parse_expr();
    CmpOp op;
    if (is_punct("<"))
      op = CmpOp::LT;
    else if (is_punct("<="))
      op = CmpOp::LE;
    else if (is_punct(">"))
      op = CmpOp::GT;
    else if (is_punct(">="))
      op = CmpOp::GE;
    else if (is_punct("=="))
      op = CmpOp::EQ;
    else if (is_punct("!="))
      op = CmpOp::NE;
    else
      fail("expected comparison operator");
    bump();
    c->op = op;
    c->rhs = parse_expr();
    return c;
  }

  ExprP make_expr(Expr::Kind k) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    e->line = tok.line;
    e->col = tok.col;
    return e;
  }

  ExprP parse_expr() {
    ExprP lhs = parse_term();
    while (is_punct("+") || is_punct("-")) {
      const BinOp op = is_punct("+") ? BinOp::Add : BinOp::Sub;
      bump();
      auto e = make_expr(Expr::Kind::Bin);
      e->bin = op;
      e->args.push_back(std::move(lhs));
      e->args.push_back(parse_term());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprP parse_term() {
    ExprP lhs = parse_factor();
    while (is_punct("*") || is_punct("/")) {
      const BinOp op = is_punct("*") ? BinOp::Mul : BinOp::Div;
      bump();
      auto e = make_expr(Expr::Kind::Bin);
      e->bin = op;
      e->args.push_back(std::move(lhs));
      e->args.push_back(parse_factor());
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprP parse_factor() {
    if (is_punct("-")) {
      auto e = make_expr(Expr::Kind::Neg);
      bump();
      e->args.push_back(parse_factor());
      return e;
    }
    return parse_primary();
  }

  uint64_t expect_bits_literal() {
    if (tok.kind == Token::Kind::HexInt) {
      uint64_t v = tok.hex;
      bump();
      return v;
    }
    if (tok.kind == Token::Kind::Number && tok.num == std::floor(tok.num) &&
        tok.num >= 0) {
      auto v = static_cast<uint64_t>(tok.num);
      bump();
      return v;
    }
    fail("expected integer or hex literal");
  }

  ExprP parse_primary() {
    if (tok.kind == Token::Kind::Number) {
      auto e = make_expr(Expr::Kind::Num);
      e->num = tok.num;
      bump();
      return e;
    }
    if (is_punct("(")) {
      bump();
      ExprP e = parse_expr();
      expect_punct(")");
      return e;
    }
    if (tok.kind != Token::Kind::Ident)
      fail("expected expression");
    const std::string name = tok.text;

    auto parse_call_args = [&](size_t lo, size_t hi) {
      bump(); // name
      expect_punct("(");
      std::vector<ExprP> args;
      if (!is_punct(")")) {
        args.push_back(parse_expr());
        while (is_punct(",")) {
          bump();
          args.push_back(parse_expr());
        }
      }
      expect_punct(")");
      if (args.size() < lo || args.size() > hi)
        fail("wrong number of arguments to " + name);
      return args;
    };

    // builtins with special parses
    if (name == "select") {
      auto e = make_expr(Expr::Kind::Select);
      bump();
      expect_punct("(");
      e->cond = parse_cond();
      expect_punct(",");
      e->args.push_back(parse_expr());
      expect_punct(",");
      e->args.push_back(parse_expr());
      expect_punct(")");
      return e;
    }
    if (name == "input") {
      auto e = make_expr(Expr::Kind::Input);
      bump();
      expect_punct("(");
      if (tok.kind != Token::Kind::Number || tok.num != std::floor(tok.num))
        fail("input slot must be an integer literal");
      e->input_slot = static_cast<int>(tok.num);
      bump();
      expect_punct(")");
      return e;
    }
    if (name == "dg_get_dot") {
      auto e = make_expr(Expr::Kind::GetDot);
      bump();
      expect_punct("(");
      e->lv = parse_lvalue();
      expect_punct(")");
      return e;
    }
    if (name.rfind("bits_", 0) == 0) {
      static const std::map<std::string, BitsOp> ops = {
          {"bits_and64", BitsOp::And64}, {"bits_or64", BitsOp::Or64},
          {"bits_xor64", BitsOp::Xor64}, {"bits_and32", BitsOp::And32},
          {"bits_or32", BitsOp::Or32},   {"bits_xor32", BitsOp::Xor32},
          {"bits_addi64", BitsOp::AddI64}, {"bits_subi64", BitsOp::SubI64}};
      auto it = ops.find(name);
      if (it == ops.end())
        fail("unknown intrinsic " + name);
      auto e = make_expr(Expr::Kind::Bits);
      e->bits = it->second;
      bump();
      expect_punct("(");
      e->args.push_back(parse_expr());
      expect_punct(",");
      e->bits_operand = expect_bits_literal();
      expect_punct(")");
      return e;
    }
    if (name == "abs" || name == "negabs" || name == "round" || name == "f32" ||
        name == "f64") {
      auto e = make_expr(name == "abs"      ? Expr::Kind::Abs
                         : name == "negabs" ? Expr::Kind::NegAbs
                         : name == "round"  ? Expr::Kind::Round
                         : name == "f32"    ? Expr::Kind::CastF32
                                            : Expr::Kind::CastF64);
      e->args = parse_call_args(1, 1);
      return e;
    }
    if (const MathCall* f = find_math_call(name)) {
      auto e = make_expr(Expr::Kind::MathCall);
      e->name = name;
      e->args = parse_call_args(f->arity, f->arity);
      return e;
    }
    // plain variable or element reference
    if (keyword_set().count(name))
      fail("unexpected keyword '" + name + "'");
    auto e = make_expr(Expr::Kind::Var);
    e->name = name;
    bump();
    if (is_punct("[")) {
      e->kind = Expr::Kind::Elem;
      bump();
      e->args.push_back(parse_expr());
      expect_punct("]");
    }
    return e;
  }
};

// ---------------------------------------------------------------------------
// Type checking

struct Checker {
  Program& prog;
  std::map<std::string, const Decl*> table;

  explicit Checker(Program& p) : prog(p) {}

  [[noreturn]] static void fail(const std::string& msg, int line, int col) {
    throw CompileError(msg, line, col);
  }

  const Decl& lookup(const std::string& name, int line, int col) {
    auto it = table.find(name);
    if (it == table.end())
      fail("undeclared variable '" + name + "'", line, col);
    return *it->second;
  }

  // Literal operands adapt to the other side's type.
  static bool adapt(Expr& e, Type want) {
    if (e.kind == Expr::Kind::Num) {
      e.type = want;
      return true;
    }
    return e.type == want;
  }

  Type check_lvalue(LValue& lv, bool want_array_elem_ok = true) {
    const Decl& d = lookup(lv.name, lv.line, lv.col);
    if (d.is_array) {
      if (!lv.index)
        fail("array '" + lv.name + "' needs an index", lv.line, lv.col);
      const Type it = check_expr(*lv.index);
      if (it != Type::F64)
        fail("array index must be f64", lv.line, lv.col);
      if (lv.index->kind == Expr::Kind::Num) {
        const double v = lv.index->num;
        if (v < 0 || v >= d.length)
          fail("array index out of bounds for '" + lv.name + "'", lv.line, lv.col);
      }
      (void)want_array_elem_ok;
      return d.type;
    }
    if (lv.index)
      fail("'" + lv.name + "' is not an array", lv.line, lv.col);
    return d.type;
  }

  void check_cond(Cond& c, int line, int col) {
    const Type lt = check_expr(*c.lhs);
    const Type rt = check_expr(*c.rhs);
    if (!adapt(*c.lhs, rt) && !adapt(*c.rhs, lt))
      fail("comparison operands have different types", line, col);
  }

  Type check_expr(Expr& e) {
    switch (e.kind) {
    case Expr::Kind::Num:
      e.type = Type::F64;
      break;
    case Expr::Kind::Var: {
      const Decl& d = lookup(e.name, e.line, e.col);
      if (d.is_array)
        fail("array '" + e.name + "' used without an index", e.line, e.col);
      e.type = d.type;
      break;
    }
    case Expr::Kind::Elem: {
      const Decl& d = lookup(e.name, e.line, e.col);
      if (!d.is_array)
        fail("'" + e.name + "' is not an array", e.line, e.col);
      if (check_expr(*e.args[0]) != Type::F64)
        fail("array index must be f64", e.line, e.col);
      if (e.args[0]->kind == Expr::Kind::Num) {
        const double v = e.args[0]->num;
        if (v < 0 || v >= d.length)
          fail("array index out of bounds for '" + e.name + "'", e.line, e.col);
      }
      e.type = d.type;
      break;
    }
    case Expr::Kind::Neg:
    case Expr::Kind::Abs:
    case Expr::Kind::NegAbs:
      e.type = check_expr(*e.args[0]);
      break;
    case Expr::Kind::Bin: {
      const Type lt = check_expr(*e.args[0]);
      const Type rt = check_expr(*e.args[1]);
      if (adapt(*e.args[0], rt))
        e.type = rt;
      else if (adapt(*e.args[1], lt))
        e.type = lt;
      else
        fail("operands have different types; use f32()/f64()", e.line, e.col);
      break;
    }
    case Expr::Kind::Select: {
      check_cond(*e.cond, e.line, e.col);
      const Type lt = check_expr(*e.args[0]);
      const Type rt = check_expr(*e.args[1]);
      if (adapt(*e.args[0], rt))
        e.type = rt;
      else if (adapt(*e.args[1], lt))
        e.type = lt;
      else
        fail("select branches have different types", e.line, e.col);
      if (e.cond->lhs->type != e.type)
        fail("select condition and branches must share one type", e.line, e.col);
      break;
    }
    case Expr::Kind::CastF32:
      if (check_expr(*e.args[0]) != Type::F64)
        fail("f32() expects an f64 argument", e.line, e.col);
      e.type = Type::F32;
      break;
    case Expr::Kind::CastF64:
      if (check_expr(*e.args[0]) != Type::F32)
        fail("f64() expects an f32 argument", e.line, e.col);
      e.type = Type::F64;
      break;
    case Expr::Kind::Input:
      if (e.input_slot < 0 || e.input_slot >= 64)
        fail("input slot out of range", e.line, e.col);
      prog.n_inputs = std::max(prog.n_inputs, e.input_slot + 1);
      e.type = Type::F64;
      break;
    case Expr::Kind::GetDot:
      e.type = check_lvalue(*e.lv);
      break;
    case Expr::Kind::MathCall: {
      for (auto& a : e.args)
        if (check_expr(*a) != Type::F64 && !adapt(*a, Type::F64))
          fail("math calls take f64 arguments", e.line, e.col);
      e.type = Type::F64;
      if (e.name == "floor" || e.name == "ceil" || e.name == "fmod")
        prog.uses_nonsmooth = true;
      break;
    }
    case Expr::Kind::Bits: {
      const bool is32 = e.bits == BitsOp::And32 || e.bits == BitsOp::Or32 ||
                        e.bits == BitsOp::Xor32;
      const Type want = is32 ? Type::F32 : Type::F64;
      if (check_expr(*e.args[0]) != want && !adapt(*e.args[0], want))
        fail("bit intrinsic argument has the wrong type", e.line, e.col);
      e.type = want;
      if (!bits_pattern_supported(e))
        prog.uses_limitation = true;
      break;
    }
    case Expr::Kind::Round:
      if (check_expr(*e.args[0]) != Type::F64 && !adapt(*e.args[0], Type::F64))
        fail("round() expects an f64 argument", e.line, e.col);
      e.type = Type::F64;
      prog.uses_nonsmooth = true;
      break;
    }
    return e.type;
  }

  static bool bits_pattern_supported(const Expr& e) {
    switch (e.bits) {
    case BitsOp::And64:
      return e.bits_operand == 0x7FFFFFFFFFFFFFFFull || e.bits_operand == ~0ull;
    case BitsOp::Or64:
      return e.bits_operand == 0x8000000000000000ull || e.bits_operand == 0;
    case BitsOp::Xor64:
      return e.bits_operand == 0x8000000000000000ull;
    case BitsOp::And32:
      return e.bits_operand == 0x7FFFFFFFull || e.bits_operand == 0xFFFFFFFFull;
    case BitsOp::Or32:
      return e.bits_operand == 0x80000000ull || e.bits_operand == 0;
    case BitsOp::Xor32:
      return e.bits_operand == 0x80000000ull;
    case BitsOp::AddI64:
    case BitsOp::SubI64:
      return false;
    }
    return false;
  }

  void check_stmt(Stmt& s) {
    switch (s.kind) {
    case Stmt::Kind::Assign: {
      const Type lt = check_lvalue(*s.lv);
      if (check_expr(*s.value) != lt && !adapt(*s.value, lt))
        fail("assignment types differ; use f32()/f64()", s.line, s.col);
      break;
    }
    case Stmt::Kind::SetDot: {
      const Type lt = check_lvalue(*s.lv);
      if (check_expr(*s.value) != lt && !adapt(*s.value, lt))
        fail("dg_set_dot value must match the target's type", s.line, s.col);
      break;
    }
    case Stmt::Kind::Print:
      check_expr(*s.value);
      prog.n_prints += 1;
      break;
    case Stmt::Kind::If:
      check_cond(*s.cond, s.line, s.col);
      for (auto& c : s.body)
        check_stmt(c);
      for (auto& c : s.else_body)
        check_stmt(c);
      break;
    case Stmt::Kind::While:
      check_cond(*s.cond, s.line, s.col);
      for (auto& c : s.body)
        check_stmt(c);
      break;
    case Stmt::Kind::For:
      check_stmt(*s.init);
      check_cond(*s.cond, s.line, s.col);
      check_stmt(*s.step);
      for (auto& c : s.body)
        check_stmt(c);
      break;
    }
  }

  void run() {
    for (const Decl& d : prog.decls) {
      if (table.count(d.name))
        fail("duplicate declaration of '" + d.name + "'", d.line, d.col);
      table[d.name] = &d;
    }
    for (auto& s : prog.stmts)
      check_stmt(s);
  }
};

} // namespace

Program parse(const std::string& source) {
  Parser p(source);
  Program prog = p.parse_program();
  if (p.tok.kind != Token::Kind::End)
    throw CompileError("trailing input", p.tok.line, p.tok.col);
  Checker(prog).run();
  return prog;
}

} // namespace dotvm::ml
