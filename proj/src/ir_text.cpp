#include "dotvm/ir_text.hpp"

#include "dotvm/validate.hpp"

#include <json.hpp>

#include <cctype>
#include <sstream>

namespace dotvm {

namespace {

std::string hex64(uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::uppercase << v;
  return os.str();
}

std::string const_literal(const Value& v) {
  std::ostringstream os;
  os << type_name(v.type) << "{0x" << std::hex << std::uppercase;
  if (v.type == IrType::V128) {
    // 128-bit literal, most significant digits first.
    os.width(16);
    os.fill('0');
    os << v.lane64(1);
    os.width(16);
    os << v.lane64(0);
  } else {
    os << v.u64();
  }
  os << "}";
  return os.str();
}

void print_expr_to(std::ostream& os, const Expr& e) {
  switch (e.kind) {
  case Expr::Kind::RdTmp:
    os << "t" << e.tmp;
    return;
  case Expr::Kind::Get:
    os << "GET:" << type_name(e.type) << "(" << e.offset << ")";
    return;
  case Expr::Kind::Load:
    os << "LD:" << type_name(e.type) << "(";
    print_expr_to(os, *e.args[0]);
    os << ")";
    return;
  case Expr::Kind::Const:
    os << const_literal(e.literal);
    return;
  case Expr::Kind::ITE:
    os << "ITE(";
    print_expr_to(os, *e.args[0]);
    os << ",";
    print_expr_to(os, *e.args[1]);
    os << ",";
    print_expr_to(os, *e.args[2]);
    os << ")";
    return;
  case Expr::Kind::CCall:
    os << "ccall " << e.name << ":" << type_name(e.type) << "(";
    for (size_t i = 0; i < e.args.size(); ++i) {
      if (i)
        os << ",";
      print_expr_to(os, *e.args[i]);
    }
    os << ")";
    return;
  case Expr::Kind::Op:
    if (e.op == Op::Unknown)
      os << e.name << ":" << type_name(e.type);
    else
      os << op_info(e.op).name;
    os << "(";
    for (size_t i = 0; i < e.args.size(); ++i) {
      if (i)
        os << ",";
      print_expr_to(os, *e.args[i]);
    }
    os << ")";
    return;
  }
}

void print_stmt_to(std::ostream& os, const Stmt& s) {
  switch (s.kind) {
  case Stmt::Kind::WrTmp:
    os << "t" << s.tmp << " = ";
    print_expr_to(os, *s.data);
    return;
  case Stmt::Kind::Put:
    os << "PUT(" << s.offset << ") = ";
    print_expr_to(os, *s.data);
    return;
  case Stmt::Kind::Store:
    os << "ST(";
    print_expr_to(os, *s.addr);
    os << ") = ";
    print_expr_to(os, *s.data);
    return;
  case Stmt::Kind::StoreG:
    os << "if (";
    print_expr_to(os, *s.guard);
    os << ") ST(";
    print_expr_to(os, *s.addr);
    os << ") = ";
    print_expr_to(os, *s.data);
    return;
  case Stmt::Kind::Cas:
    os << "t" << s.tmp << " = CAS(";
    print_expr_to(os, *s.addr);
    os << " :: ";
    print_expr_to(os, *s.expected);
    os << " -> ";
    print_expr_to(os, *s.data);
    os << ")";
    return;
  case Stmt::Kind::Dirty:
    if (s.guard) {
      os << "if (";
      print_expr_to(os, *s.guard);
      os << ") ";
    }
    if (s.has_dest)
      os << "t" << s.tmp << " = ";
    os << "dirty " << s.name << "(";
    for (size_t i = 0; i < s.args.size(); ++i) {
      if (i)
        os << ",";
      print_expr_to(os, *s.args[i]);
    }
    os << ")";
    return;
  case Stmt::Kind::IMark:
    os << "imark " << hex64(s.imark_addr) << " " << s.imark_len;
    return;
  case Stmt::Kind::Exit:
    os << "if (";
    print_expr_to(os, *s.guard);
    os << ") goto " << hex64(s.target);
    return;
  case Stmt::Kind::Halt:
    os << "halt";
    return;
  }
}

// --------------------------------------------------------------------------
// Parser

struct Cursor {
  const std::string& text;
  size_t pos = 0;
  int line;

  Cursor(const std::string& text, int line) : text(text), line(line) {}

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, line, static_cast<int>(pos) + 1);
  }

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t'))
      ++pos;
  }

  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }

  char peek() {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  }

  bool try_consume(char c) {
    skip_ws();
    if (pos < text.size() && text[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!try_consume(c))
      fail(std::string("expected '") + c + "'");
  }

  bool try_keyword(std::string_view kw) {
    skip_ws();
    if (text.compare(pos, kw.size(), kw) != 0)
      return false;
    const size_t after = pos + kw.size();
    if (after < text.size() && (std::isalnum(static_cast<unsigned char>(text[after])) ||
                                text[after] == '_'))
      return false;
    pos = after;
    return true;
  }

  std::string ident() {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                 text[pos] == '_'))
      ++pos;
    if (pos == start)
      fail("expected identifier");
    return text.substr(start, pos - start);
  }

  uint64_t number() {
    skip_ws();
    size_t start = pos;
    int base = 10;
    if (text.compare(pos, 2, "0x") == 0 || text.compare(pos, 2, "0X") == 0) {
      base = 16;
      pos += 2;
      start = pos;
    }
    while (pos < text.size() && std::isxdigit(static_cast<unsigned char>(text[pos])))
      ++pos;
    if (pos == start)
      fail("expected number");
    return std::stoull(text.substr(start, pos - start), nullptr, base);
  }
};

struct Parser {
  Program prog;
  Superblock* block = nullptr;
  bool entry_seen = false;

  void finish_block() { block = nullptr; }

  IrType tmp_type(Cursor& c, uint64_t idx) {
    if (!block)
      c.fail("temporary outside a superblock");
    if (idx >= block->tmp_types.size())
      c.fail("temporary index out of range: t" + std::to_string(idx));
    return block->tmp_types[idx];
  }

  Value parse_const(Cursor& c, IrType type) {
    c.expect('{');
    c.skip_ws();
    if (c.text.compare(c.pos, 2, "0x") != 0 && c.text.compare(c.pos, 2, "0X") != 0)
      c.fail("constants use hex literals");
    c.pos += 2;
    std::string digits;
    while (c.pos < c.text.size() &&
           std::isxdigit(static_cast<unsigned char>(c.text[c.pos])))
      digits += c.text[c.pos++];
    if (digits.empty())
      c.fail("expected hex digits");
    c.expect('}');
    Value v = zero_value(type);
    if (type == IrType::V128) {
      if (digits.size() > 32)
        c.fail("V128 literal wider than 128 bits");
      std::string padded = std::string(32 - digits.size(), '0') + digits;
      v.set_lane64(1, std::stoull(padded.substr(0, 16), nullptr, 16));
      v.set_lane64(0, std::stoull(padded.substr(16), nullptr, 16));
    } else {
      if (digits.size() > 16)
        c.fail("literal wider than 64 bits");
      uint64_t bits = std::stoull(digits, nullptr, 16);
      if (type_width(type) < 8 && (bits >> (8 * type_width(type))) != 0)
        c.fail("literal wider than its type");
      v.set_lane64(0, bits);
    }
    return v;
  }

  ExprPtr parse_expr(Cursor& c) {
    c.skip_ws();
    if (c.text.compare(c.pos, 6, "ccall ") == 0) {
      c.pos += 6;
      std::string name = c.ident();
      c.expect(':');
      IrType type = parse_type(c);
      return ccall(std::move(name), type, parse_args(c));
    }
    // tN but not a longer identifier starting with 't'
    if (c.peek() == 't' && c.pos + 1 < c.text.size() &&
        std::isdigit(static_cast<unsigned char>(c.text[c.pos + 1]))) {
      ++c.pos;
      uint64_t idx = c.number();
      return rdtmp(static_cast<uint32_t>(idx), tmp_type(c, idx));
    }
    std::string word = c.ident();
    if (word == "GET") {
      c.expect(':');
      IrType type = parse_type(c);
      c.expect('(');
      uint64_t off = c.number();
      c.expect(')');
      return get(static_cast<uint32_t>(off), type);
    }
    if (word == "LD") {
      c.expect(':');
      IrType type = parse_type(c);
      c.expect('(');
      ExprPtr addr = parse_expr(c);
      c.expect(')');
      return load(std::move(addr), type);
    }
    if (word == "ITE") {
      c.expect('(');
      ExprPtr cond = parse_expr(c);
      c.expect(',');
      ExprPtr t = parse_expr(c);
      c.expect(',');
      ExprPtr f = parse_expr(c);
      c.expect(')');
      if (t->type != f->type)
        c.fail("ITE branch types differ");
      return ite(std::move(cond), std::move(t), std::move(f));
    }
    if (auto type = type_from_name(word)) {
      if (c.peek() == '{')
        return constant(parse_const(c, *type));
      c.fail("expected '{' after type literal");
    }
    if (auto known = op_from_name(word)) {
      auto args = parse_args(c);
      const OpInfo& info = op_info(*known);
      if (args.size() != info.arity)
        c.fail("operand count mismatch for " + word);
      for (size_t i = 0; i < args.size(); ++i)
        if (args[i]->type != info.operand[i])
          c.fail("operand type mismatch for " + word);
      return op(*known, std::move(args));
    }
    if (c.peek() == ':') {
      // Uninterpreted opcode: the result type is spelled explicitly.
      c.expect(':');
      IrType type = parse_type(c);
      return op_unknown(std::move(word), type, parse_args(c));
    }
    c.fail("unknown expression '" + word + "'");
  }

  std::vector<ExprPtr> parse_args(Cursor& c) {
    std::vector<ExprPtr> args;
    c.expect('(');
    if (!c.try_consume(')')) {
      do {
        args.push_back(parse_expr(c));
      } while (c.try_consume(','));
      c.expect(')');
    }
    return args;
  }

  IrType parse_type(Cursor& c) {
    std::string word = c.ident();
    auto t = type_from_name(word);
    if (!t)
      c.fail("unknown type '" + word + "'");
    return *t;
  }

  void require_block(Cursor& c) {
    if (!block)
      c.fail("statement outside a superblock");
  }

  void parse_line(const std::string& raw, int lineno) {
    std::string text = raw;
    if (auto hash = text.find('#'); hash != std::string::npos)
      text.resize(hash);
    Cursor c(text, lineno);
    if (c.at_end())
      return;

    if (c.try_keyword("entry")) {
      prog.entry = c.number();
      entry_seen = true;
      return;
    }
    if (c.try_keyword("data")) {
      DataSegment seg;
      seg.addr = c.number();
      c.skip_ws();
      std::string digits;
      while (c.pos < c.text.size() &&
             std::isxdigit(static_cast<unsigned char>(c.text[c.pos])))
        digits += c.text[c.pos++];
      if (digits.size() % 2 != 0)
        c.fail("data bytes need an even number of hex digits");
      for (size_t i = 0; i < digits.size(); i += 2)
        seg.bytes.push_back(
            static_cast<uint8_t>(std::stoul(digits.substr(i, 2), nullptr, 16)));
      prog.data.push_back(std::move(seg));
      return;
    }
    if (c.try_keyword("sb")) {
      Superblock sb;
      sb.addr = c.number();
      if (!c.try_keyword("tmps"))
        c.fail("expected 'tmps:' in superblock header");
      c.expect(':');
      while (!c.at_end())
        sb.tmp_types.push_back(parse_type(c));
      if (prog.blocks.count(sb.addr))
        c.fail("duplicate superblock address");
      auto [it, _] = prog.blocks.emplace(sb.addr, std::move(sb));
      block = &it->second;
      if (!entry_seen) {
        prog.entry = it->first;
        entry_seen = true;
      }
      return;
    }
    if (c.try_keyword("imark")) {
      require_block(c);
      uint64_t addr = c.number();
      uint64_t len = c.number();
      block->stmts.push_back(imark(addr, static_cast<uint32_t>(len)));
      return;
    }
    if (c.try_keyword("halt")) {
      require_block(c);
      block->stmts.push_back(halt());
      return;
    }
    if (c.try_keyword("if")) {
      require_block(c);
      c.expect('(');
      ExprPtr guard = parse_expr(c);
      c.expect(')');
      if (c.try_keyword("goto")) {
        block->stmts.push_back(exit_if(std::move(guard), c.number()));
        return;
      }
      if (c.try_keyword("ST")) {
        c.expect('(');
        ExprPtr addr = parse_expr(c);
        c.expect(')');
        c.expect('=');
        block->stmts.push_back(storeg(std::move(guard), std::move(addr), parse_expr(c)));
        return;
      }
      if (c.try_keyword("dirty")) {
        std::string name = c.ident();
        Stmt s = dirty_guarded(std::move(guard), std::move(name), parse_args(c));
        block->stmts.push_back(std::move(s));
        return;
      }
      c.fail("expected goto, ST or dirty after guard");
    }
    if (c.try_keyword("PUT")) {
      require_block(c);
      c.expect('(');
      uint64_t off = c.number();
      c.expect(')');
      c.expect('=');
      block->stmts.push_back(put(static_cast<uint32_t>(off), parse_expr(c)));
      return;
    }
    if (c.try_keyword("ST")) {
      require_block(c);
      c.expect('(');
      ExprPtr addr = parse_expr(c);
      c.expect(')');
      c.expect('=');
      block->stmts.push_back(store(std::move(addr), parse_expr(c)));
      return;
    }
    if (c.try_keyword("dirty")) {
      require_block(c);
      std::string name = c.ident();
      block->stmts.push_back(dirty(std::move(name), parse_args(c)));
      return;
    }
    if (c.peek() == 't') {
      require_block(c);
      ++c.pos;
      uint64_t idx = c.number();
      IrType type = tmp_type(c, idx);
      c.expect('=');
      if (c.try_keyword("CAS")) {
        c.expect('(');
        ExprPtr addr = parse_expr(c);
        c.skip_ws();
        if (c.text.compare(c.pos, 2, "::") != 0)
          c.fail("expected '::' in CAS");
        c.pos += 2;
        ExprPtr expected = parse_expr(c);
        c.skip_ws();
        if (c.text.compare(c.pos, 2, "->") != 0)
          c.fail("expected '->' in CAS");
        c.pos += 2;
        ExprPtr newval = parse_expr(c);
        c.expect(')');
        block->stmts.push_back(
            cas(static_cast<uint32_t>(idx), std::move(addr), std::move(expected),
                std::move(newval)));
        return;
      }
      if (c.try_keyword("dirty")) {
        std::string name = c.ident();
        Stmt s = dirty_dest(static_cast<uint32_t>(idx), std::move(name), parse_args(c));
        block->stmts.push_back(std::move(s));
        return;
      }
      ExprPtr value = parse_expr(c);
      if (value->type != type)
        c.fail("assignment type mismatch for t" + std::to_string(idx));
      block->stmts.push_back(wrtmp(static_cast<uint32_t>(idx), std::move(value)));
      return;
    }
    c.fail("unrecognized statement");
  }
};

} // namespace

Program parse_asm(const std::string& text) {
  Parser p;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    p.parse_line(line, lineno);
  }
  auto diags = validate(p.prog);
  if (!diags.empty()) {
    const Diagnostic& d = diags.front();
    std::ostringstream os;
    os << d.message << " (superblock " << hex64(d.sb_addr);
    if (d.stmt_index >= 0)
      os << ", statement " << d.stmt_index;
    os << ")";
    throw ParseError(os.str(), 0, 0);
  }
  return p.prog;
}

std::string print_expr(const Expr& e) {
  std::ostringstream os;
  print_expr_to(os, e);
  return os.str();
}

std::string print_stmt(const Stmt& s) {
  std::ostringstream os;
  print_stmt_to(os, s);
  return os.str();
}

std::string print_superblock(const Superblock& sb) {
  std::ostringstream os;
  os << "sb " << hex64(sb.addr) << " tmps:";
  for (IrType t : sb.tmp_types)
    os << " " << type_name(t);
  os << "\n";
  for (const Stmt& s : sb.stmts) {
    os << "  ";
    print_stmt_to(os, s);
    os << "\n";
  }
  return os.str();
}

std::string print_program(const Program& prog) {
  std::ostringstream os;
  os << "entry " << hex64(prog.entry) << "\n";
  for (const auto& seg : prog.data) {
    os << "data " << hex64(seg.addr) << " ";
    for (uint8_t b : seg.bytes) {
      static const char* digits = "0123456789ABCDEF";
      os << digits[b >> 4] << digits[b & 0xF];
    }
    os << "\n";
  }
  for (const auto& [addr, sb] : prog.blocks)
    os << print_superblock(sb);
  return os.str();
}

namespace {

nlohmann::json expr_json(const Expr& e) {
  nlohmann::json j;
  j["IrType"] = type_name(e.type);
  switch (e.kind) {
  case Expr::Kind::RdTmp:
    j["Expr"] = "RdTmp";
    j["tmp"] = e.tmp;
    break;
  case Expr::Kind::Get:
    j["Expr"] = "Get";
    j["offset"] = e.offset;
    break;
  case Expr::Kind::Load:
    j["Expr"] = "Load";
    break;
  case Expr::Kind::Op:
    j["Expr"] = "Op";
    j["Opcode"] = e.op == Op::Unknown ? e.name.c_str() : op_info(e.op).name;
    break;
  case Expr::Kind::Const:
    j["Expr"] = "Const";
    j["literal"] = const_literal(e.literal);
    break;
  case Expr::Kind::ITE:
    j["Expr"] = "ITE";
    break;
  case Expr::Kind::CCall:
    j["Expr"] = "CCall";
    j["name"] = e.name;
    break;
  }
  if (!e.args.empty()) {
    auto& args = j["args"] = nlohmann::json::array();
    for (const auto& a : e.args)
      args.push_back(expr_json(*a));
  }
  return j;
}

nlohmann::json stmt_json(const Stmt& s) {
  nlohmann::json j;
  switch (s.kind) {
  case Stmt::Kind::WrTmp:
    j["Stmt"] = "WrTmp";
    j["tmp"] = s.tmp;
    j["data"] = expr_json(*s.data);
    break;
  case Stmt::Kind::Put:
    j["Stmt"] = "Put";
    j["offset"] = s.offset;
    j["data"] = expr_json(*s.data);
    break;
  case Stmt::Kind::Store:
    j["Stmt"] = "Store";
    j["addr"] = expr_json(*s.addr);
    j["data"] = expr_json(*s.data);
    break;
  case Stmt::Kind::StoreG:
    j["Stmt"] = "StoreG";
    j["guard"] = expr_json(*s.guard);
    j["addr"] = expr_json(*s.addr);
    j["data"] = expr_json(*s.data);
    break;
  case Stmt::Kind::Cas:
    j["Stmt"] = "Cas";
    j["tmp"] = s.tmp;
    j["addr"] = expr_json(*s.addr);
    j["expected"] = expr_json(*s.expected);
    j["data"] = expr_json(*s.data);
    break;
  case Stmt::Kind::Dirty:
    j["Stmt"] = "Dirty";
    j["name"] = s.name;
    if (s.has_dest)
      j["tmp"] = s.tmp;
    if (s.guard)
      j["guard"] = expr_json(*s.guard);
    {
      auto& args = j["args"] = nlohmann::json::array();
      for (const auto& a : s.args)
        args.push_back(expr_json(*a));
    }
    break;
  case Stmt::Kind::IMark:
    j["Stmt"] = "IMark";
    j["addr"] = hex64(s.imark_addr);
    j["len"] = s.imark_len;
    break;
  case Stmt::Kind::Exit:
    j["Stmt"] = "Exit";
    j["guard"] = expr_json(*s.guard);
    j["target"] = hex64(s.target);
    break;
  case Stmt::Kind::Halt:
    j["Stmt"] = "Halt";
    break;
  }
  return j;
}

} // namespace

std::string program_to_json(const Program& prog) {
  nlohmann::json j;
  j["Program"]["entry"] = hex64(prog.entry);
  auto& blocks = j["Program"]["Superblocks"] = nlohmann::json::array();
  for (const auto& [addr, sb] : prog.blocks) {
    nlohmann::json jb;
    jb["addr"] = hex64(addr);
    auto& types = jb["tmp_types"] = nlohmann::json::array();
    for (IrType t : sb.tmp_types)
      types.push_back(type_name(t));
    auto& stmts = jb["statements"] = nlohmann::json::array();
    for (const Stmt& s : sb.stmts)
      stmts.push_back(stmt_json(s));
    blocks.push_back(std::move(jb));
  }
  auto& data = j["Program"]["data"] = nlohmann::json::array();
  for (const auto& seg : prog.data) {
    nlohmann::json js;
    js["addr"] = hex64(seg.addr);
    std::string hex;
    for (uint8_t b : seg.bytes) {
      static const char* digits = "0123456789ABCDEF";
      hex += digits[b >> 4];
      hex += digits[b & 0xF];
    }
    js["bytes"] = hex;
    data.push_back(std::move(js));
  }
  return j.dump(2);
}

} // namespace dotvm
