#include "dotvm/validate.hpp"

#include <functional>
#include <sstream>

namespace dotvm {

namespace {

struct BlockChecker {
  const Superblock& sb;
  std::vector<Diagnostic>& out;
  std::vector<bool> assigned;

  BlockChecker(const Superblock& sb, std::vector<Diagnostic>& out)
      : sb(sb), out(out), assigned(sb.tmp_types.size(), false) {}

  void report(int idx, std::string msg) { out.push_back({sb.addr, idx, std::move(msg)}); }

  void check_expr(const Expr& e, int idx) {
    switch (e.kind) {
    case Expr::Kind::RdTmp:
      if (e.tmp >= sb.tmp_types.size()) {
        report(idx, "undefined temporary t" + std::to_string(e.tmp));
      } else {
        if (!assigned[e.tmp])
          report(idx, "read of unassigned temporary t" + std::to_string(e.tmp));
        if (sb.tmp_types[e.tmp] != e.type)
          report(idx, "temporary t" + std::to_string(e.tmp) + " read at wrong type");
      }
      break;
    case Expr::Kind::Get:
      break;
    case Expr::Kind::Load:
      if (e.args[0]->type != IrType::I64)
        report(idx, "load address must be I64");
      check_expr(*e.args[0], idx);
      break;
    case Expr::Kind::Op: {
      if (e.op != Op::Unknown) {
        const OpInfo& info = op_info(e.op);
        if (e.args.size() != info.arity) {
          report(idx, std::string("operand count mismatch for ") + info.name);
        } else {
          for (size_t i = 0; i < e.args.size(); ++i)
            if (e.args[i]->type != info.operand[i])
              report(idx, std::string("operand type mismatch for ") + info.name);
        }
        if (e.type != info.result)
          report(idx, std::string("result type mismatch for ") + info.name);
      }
      for (const auto& a : e.args)
        check_expr(*a, idx);
      break;
    }
    case Expr::Kind::Const:
      break;
    case Expr::Kind::ITE:
      if (e.args[0]->type != IrType::I1)
        report(idx, "ITE condition must be I1");
      if (e.args[1]->type != e.args[2]->type || e.type != e.args[1]->type)
        report(idx, "ITE branch types differ");
      for (const auto& a : e.args)
        check_expr(*a, idx);
      break;
    case Expr::Kind::CCall:
      for (const auto& a : e.args)
        check_expr(*a, idx);
      break;
    }
  }

  void assign(uint32_t tmp, IrType type, int idx, const char* what) {
    if (tmp >= sb.tmp_types.size()) {
      report(idx, std::string(what) + " of undeclared temporary t" + std::to_string(tmp));
      return;
    }
    if (assigned[tmp]) {
      report(idx, "double assignment of temporary t" + std::to_string(tmp));
      return;
    }
    if (sb.tmp_types[tmp] != type)
      report(idx, "assignment type mismatch for t" + std::to_string(tmp));
    assigned[tmp] = true;
  }

  void run() {
    for (size_t i = 0; i < sb.stmts.size(); ++i) {
      const Stmt& s = sb.stmts[i];
      const int idx = static_cast<int>(i);
      switch (s.kind) {
      case Stmt::Kind::WrTmp:
        check_expr(*s.data, idx);
        assign(s.tmp, s.data->type, idx, "assignment");
        break;
      case Stmt::Kind::Put:
        check_expr(*s.data, idx);
        break;
      case Stmt::Kind::Store:
        check_expr(*s.addr, idx);
        check_expr(*s.data, idx);
        if (s.addr->type != IrType::I64)
          report(idx, "store address must be I64");
        break;
      case Stmt::Kind::StoreG:
        check_expr(*s.guard, idx);
        check_expr(*s.addr, idx);
        check_expr(*s.data, idx);
        if (s.guard->type != IrType::I1)
          report(idx, "store guard must be I1");
        break;
      case Stmt::Kind::Cas: {
        check_expr(*s.addr, idx);
        check_expr(*s.expected, idx);
        check_expr(*s.data, idx);
        IrType t = s.expected->type;
        if (t != IrType::I32 && t != IrType::I64 && t != IrType::F32 && t != IrType::F64)
          report(idx, "CAS element type must be I32, I64, F32 or F64");
        if (s.data->type != t)
          report(idx, "CAS expected/new types differ");
        assign(s.tmp, t, idx, "CAS destination");
        break;
      }
      case Stmt::Kind::Dirty:
        if (s.guard)
          check_expr(*s.guard, idx);
        for (const auto& a : s.args)
          check_expr(*a, idx);
        if (s.has_dest) {
          if (s.tmp >= sb.tmp_types.size())
            report(idx, "dirty destination of undeclared temporary");
          else
            assign(s.tmp, sb.tmp_types[s.tmp], idx, "dirty destination");
        }
        break;
      case Stmt::Kind::IMark:
        break;
      case Stmt::Kind::Exit:
        check_expr(*s.guard, idx);
        if (s.guard->type != IrType::I1)
          report(idx, "exit guard must be I1");
        break;
      case Stmt::Kind::Halt:
        break;
      }
    }
    if (sb.stmts.empty()) {
      report(-1, "empty superblock");
    } else {
      const Stmt& last = sb.stmts.back();
      if (last.kind != Stmt::Kind::Exit && last.kind != Stmt::Kind::Halt)
        report(-1, "superblock must end with an exit or halt");
    }
  }
};

} // namespace

std::vector<Diagnostic> validate_superblock(const Superblock& sb) {
  std::vector<Diagnostic> out;
  BlockChecker(sb, out).run();
  return out;
}

std::vector<Diagnostic> validate(const Program& prog) {
  std::vector<Diagnostic> out;
  if (!prog.blocks.count(prog.entry))
    out.push_back({prog.entry, -1, "entry address has no superblock"});
  for (const auto& [addr, sb] : prog.blocks) {
    BlockChecker(sb, out).run();
    for (size_t i = 0; i < sb.stmts.size(); ++i) {
      const Stmt& s = sb.stmts[i];
      if (s.kind == Stmt::Kind::Exit && !prog.blocks.count(s.target)) {
        std::ostringstream os;
        os << "dangling target 0x" << std::hex << s.target;
        out.push_back({addr, static_cast<int>(i), os.str()});
      }
    }
  }
  return out;
}

} // namespace dotvm
