#pragma once

#include "dotvm/ir.hpp"

#include <stdexcept>
#include <string>

namespace dotvm {

struct ParseError : std::runtime_error {
  ParseError(std::string msg, int line, int col)
      : std::runtime_error(std::move(msg)), line(line), col(col) {}
  int line;
  int col;
};

/// Parse the textual assembly form. Throws ParseError on syntax errors and
/// on structural errors (double assignment, dangling temporary, operand type
/// mismatch), which are detected by running the validator on the result.
Program parse_asm(const std::string& text);

std::string print_program(const Program& prog);
std::string print_superblock(const Superblock& sb);
std::string print_stmt(const Stmt& s);
std::string print_expr(const Expr& e);

/// Structural JSON dump for debugging.
std::string program_to_json(const Program& prog);

} // namespace dotvm
