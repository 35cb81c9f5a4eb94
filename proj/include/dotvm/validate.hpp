#pragma once

#include "dotvm/ir.hpp"

#include <string>
#include <vector>

namespace dotvm {

struct Diagnostic {
  uint64_t sb_addr = 0;
  int stmt_index = -1; // -1 for block/program level findings
  std::string message;
};

/// Structural validation: single assignment per temporary, no reads of
/// unassigned temporaries, operand/result type agreement, block termination,
/// resolvable exit targets. An empty result means the program is well formed.
std::vector<Diagnostic> validate(const Program& prog);

std::vector<Diagnostic> validate_superblock(const Superblock& sb);

} // namespace dotvm
