#pragma once

#include "dotvm/ir.hpp"

#include <string>
#include <vector>

namespace dotvm {

/// Index and offset shifts placing the shadows: original temporaries occupy
/// [0, m_tmp), shadow temporaries [m_tmp, 2*m_tmp), helper temporaries
/// allocated by the pass start at 2*m_tmp. Shadow registers live at their
/// original guest offset plus m_gs.
struct InstrumentationLayout {
  uint32_t m_tmp = 0;
  uint32_t m_gs = 1024;
  uint32_t next_fresh = 0;
};

InstrumentationLayout layout_for(const Superblock& sb);

struct AdWarning {
  uint64_t sb_addr;
  int stmt_index;
  std::string opcode;
};

/// Unhandled opcodes get a zero dot; the pass records where that happened.
struct AdPolicy {
  std::vector<AdWarning> warnings;
};

struct InstrumentOptions {
  bool math_wrappers = true; // route math_* dirty calls to analytic dots
};

Superblock instrument_superblock(const Superblock& sb, AdPolicy& policy,
                                 const InstrumentOptions& opts = {});

Program instrument_program(const Program& prog, AdPolicy& policy,
                           const InstrumentOptions& opts = {});

} // namespace dotvm
