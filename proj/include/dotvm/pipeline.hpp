#pragma once

#include "dotvm/compile.hpp"
#include "dotvm/instrument.hpp"
#include "dotvm/machine.hpp"
#include "dotvm/minilang.hpp"
#include "dotvm/oracle.hpp"

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dotvm {

/// A source program carried through every stage: parsed AST, plain IR and
/// instrumented IR.
struct Prepared {
  std::shared_ptr<ml::Program> ast; // null for raw IR assembly inputs
  Compiled compiled;
  Program instrumented;
  AdPolicy policy;
  bool math_wrappers = true;
};

Prepared prepare_source(const std::string& source, bool math_wrappers = true);
Prepared prepare_ir(const std::string& asm_text);

struct EngineOutcome {
  bool ok = true;
  std::string error;
  std::vector<double> out_values;
  std::vector<double> out_dots; // meaningful only for instrumented runs
  std::vector<double> printed;
  uint64_t shadow_pages = 0;
  uint64_t memory_pages = 0;
  uint64_t superblocks = 0;
  double run_seconds = 0;
};

/// Execute. Inputs are placed both in the input slots and the machine's
/// read_input table; seeding writes the bits of 1.0 into the shadow of the
/// chosen slot before the run.
EngineOutcome run_engine(const Prepared& prep, std::span<const double> inputs,
                         int seed_input, bool instrumented,
                         uint64_t fuel = 50'000'000);

/// Central finite differences on the seeded input, computed from two
/// uninstrumented runs.
std::vector<double> finite_diff(const Prepared& prep, std::span<const double> inputs,
                                int seed_input, double h);

struct DiffRow {
  int output = 0;
  double engine_dot = 0;
  double oracle_dot = 0;
  double fd_dot = 0;
  double rel_err = 0; // |engine - fd| / (1 + |fd|)
  bool bit_equal = false;
  bool fd_checked = false;
};

struct DiffReport {
  bool ok = true;
  std::string error;
  bool fd_applicable = false; // smooth at these inputs
  std::vector<DiffRow> rows;
};

/// Engine vs dual oracle vs finite differences for one program and input.
DiffReport diff_program(const Prepared& prep, std::span<const double> inputs,
                        int seed_input, double h = 1e-6);

/// True when the oracle takes identical control-flow decisions at the three
/// points used by the central difference.
bool fd_path_stable(const ml::Program& ast, std::span<const double> inputs,
                    int seed_input, double h);

} // namespace dotvm
