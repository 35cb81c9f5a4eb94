#pragma once

#include "dotvm/minilang.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dotvm {

/// A (value, dot) pair. The oracle applies the forward update rule with
/// operations in exactly the order the compiled formulas use, so agreement
/// with the instrumented engine is checked bit for bit.
struct DualValue {
  double value = 0;
  double dot = 0;
};

struct OracleResult {
  bool ok = true;
  std::string error;
  std::vector<double> out_values; // last value per print statement
  std::vector<double> out_dots;
  std::vector<double> print_values; // chronological print log
  // Control-flow signature: branch outcomes, select decisions, sign choices
  // and rounding results. Two runs taking the same decisions hash equal.
  uint64_t path_sig = 1469598103934665603ull;
};

/// Interpret the checked AST directly over dual numbers, seeding dot 1 on
/// one input (or none, when seed_input is negative).
OracleResult oracle_eval(const ml::Program& ast, std::span<const double> inputs,
                         int seed_input);

} // namespace dotvm
