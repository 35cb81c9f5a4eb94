#pragma once

#include "dotvm/ir.hpp"
#include "dotvm/minilang.hpp"

#include <map>
#include <string>
#include <vector>

namespace dotvm {

// Client address-space layout used by compiled programs. Scalars live in the
// guest state; everything below is memory.
namespace layout {
inline constexpr uint64_t kInputBase = 0x10000;   // f64 slots, 8 bytes apart
inline constexpr uint64_t kOutputBase = 0x20000;  // one f64 per print statement
inline constexpr uint64_t kScratchSet = 0x30000;  // dg_set_dot staging
inline constexpr uint64_t kScratchGet = 0x30008;  // dg_get_dot staging
inline constexpr uint64_t kSineState = 0x30010;   // inline-sine spill slots
inline constexpr uint64_t kSineTable = 0x40000;   // sin lookup table
inline constexpr uint64_t kCosineTable = 0x42000; // cos lookup table
inline constexpr uint64_t kHeapBase = 0x100000;   // arrays
} // namespace layout

struct CompileOptions {
  // Replace sin() calls by an inline table-plus-rounding implementation
  // instead of a wrapped math call (the --no-math-wrappers route).
  bool inline_sin = false;
};

struct CompiledSymbol {
  bool is_array = false;
  ml::Type type = ml::Type::F64;
  uint32_t guest_offset = 0; // scalars: byte offset in guest band 0
  uint64_t base = 0;         // arrays: memory base address
  uint32_t length = 0;
};

struct Compiled {
  Program program;
  std::map<std::string, CompiledSymbol> symbols;
  int n_outputs = 0;
  int n_inputs = 0;
  std::vector<std::pair<uint64_t, int>> imark_lines; // imark address -> line
};

/// Lower a checked minilang program to IR. Throws ml::CompileError.
Compiled compile(const ml::Program& ast, const CompileOptions& opts = {});

} // namespace dotvm
