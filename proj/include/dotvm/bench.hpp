#pragma once

#include <cstdint>
#include <string>

namespace dotvm {

struct BenchmarkConfig {
  int nx = 20;   // grid is nx * nx
  int nt = 10;   // time steps
  int reps = 3;  // timing repetitions; the best run counts
};

struct BenchReport {
  bool ok = true;
  std::string error;
  double value = 0;      // norm of the solution after the last step
  double dot = 0;        // derivative wrt a simultaneous shift of the state
  double oracle_dot = 0;
  double fd_dot = 0;
  bool dot_bit_equal = false;
  double fd_rel_err = 0;
  double native_seconds = 0;
  double instrumented_seconds = 0;
  double slowdown = 0; // reported, not asserted
  uint64_t shadow_pages = 0;
  uint64_t memory_pages = 0;
  bool shadow_pages_ok = false; // <= 2x touched pages + trie overhead
};

/// The two-dimensional Burgers solver as a generated source program; uses
/// only +, -, *, / and sqrt, with every initial cell seeded through
/// dg_set_dot.
std::string burgers_source(int nx, int nt);

BenchReport bench_burgers(const BenchmarkConfig& config);

std::string format_report(const BenchmarkConfig& config, const BenchReport& report);

} // namespace dotvm
