#pragma once

#include <cstdint>
#include <set>
#include <string>

namespace dotvm {

struct GenResult {
  std::string source;
  int n_inputs = 1;
  int n_outputs = 1;
  int seed_input = 0;
  // True when the program avoids floor/ceil/fmod/round, the constructs whose
  // derivative is locally zero but whose finite difference can straddle a
  // fold point.
  bool fd_safe = true;
  std::set<std::string> features;
};

/// Deterministic random program: the same seed always yields the same source.
/// Generated programs always terminate (loops count up to fixed bounds) and
/// keep divisions and math-call arguments away from singular regions.
GenResult gen_random(uint64_t seed, int size_budget);

} // namespace dotvm
