#pragma once

#include <string>
#include <vector>

namespace dotvm {

/// One pinned wrong-by-design behaviour: a program whose engine dot is
/// deliberately incorrect, with the incorrect value frozen as a golden
/// result. A case where the engine were accidentally right would be a test
/// bug, so the wrong and correct dots must differ.
struct LimitationCase {
  std::string name;
  std::string scenario;
  std::string path;
  bool is_ir = false;
  std::vector<double> inputs;
  int seed_input = 0;
  bool has_expect_value = false;
  double expect_value = 0;
  double expect_wrong_dot = 0;
  double correct_dot = 0;
  std::string source;
};

struct LimitationOutcome {
  bool pass = false;
  std::string detail;
  double engine_value = 0;
  double engine_dot = 0;
};

/// Read every .ml64/.ir case file under the given directory.
std::vector<LimitationCase> discover_limitation_cases(const std::string& dir);

LimitationOutcome run_limitation_case(const LimitationCase& c);

} // namespace dotvm
