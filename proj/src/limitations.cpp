#include "dotvm/limitations.hpp"

#include "dotvm/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dotvm {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  if (a == std::string::npos)
    return "";
  return s.substr(a, b - a + 1);
}

LimitationCase parse_case(const std::filesystem::path& path) {
  LimitationCase c;
  c.path = path.string();
  c.is_ir = path.extension() == ".ir";
  std::ifstream in(path);
  std::ostringstream body;
  std::string line;
  while (std::getline(in, line)) {
    body << line << "\n";
    const std::string t = trim(line);
    if (t.rfind("# ", 0) != 0)
      continue;
    const size_t colon = t.find(':');
    if (colon == std::string::npos)
      continue;
    const std::string key = trim(t.substr(2, colon - 2));
    const std::string value = trim(t.substr(colon + 1));
    if (key == "case")
      c.name = value;
    else if (key == "scenario")
      c.scenario = value;
    else if (key == "seed")
      c.seed_input = std::stoi(value);
    else if (key == "input") {
      std::istringstream vs(value);
      std::string item;
      while (std::getline(vs, item, ','))
        c.inputs.push_back(std::stod(item));
    } else if (key == "expect-value") {
      c.expect_value = std::stod(value);
      c.has_expect_value = true;
    } else if (key == "expect-wrong-dot")
      c.expect_wrong_dot = std::stod(value);
    else if (key == "correct-dot")
      c.correct_dot = std::stod(value);
  }
  c.source = body.str();
  return c;
}

} // namespace

std::vector<LimitationCase> discover_limitation_cases(const std::string& dir) {
  std::vector<LimitationCase> cases;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto ext = entry.path().extension();
    if (ext != ".ml64" && ext != ".ir")
      continue;
    cases.push_back(parse_case(entry.path()));
  }
  std::sort(cases.begin(), cases.end(),
            [](const LimitationCase& a, const LimitationCase& b) { return a.name < b.name; });
  return cases;
}

LimitationOutcome run_limitation_case(const LimitationCase& c) {
  LimitationOutcome out;
  if (std::bit_cast<uint64_t>(c.expect_wrong_dot) ==
      std::bit_cast<uint64_t>(c.correct_dot)) {
    out.detail = "case metadata is broken: wrong and correct dots are equal";
    return out;
  }
  Prepared prep;
  try {
    if (c.is_ir) {
      prep = prepare_ir(c.source);
      prep.compiled.n_outputs = 1; // cases store their result in output slot 0
    } else {
      prep = prepare_source(c.source);
    }
  } catch (const std::exception& ex) {
    out.detail = std::string("compile failed: ") + ex.what();
    return out;
  }
  const EngineOutcome run = run_engine(prep, c.inputs, c.seed_input, true);
  if (!run.ok) {
    out.detail = "run failed: " + run.error;
    return out;
  }
  if (run.out_values.empty()) {
    out.detail = "case produced no output";
    return out;
  }
  out.engine_value = run.out_values[0];
  out.engine_dot = run.out_dots[0];
  if (c.has_expect_value &&
      std::bit_cast<uint64_t>(out.engine_value) != std::bit_cast<uint64_t>(c.expect_value)) {
    std::ostringstream os;
    os.precision(17);
    os << "value drifted: got " << out.engine_value << ", pinned " << c.expect_value;
    out.detail = os.str();
    return out;
  }
  if (std::bit_cast<uint64_t>(out.engine_dot) !=
      std::bit_cast<uint64_t>(c.expect_wrong_dot)) {
    std::ostringstream os;
    os.precision(17);
    os << "dot drifted: got " << out.engine_dot << ", pinned wrong value "
       << c.expect_wrong_dot << " (correct would be " << c.correct_dot << ")";
    out.detail = os.str();
    return out;
  }
  out.pass = true;
  return out;
}

} // namespace dotvm
