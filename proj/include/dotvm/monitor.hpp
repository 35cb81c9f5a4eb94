#pragma once

#include "dotvm/pipeline.hpp"

#include <memory>
#include <string>
#include <unordered_set>

namespace dotvm {

/// Interactive session over a paused machine. Commands inspect and mutate
/// shadow state, toggle breakpoints on instruction marks, and drive
/// execution one superblock or one breakpoint at a time.
class MonitorSession {
public:
  MonitorSession(const Prepared& prep, std::span<const double> inputs,
                 int seed_input, bool instrumented = true);

  /// Execute one command line and return the response text.
  std::string command(const std::string& line);

  bool halted() const;
  Machine& machine() { return *machine_; }

  static std::string help_text();

private:
  std::string cmd_continue();
  std::string cmd_step();

  const Prepared& prep_;
  std::unique_ptr<Machine> machine_;
  std::unordered_set<uint64_t> breakpoints_;
  bool started_ = false;
};

} // namespace dotvm
