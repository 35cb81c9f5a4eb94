#pragma once

#include "dotvm/ir.hpp"
#include "dotvm/shadowmem.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace dotvm {

struct Fault {
  std::string message;
  uint64_t block_addr = 0;
  int stmt_index = -1;
};

enum class StopReason { Halted, Breakpoint, BlockStep, FuelExhausted, Faulted };

struct RunResult {
  StopReason reason = StopReason::Halted;
  std::optional<Fault> fault;
  uint64_t superblocks_executed = 0;
  uint64_t statements_executed = 0;
};

struct RunControl {
  uint64_t fuel = 10'000'000; // superblock entries
  const std::unordered_set<uint64_t>* breakpoints = nullptr;
  bool single_block = false;
};

class Machine;

/// Host behaviour behind a dirty call. Receives the evaluated arguments and,
/// for calls with a destination temporary, that temporary's type.
using DirtyFn = std::function<std::optional<Value>(
    Machine&, const std::vector<Value>&, std::optional<IrType> dest_type)>;

/// Pure host function behind a CCall expression.
using CCallFn = std::function<Value(const std::vector<Value>&)>;

struct CasOutcome {
  std::vector<uint8_t> old_bytes;
  bool success = false;
};

/// The synthetic CPU. Guest registers are a byte block addressed by offset;
/// the instrumented code additionally uses the second of the three bands as
/// shadow registers. Client memory and shadow memory are sparse tries.
/// Logical threads run cooperatively, one superblock per quantum.
class Machine {
public:
  static constexpr uint32_t kGuestSize = 1024; // bytes per band

  explicit Machine(const Program& prog);

  void register_dirty(const std::string& name, DirtyFn fn);
  void register_ccall(const std::string& name, CCallFn fn);

  unsigned add_thread(uint64_t entry); // thread 0 exists from construction

  RunResult run(uint64_t fuel = RunControl{}.fuel);
  RunResult resume(const RunControl& rc); // thread 0, breakpoint-aware
  RunResult run_threads(uint64_t schedule_seed, uint64_t fuel = RunControl{}.fuel);

  CasOutcome cas_step(uint64_t addr, std::span<const uint8_t> expected,
                      std::span<const uint8_t> new_bytes,
                      std::span<const uint8_t> expected_shadow,
                      std::span<const uint8_t> new_shadow, bool compare_shadow);

  ShadowMap& memory() { return memory_; }
  ShadowMap& shadow() { return shadow_; }
  const ShadowMap& memory() const { return memory_; }
  const ShadowMap& shadow() const { return shadow_; }

  std::span<uint8_t> guest(unsigned thread = 0);
  uint64_t current_imark(unsigned thread = 0) const;
  bool halted(unsigned thread = 0) const;
  uint64_t pc(unsigned thread = 0) const;

  void set_inputs(std::vector<double> inputs) { inputs_ = std::move(inputs); }
  const std::vector<double>& inputs() const { return inputs_; }

  const std::vector<std::string>& print_log() const { return print_log_; }
  const std::vector<double>& printed_values() const { return printed_values_; }
  void set_echo_stream(std::ostream* os) { echo_ = os; }

  const Program& program() const { return prog_; }

private:
  struct ThreadContext {
    std::vector<uint8_t> guest = std::vector<uint8_t>(3 * kGuestSize, 0);
    uint64_t pc = 0;
    bool halted = false;
    // Resumable mid-block position, used when a breakpoint pauses execution.
    bool mid_block = false;
    bool skip_bp_once = false;
    const Superblock* block = nullptr;
    size_t stmt_index = 0;
    std::vector<Value> tmps;
    uint64_t imark = 0;
  };

  struct FaultException {
    Fault fault;
  };

  Value eval(const Expr& e, ThreadContext& t);
  Value eval_op(const Expr& e, ThreadContext& t);
  // Executes until the end of the current superblock; returns true if the
  // thread branched or halted, false when paused at a breakpoint.
  bool exec_quantum(ThreadContext& t, const RunControl& rc, RunResult& res);
  void exec_stmt(const Stmt& s, ThreadContext& t);
  [[noreturn]] void fault(ThreadContext& t, std::string msg) const;

  void write_guest(ThreadContext& t, uint32_t offset, const Value& v);
  Value read_guest(ThreadContext& t, uint32_t offset, IrType type);

  void register_builtins();

  const Program& prog_;
  ShadowMap memory_;
  ShadowMap shadow_;
  std::vector<ThreadContext> threads_;
  unsigned active_thread_ = 0;
  std::unordered_map<std::string, DirtyFn> dirties_;
  std::unordered_map<std::string, CCallFn> ccalls_;
  std::vector<double> inputs_;
  std::vector<std::string> print_log_;
  std::vector<double> printed_values_;
  std::ostream* echo_ = nullptr;
};

} // namespace dotvm
