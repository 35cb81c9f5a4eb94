#include "dotvm/monitor.hpp"

#include <bit>
#include <sstream>

namespace dotvm {

namespace {

std::string hex_dump(const std::vector<uint8_t>& bytes) {
  static const char* digits = "0123456789ABCDEF";
  std::string out;
  for (size_t i = 0; i < bytes.size(); ++i) {
    if (i)
      out += ' ';
    out += digits[bytes[i] >> 4];
    out += digits[bytes[i] & 0xF];
  }
  return out;
}

bool parse_hex(const std::string& word, uint64_t& out) {
  if (word.empty())
    return false;
  size_t start = word.rfind("0x", 0) == 0 || word.rfind("0X", 0) == 0 ? 2 : 0;
  uint64_t v = 0;
  if (start >= word.size())
    return false;
  for (size_t i = start; i < word.size(); ++i) {
    const char c = word[i];
    int d;
    if (c >= '0' && c <= '9')
      d = c - '0';
    else if (c >= 'a' && c <= 'f')
      d = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F')
      d = c - 'A' + 10;
    else
      return false;
    v = (v << 4) | static_cast<uint64_t>(d);
  }
  out = v;
  return true;
}

std::string hex64(uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::uppercase << v;
  return os.str();
}

} // namespace

MonitorSession::MonitorSession(const Prepared& prep, std::span<const double> inputs,
                               int seed_input, bool instrumented)
    : prep_(prep) {
  const Program& prog = instrumented ? prep.instrumented : prep.compiled.program;
  machine_ = std::make_unique<Machine>(prog);
  machine_->set_inputs({inputs.begin(), inputs.end()});
  for (size_t i = 0; i < inputs.size(); ++i) {
    uint8_t b[8];
    const uint64_t bits = std::bit_cast<uint64_t>(inputs[i]);
    for (int k = 0; k < 8; ++k)
      b[k] = static_cast<uint8_t>(bits >> (8 * k));
    machine_->memory().write(layout::kInputBase + 8 * i, b);
  }
  if (instrumented && seed_input >= 0 && static_cast<size_t>(seed_input) < inputs.size()) {
    uint8_t b[8];
    const uint64_t bits = std::bit_cast<uint64_t>(1.0);
    for (int k = 0; k < 8; ++k)
      b[k] = static_cast<uint8_t>(bits >> (8 * k));
    machine_->shadow().write(layout::kInputBase + 8 * seed_input, b);
  }
}

bool MonitorSession::halted() const { return machine_->halted(); }

std::string MonitorSession::help_text() {
  return "commands:\n"
         "  dot <hex-addr> <len>      hex-dump shadow memory\n"
         "  setdot <hex-addr> <hex-bytes>  write shadow memory\n"
         "  mem <hex-addr> <len>      hex-dump memory\n"
         "  break <hex-addr>          toggle a breakpoint on an instruction mark\n"
         "  continue                  run to the next breakpoint or halt\n"
         "  step                      execute one superblock\n"
         "  where                     current instruction mark\n"
         "  help                      this text";
}

std::string MonitorSession::cmd_continue() {
  RunControl rc;
  rc.breakpoints = &breakpoints_;
  const RunResult r = machine_->resume(rc);
  switch (r.reason) {
  case StopReason::Halted:
    return "halted";
  case StopReason::Breakpoint:
    return "stopped at " + hex64(machine_->current_imark());
  case StopReason::Faulted:
    return "fault: " + r.fault->message;
  default:
    return "stopped";
  }
}

std::string MonitorSession::cmd_step() {
  RunControl rc;
  rc.breakpoints = &breakpoints_;
  rc.single_block = true;
  const RunResult r = machine_->resume(rc);
  switch (r.reason) {
  case StopReason::Halted:
    return "halted";
  case StopReason::Breakpoint:
    return "stopped at " + hex64(machine_->current_imark());
  case StopReason::BlockStep:
    return "at " + hex64(machine_->pc());
  case StopReason::Faulted:
    return "fault: " + r.fault->message;
  default:
    return "stopped";
  }
}

std::string MonitorSession::command(const std::string& line) {
  std::istringstream is(line);
  std::string verb;
  is >> verb;
  if (verb.empty())
    return "";
  if (verb == "help")
    return help_text();
  if (verb == "continue")
    return cmd_continue();
  if (verb == "step")
    return cmd_step();
  if (verb == "where")
    return hex64(machine_->current_imark());
  if (verb == "dot" || verb == "mem") {
    std::string addr_s, len_s;
    is >> addr_s >> len_s;
    uint64_t addr = 0, len = 0;
    if (!parse_hex(addr_s, addr) || !parse_hex(len_s, len) || len == 0 || len > 4096)
      return "usage: " + verb + " <hex-addr> <len>";
    const auto& src = verb == "dot" ? machine_->shadow() : machine_->memory();
    return hex_dump(src.read_vec(addr, len));
  }
  if (verb == "setdot") {
    std::string addr_s, bytes_s;
    is >> addr_s >> bytes_s;
    uint64_t addr = 0;
    if (!parse_hex(addr_s, addr) || bytes_s.empty() || bytes_s.size() % 2 != 0)
      return "usage: setdot <hex-addr> <hex-bytes>";
    std::vector<uint8_t> bytes;
    for (size_t i = 0; i < bytes_s.size(); i += 2) {
      uint64_t b = 0;
      if (!parse_hex(bytes_s.substr(i, 2), b))
        return "usage: setdot <hex-addr> <hex-bytes>";
      bytes.push_back(static_cast<uint8_t>(b));
    }
    machine_->shadow().write(addr, bytes);
    return "ok";
  }
  if (verb == "break") {
    std::string addr_s;
    is >> addr_s;
    uint64_t addr = 0;
    if (!parse_hex(addr_s, addr))
      return "usage: break <hex-addr>";
    bool known = false;
    for (const auto& [a, sb] : machine_->program().blocks)
      for (const Stmt& s : sb.stmts)
        if (s.kind == Stmt::Kind::IMark && s.imark_addr == addr)
          known = true;
    if (!known)
      return "no such instruction mark";
    if (breakpoints_.count(addr)) {
      breakpoints_.erase(addr);
      return "breakpoint removed at " + hex64(addr);
    }
    breakpoints_.insert(addr);
    return "breakpoint set at " + hex64(addr);
  }
  return "unknown command; try help";
}

} // namespace dotvm
