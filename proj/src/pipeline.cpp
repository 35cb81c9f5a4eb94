#include "dotvm/pipeline.hpp"

#include "dotvm/ir_text.hpp"
#include "dotvm/validate.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>

namespace dotvm {

namespace {

void write_f64_bits(ShadowMap& target, uint64_t addr, double v) {
  uint8_t b[8];
  const uint64_t bits = std::bit_cast<uint64_t>(v);
  for (int i = 0; i < 8; ++i)
    b[i] = static_cast<uint8_t>(bits >> (8 * i));
  target.write(addr, b);
}

double read_f64_bits(const ShadowMap& src, uint64_t addr) {
  uint8_t b[8];
  src.read(addr, b);
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<uint64_t>(b[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

} // namespace

Prepared prepare_source(const std::string& source, bool math_wrappers) {
  Prepared prep;
  prep.math_wrappers = math_wrappers;
  prep.ast = std::make_shared<ml::Program>(ml::parse(source));
  CompileOptions copts;
  copts.inline_sin = !math_wrappers;
  prep.compiled = compile(*prep.ast, copts);
  auto diags = validate(prep.compiled.program);
  if (!diags.empty())
    throw std::logic_error("compiler produced invalid IR: " + diags.front().message);
  InstrumentOptions iopts;
  iopts.math_wrappers = math_wrappers;
  prep.instrumented = instrument_program(prep.compiled.program, prep.policy, iopts);
  return prep;
}

Prepared prepare_ir(const std::string& asm_text) {
  Prepared prep;
  prep.compiled.program = parse_asm(asm_text);
  prep.compiled.n_outputs = 0;
  prep.compiled.n_inputs = 0;
  prep.instrumented = instrument_program(prep.compiled.program, prep.policy);
  return prep;
}

EngineOutcome run_engine(const Prepared& prep, std::span<const double> inputs,
                         int seed_input, bool instrumented, uint64_t fuel) {
  EngineOutcome out;
  const Program& prog = instrumented ? prep.instrumented : prep.compiled.program;
  Machine m(prog);
  m.set_inputs({inputs.begin(), inputs.end()});
  for (size_t i = 0; i < inputs.size(); ++i)
    write_f64_bits(m.memory(), layout::kInputBase + 8 * i, inputs[i]);
  if (instrumented && seed_input >= 0 &&
      static_cast<size_t>(seed_input) < inputs.size())
    write_f64_bits(m.shadow(), layout::kInputBase + 8 * seed_input, 1.0);

  const auto start = std::chrono::steady_clock::now();
  const RunResult r = m.run(fuel);
  const auto stop = std::chrono::steady_clock::now();
  out.run_seconds = std::chrono::duration<double>(stop - start).count();
  out.superblocks = r.superblocks_executed;

  if (r.reason != StopReason::Halted) {
    out.ok = false;
    out.error = r.fault ? r.fault->message : "did not halt";
    return out;
  }
  for (int i = 0; i < prep.compiled.n_outputs; ++i) {
    out.out_values.push_back(read_f64_bits(m.memory(), layout::kOutputBase + 8 * i));
    out.out_dots.push_back(read_f64_bits(m.shadow(), layout::kOutputBase + 8 * i));
  }
  out.printed = m.printed_values();
  out.shadow_pages = m.shadow().pages_allocated();
  out.memory_pages = m.memory().pages_allocated();
  return out;
}

std::vector<double> finite_diff(const Prepared& prep, std::span<const double> inputs,
                                int seed_input, double h) {
  std::vector<double> plus(inputs.begin(), inputs.end());
  std::vector<double> minus(inputs.begin(), inputs.end());
  if (seed_input >= 0 && static_cast<size_t>(seed_input) < inputs.size()) {
    plus[seed_input] += h;
    minus[seed_input] -= h;
  }
  const EngineOutcome up = run_engine(prep, plus, -1, false);
  const EngineOutcome dn = run_engine(prep, minus, -1, false);
  std::vector<double> dots;
  if (!up.ok || !dn.ok)
    return dots;
  for (size_t i = 0; i < up.out_values.size(); ++i)
    dots.push_back((up.out_values[i] - dn.out_values[i]) / (2 * h));
  return dots;
}

bool fd_path_stable(const ml::Program& ast, std::span<const double> inputs,
                    int seed_input, double h) {
  std::vector<double> base(inputs.begin(), inputs.end());
  std::vector<double> plus = base;
  std::vector<double> minus = base;
  if (seed_input < 0 || static_cast<size_t>(seed_input) >= inputs.size())
    return false;
  plus[seed_input] += h;
  minus[seed_input] -= h;
  const OracleResult a = oracle_eval(ast, base, seed_input);
  const OracleResult b = oracle_eval(ast, plus, seed_input);
  const OracleResult c = oracle_eval(ast, minus, seed_input);
  return a.ok && b.ok && c.ok && a.path_sig == b.path_sig && a.path_sig == c.path_sig;
}

DiffReport diff_program(const Prepared& prep, std::span<const double> inputs,
                        int seed_input, double h) {
  DiffReport rep;
  if (!prep.ast) {
    rep.ok = false;
    rep.error = "diff needs a source program";
    return rep;
  }
  const EngineOutcome engine = run_engine(prep, inputs, seed_input, true);
  if (!engine.ok) {
    rep.ok = false;
    rep.error = engine.error;
    return rep;
  }
  const OracleResult oracle = oracle_eval(*prep.ast, inputs, seed_input);
  if (!oracle.ok) {
    rep.ok = false;
    rep.error = "oracle: " + oracle.error;
    return rep;
  }
  rep.fd_applicable =
      !prep.ast->uses_nonsmooth && fd_path_stable(*prep.ast, inputs, seed_input, h);
  const std::vector<double> fd =
      rep.fd_applicable ? finite_diff(prep, inputs, seed_input, h) : std::vector<double>{};

  for (size_t i = 0; i < engine.out_dots.size(); ++i) {
    DiffRow row;
    row.output = static_cast<int>(i);
    row.engine_dot = engine.out_dots[i];
    row.oracle_dot = i < oracle.out_dots.size() ? oracle.out_dots[i] : 0.0;
    row.bit_equal = std::bit_cast<uint64_t>(row.engine_dot) ==
                    std::bit_cast<uint64_t>(row.oracle_dot);
    if (!row.bit_equal)
      rep.ok = false;
    if (rep.fd_applicable && i < fd.size()) {
      row.fd_dot = fd[i];
      row.fd_checked = true;
      row.rel_err = std::fabs(row.engine_dot - row.fd_dot) /
                    (1.0 + std::fabs(row.fd_dot));
      if (row.rel_err > 1e-4)
        rep.ok = false;
    }
    rep.rows.push_back(row);
  }
  // primal agreement between engine and oracle is part of the contract
  for (size_t i = 0; i < engine.out_values.size(); ++i) {
    if (i < oracle.out_values.size() &&
        std::bit_cast<uint64_t>(engine.out_values[i]) !=
            std::bit_cast<uint64_t>(oracle.out_values[i])) {
      rep.ok = false;
      rep.error = "primal value mismatch against the oracle";
    }
  }
  return rep;
}

} // namespace dotvm
