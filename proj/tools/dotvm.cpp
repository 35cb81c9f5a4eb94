#include "dotvm/bench.hpp"
#include "dotvm/ir_text.hpp"
#include "dotvm/monitor.hpp"
#include "dotvm/oracle.hpp"
#include "dotvm/pipeline.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace dotvm;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<double> parse_inputs(const std::string& csv) {
  std::vector<double> out;
  std::istringstream is(csv);
  std::string item;
  while (std::getline(is, item, ','))
    if (!item.empty())
      out.push_back(std::stod(item));
  return out;
}

std::string decimal(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Prepared load_program(const std::string& path, bool as_asm, bool math_wrappers) {
  const std::string text = slurp(path);
  if (as_asm || path.size() > 3 && path.substr(path.size() - 3) == ".ir")
    return prepare_ir(text);
  return prepare_source(text, math_wrappers);
}

void print_warnings(const Prepared& prep) {
  for (const AdWarning& w : prep.policy.warnings)
    std::cerr << "warning: unhandled opcode " << w.opcode << " in superblock 0x"
              << std::hex << w.sb_addr << std::dec << ", statement " << w.stmt_index
              << " (zero derivative assumed)\n";
}

int cmd_run(const std::string& path, const std::string& inputs_csv, int seed_input,
            bool no_ad, bool no_math_wrappers, bool warn_unhandled, bool as_asm,
            uint64_t fuel) {
  Prepared prep = load_program(path, as_asm, !no_math_wrappers);
  if (warn_unhandled)
    print_warnings(prep);
  const std::vector<double> inputs = parse_inputs(inputs_csv);

  const Program& prog = no_ad ? prep.compiled.program : prep.instrumented;
  Machine m(prog);
  m.set_echo_stream(&std::cout);
  m.set_inputs(inputs);
  for (size_t i = 0; i < inputs.size(); ++i) {
    uint8_t b[8];
    const auto bits = std::bit_cast<uint64_t>(inputs[i]);
    for (int k = 0; k < 8; ++k)
      b[k] = static_cast<uint8_t>(bits >> (8 * k));
    m.memory().write(layout::kInputBase + 8 * i, b);
  }
  if (!no_ad && seed_input >= 0 && static_cast<size_t>(seed_input) < inputs.size()) {
    uint8_t b[8];
    const auto bits = std::bit_cast<uint64_t>(1.0);
    for (int k = 0; k < 8; ++k)
      b[k] = static_cast<uint8_t>(bits >> (8 * k));
    m.shadow().write(layout::kInputBase + 8 * seed_input, b);
  }
  const RunResult r = m.run(fuel);
  if (r.reason != StopReason::Halted) {
    std::cerr << "fault: " << (r.fault ? r.fault->message : "did not halt") << "\n";
    return 1;
  }
  for (int i = 0; i < prep.compiled.n_outputs; ++i) {
    auto read_slot = [&](const ShadowMap& src) {
      uint8_t b[8];
      src.read(layout::kOutputBase + 8 * i, b);
      uint64_t bits = 0;
      for (int k = 0; k < 8; ++k)
        bits |= static_cast<uint64_t>(b[k]) << (8 * k);
      return std::bit_cast<double>(bits);
    };
    std::cout << "out" << i << ": value " << decimal(read_slot(m.memory()));
    if (!no_ad)
      std::cout << " dot " << decimal(read_slot(m.shadow()));
    std::cout << "\n";
  }
  return 0;
}

int cmd_monitor(const std::string& path, const std::string& inputs_csv, int seed_input,
                bool no_math_wrappers, bool as_asm) {
  Prepared prep = load_program(path, as_asm, !no_math_wrappers);
  MonitorSession session(prep, parse_inputs(inputs_csv), seed_input);
  std::cout << "paused at entry; type help for commands\n";
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line == "quit" || line == "exit")
      break;
    const std::string response = session.command(line);
    if (!response.empty())
      std::cout << response << "\n";
  }
  return 0;
}

int cmd_diff(const std::string& path, const std::string& inputs_csv, int seed_input,
             double h, bool no_math_wrappers) {
  Prepared prep = prepare_source(slurp(path), !no_math_wrappers);
  const std::vector<double> inputs = parse_inputs(inputs_csv);
  const DiffReport rep = diff_program(prep, inputs, seed_input, h);
  if (!rep.error.empty()) {
    std::cerr << "error: " << rep.error << "\n";
    return 1;
  }
  std::cout << "program\toutput\tengine dot\toracle dot\tfd dot\tmax rel err\n";
  std::ostringstream os;
  os.precision(17);
  for (const DiffRow& row : rep.rows) {
    os.str("");
    os << path << "\t" << row.output << "\t" << row.engine_dot << "\t"
       << row.oracle_dot << "\t";
    if (row.fd_checked)
      os << row.fd_dot << "\t" << row.rel_err;
    else
      os << "-\t-";
    std::cout << os.str() << "\n";
  }
  return rep.ok ? 0 : 1;
}

int cmd_bench(int nx, int nt, int reps) {
  BenchmarkConfig cfg;
  cfg.nx = nx;
  cfg.nt = nt;
  cfg.reps = reps;
  const BenchReport rep = bench_burgers(cfg);
  std::cout << format_report(cfg, rep);
  return rep.ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"forward-mode AD engine on a synthetic CPU"};
  app.require_subcommand(1);

  std::string path, inputs;
  int seed_input = -1;
  bool no_ad = false, no_math_wrappers = false, warn_unhandled = false, as_asm = false;
  uint64_t fuel = 50'000'000;
  double h = 1e-6;
  int nx = 20, nt = 10, reps = 3;

  CLI::App* run = app.add_subcommand("run", "compile, instrument and execute");
  run->add_option("prog", path, "program file (.ml64, or IR with --asm)")->required();
  run->add_option("--inputs", inputs, "comma-separated input values");
  run->add_option("--seed-input", seed_input, "input slot that carries dot 1");
  run->add_flag("--no-ad", no_ad, "run uninstrumented");
  run->add_flag("--no-math-wrappers", no_math_wrappers,
                "differentiate math calls as black boxes");
  run->add_flag("--warn-unhandled", warn_unhandled, "report zero-derivative opcodes");
  run->add_flag("--asm", as_asm, "treat the input as IR assembly");
  run->add_option("--fuel", fuel, "superblock budget");

  CLI::App* mon = app.add_subcommand("monitor", "start a paused inspection session");
  mon->add_option("prog", path)->required();
  mon->add_option("--inputs", inputs);
  mon->add_option("--seed-input", seed_input);
  mon->add_flag("--no-math-wrappers", no_math_wrappers);
  mon->add_flag("--asm", as_asm);

  CLI::App* diff = app.add_subcommand("diff", "engine vs dual oracle vs finite differences");
  diff->add_option("prog", path)->required();
  diff->add_option("--inputs", inputs);
  diff->add_option("--seed-input", seed_input);
  diff->add_option("--step", h, "finite-difference step");
  diff->add_flag("--no-math-wrappers", no_math_wrappers);

  CLI::App* bench = app.add_subcommand("bench", "the Burgers solver benchmark");
  bench->add_option("--nx", nx, "grid edge length");
  bench->add_option("--nt", nt, "time steps");
  bench->add_option("--reps", reps, "timing repetitions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed())
      return cmd_run(path, inputs, seed_input, no_ad, no_math_wrappers, warn_unhandled,
                     as_asm, fuel);
    if (mon->parsed())
      return cmd_monitor(path, inputs, seed_input, no_math_wrappers, as_asm);
    if (diff->parsed())
      return cmd_diff(path, inputs, seed_input, h, no_math_wrappers);
    if (bench->parsed())
      return cmd_bench(nx, nt, reps);
  } catch (const ml::CompileError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << " (line " << e.line << ", column " << e.col
              << ")\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
