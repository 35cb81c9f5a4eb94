#include "dotvm/bench.hpp"

#include "dotvm/oracle.hpp"
#include "dotvm/pipeline.hpp"

#include <bit>
#include <cmath>
#include <sstream>

namespace dotvm {

std::string burgers_source(int nx, int nt) {
  const int nn = nx * nx;
  std::ostringstream os;
  auto num = [](double v) {
    std::ostringstream n;
    n.precision(17);
    n << v;
    std::string s = n.str();
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos)
      s += ".0";
    return s;
  };
  const std::string N = num(nx), NN = num(nn), NM1 = num(nx - 1);

  os << "var s: f64;\n"
        "var dx: f64;\nvar dt: f64;\nvar lam: f64;\n"
        "var x: f64;\nvar y: f64;\nvar base: f64;\n"
        "var i: f64;\nvar j: f64;\nvar n: f64;\nvar idx: f64;\n"
        "var uij: f64;\nvar vij: f64;\n"
        "var sum: f64;\nvar nrm: f64;\n";
  os << "arr u[" << nn << "]: f64;\n"
     << "arr v[" << nn << "]: f64;\n"
     << "arr un[" << nn << "]: f64;\n"
     << "arr vn[" << nn << "]: f64;\n\n";

  os << "s = input(0);\n"
     << "dx = 1.0/" << NM1 << ";\n"
     << "dt = 0.2*dx;\n"
     << "lam = 0.5*dt/dx;\n\n";

  os << "for (i = 0.0; i < " << N << "; i = i + 1.0) {\n"
     << "  for (j = 0.0; j < " << N << "; j = j + 1.0) {\n"
     << "    idx = i*" << N << " + j;\n"
     << "    x = j*dx;\n    y = i*dx;\n"
     << "    base = 4.0*x*(1.0-x)*y*(1.0-y);\n"
     << "    u[idx] = s + 0.5*base;\n"
     << "    v[idx] = s + 0.25*base;\n"
     << "    dg_set_dot(u[idx], 1.0);\n"
     << "    dg_set_dot(v[idx], 1.0);\n"
     << "  }\n"
     << "}\n\n";

  os << "for (n = 0.0; n < " << num(nt) << "; n = n + 1.0) {\n"
     << "  for (i = 1.0; i < " << NM1 << "; i = i + 1.0) {\n"
     << "    for (j = 1.0; j < " << NM1 << "; j = j + 1.0) {\n"
     << "      idx = i*" << N << " + j;\n"
     << "      uij = u[idx];\n      vij = v[idx];\n"
     << "      un[idx] = 0.25*(u[idx+1.0]+u[idx-1.0]+u[idx+" << N << "]+u[idx-" << N
     << "]) - lam*uij*(u[idx+1.0]-u[idx-1.0]) - lam*vij*(u[idx+" << N << "]-u[idx-"
     << N << "]);\n"
     << "      vn[idx] = 0.25*(v[idx+1.0]+v[idx-1.0]+v[idx+" << N << "]+v[idx-" << N
     << "]) - lam*uij*(v[idx+1.0]-v[idx-1.0]) - lam*vij*(v[idx+" << N << "]-v[idx-"
     << N << "]);\n"
     << "    }\n"
     << "  }\n"
     << "  for (i = 1.0; i < " << NM1 << "; i = i + 1.0) {\n"
     << "    for (j = 1.0; j < " << NM1 << "; j = j + 1.0) {\n"
     << "      idx = i*" << N << " + j;\n"
     << "      u[idx] = un[idx];\n"
     << "      v[idx] = vn[idx];\n"
     << "    }\n"
     << "  }\n"
     << "}\n\n";

  os << "sum = 0.0;\n"
     << "for (i = 0.0; i < " << NN << "; i = i + 1.0) {\n"
     << "  sum = sum + u[i]*u[i] + v[i]*v[i];\n"
     << "}\n"
     << "nrm = sqrt(sum/" << NN << ");\n"
     << "print(nrm);\n";
  return os.str();
}

BenchReport bench_burgers(const BenchmarkConfig& config) {
  BenchReport rep;
  if (config.nx < 4 || config.nt < 1 || config.reps < 1) {
    rep.ok = false;
    rep.error = "configuration out of range (need nx >= 4, nt >= 1, reps >= 1)";
    return rep;
  }
  const std::string source = burgers_source(config.nx, config.nt);
  Prepared prep;
  try {
    prep = prepare_source(source);
  } catch (const std::exception& ex) {
    rep.ok = false;
    rep.error = ex.what();
    return rep;
  }
  const std::vector<double> inputs = {0.0};

  // Instrumented runs; dots come from the per-cell dg_set_dot seeding.
  double best_instr = 0;
  for (int r = 0; r < config.reps; ++r) {
    const EngineOutcome out = run_engine(prep, inputs, -1, true);
    if (!out.ok) {
      rep.ok = false;
      rep.error = out.error;
      return rep;
    }
    if (r == 0) {
      rep.value = out.out_values.at(0);
      rep.dot = out.out_dots.at(0);
      rep.shadow_pages = out.shadow_pages;
      rep.memory_pages = out.memory_pages;
    }
    best_instr = r == 0 ? out.run_seconds : std::min(best_instr, out.run_seconds);
  }
  rep.instrumented_seconds = best_instr;

  double best_native = 0;
  for (int r = 0; r < config.reps; ++r) {
    const EngineOutcome out = run_engine(prep, inputs, -1, false);
    if (!out.ok) {
      rep.ok = false;
      rep.error = out.error;
      return rep;
    }
    best_native = r == 0 ? out.run_seconds : std::min(best_native, out.run_seconds);
  }
  rep.native_seconds = best_native;
  rep.slowdown = best_native > 0 ? best_instr / best_native : 0;

  if (std::isnan(rep.value)) {
    rep.ok = false;
    std::ostringstream os;
    os << "solution diverged to NaN (nx=" << config.nx << ", nt=" << config.nt << ")";
    rep.error = os.str();
    return rep;
  }

  const OracleResult oracle = oracle_eval(*prep.ast, inputs, -1);
  if (!oracle.ok) {
    rep.ok = false;
    rep.error = "oracle: " + oracle.error;
    return rep;
  }
  rep.oracle_dot = oracle.out_dots.at(0);
  rep.dot_bit_equal = std::bit_cast<uint64_t>(rep.dot) ==
                      std::bit_cast<uint64_t>(rep.oracle_dot);

  const std::vector<double> fd = finite_diff(prep, inputs, 0, 1e-6);
  rep.fd_dot = fd.empty() ? 0.0 : fd[0];
  rep.fd_rel_err = std::fabs(rep.dot - rep.fd_dot) / (1.0 + std::fabs(rep.fd_dot));

  rep.shadow_pages_ok = rep.shadow_pages <= 2 * rep.memory_pages + 4;
  rep.ok = rep.dot_bit_equal && rep.fd_rel_err <= 1e-4 && rep.shadow_pages_ok;
  return rep;
}

std::string format_report(const BenchmarkConfig& config, const BenchReport& rep) {
  std::ostringstream os;
  os.precision(17);
  os << "burgers " << config.nx << "x" << config.nx << " grid, " << config.nt
     << " steps, " << config.reps << " reps\n";
  if (!rep.ok && !rep.error.empty()) {
    os << "error: " << rep.error << "\n";
    return os.str();
  }
  os << "value            " << rep.value << "\n"
     << "dot              " << rep.dot << "\n"
     << "oracle dot       " << rep.oracle_dot
     << (rep.dot_bit_equal ? "  (bit-identical)" : "  (MISMATCH)") << "\n"
     << "fd dot           " << rep.fd_dot << "  (rel err ";
  os.precision(3);
  os << rep.fd_rel_err << ")\n";
  os.precision(6);
  os << "native time      " << rep.native_seconds << " s\n"
     << "instrumented     " << rep.instrumented_seconds << " s\n"
     << "slow-down factor " << rep.slowdown << " (reported, not asserted)\n"
     << "shadow pages     " << rep.shadow_pages << " (client pages touched: "
     << rep.memory_pages << ", bound "
     << (rep.shadow_pages_ok ? "satisfied" : "VIOLATED") << ")\n";
  return os.str();
}

} // namespace dotvm
