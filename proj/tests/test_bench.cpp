#include "dotvm/bench.hpp"

#include "dotvm/oracle.hpp"
#include "dotvm/pipeline.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>

using namespace dotvm;

TEST_CASE("burgers solver at a small size: engine, oracle and fd agree") {
  BenchmarkConfig cfg;
  cfg.nx = 8;
  cfg.nt = 4;
  cfg.reps = 1;
  const BenchReport rep = bench_burgers(cfg);
  REQUIRE_MESSAGE(rep.ok, rep.error);
  CHECK(rep.dot_bit_equal);
  CHECK(rep.fd_rel_err <= 1e-4);
  CHECK(rep.shadow_pages_ok);
  CHECK(std::isfinite(rep.value));
  CHECK(rep.value > 0);
  CHECK(rep.dot > 0); // shifting the whole state up raises the norm
}

TEST_CASE("burgers source only uses +,-,*,/ and sqrt") {
  const std::string src = burgers_source(6, 2);
  for (const char* banned : {"sin(", "cos(", "exp(", "log(", "pow(", "tan("})
    CHECK(src.find(banned) == std::string::npos);
  CHECK(src.find("sqrt(") != std::string::npos);
  CHECK(src.find("dg_set_dot(u[idx], 1.0);") != std::string::npos);
  CHECK(src.find("dg_set_dot(v[idx], 1.0);") != std::string::npos);
}

TEST_CASE("bad configurations are rejected") {
  BenchmarkConfig cfg;
  cfg.nx = 2;
  const BenchReport rep = bench_burgers(cfg);
  CHECK(!rep.ok);
  CHECK(rep.error.find("nx") != std::string::npos);
}

TEST_CASE("the report text carries the headline numbers") {
  BenchmarkConfig cfg;
  cfg.nx = 6;
  cfg.nt = 2;
  cfg.reps = 1;
  const BenchReport rep = bench_burgers(cfg);
  REQUIRE(rep.ok);
  const std::string text = format_report(cfg, rep);
  CHECK(text.find("slow-down factor") != std::string::npos);
  CHECK(text.find("bit-identical") != std::string::npos);
  CHECK(text.find("shadow pages") != std::string::npos);
}
