#include "dotvm/oracle.hpp"
#include "dotvm/pipeline.hpp"

#include <doctest.h>

#include <bit>
#include <cmath>

using namespace dotvm;

namespace {

const char* kSine = R"(
var x: f64;
var y: f64;
x = input(0);
y = sin(x);
print(y);
)";

} // namespace

TEST_CASE("wrapped sine yields the analytic derivative bit-exactly") {
  Prepared prep = prepare_source(kSine, /*math_wrappers=*/true);
  for (double x : {0.05, 0.5, 0.9, -0.7}) {
    EngineOutcome out = run_engine(prep, std::vector<double>{x}, 0, true);
    REQUIRE(out.ok);
    CHECK(std::bit_cast<uint64_t>(out.out_values.at(0)) ==
          std::bit_cast<uint64_t>(std::sin(x)));
    CHECK(std::bit_cast<uint64_t>(out.out_dots.at(0)) ==
          std::bit_cast<uint64_t>(std::cos(x) * 1.0));
  }
}

TEST_CASE("without wrappers the table-based sine loses the derivative") {
  Prepared prep = prepare_source(kSine, /*math_wrappers=*/false);

  SUBCASE("the value still approximates sine") {
    for (double x : {0.05, 0.3, 0.5, 0.9, -0.8}) {
      EngineOutcome out = run_engine(prep, std::vector<double>{x}, 0, true);
      REQUIRE(out.ok);
      CHECK(std::fabs(out.out_values.at(0) - std::sin(x)) <=
            1e-13 * (1 + std::fabs(std::sin(x))));
    }
  }
  SUBCASE("inside the small-argument interval the dot tracks the cosine") {
    for (double x : {0.01, 0.05, 0.1, -0.09}) {
      EngineOutcome out = run_engine(prep, std::vector<double>{x}, 0, true);
      REQUIRE(out.ok);
      CHECK(std::fabs(out.out_dots.at(0) - std::cos(x)) <= 1e-9);
    }
  }
  SUBCASE("outside it the rounding trick zeroes the dot") {
    for (double x : {0.2, 0.5, 0.9, -0.5}) {
      EngineOutcome out = run_engine(prep, std::vector<double>{x}, 0, true);
      REQUIRE(out.ok);
      CHECK(out.out_dots.at(0) == 0.0); // the correct value would be cos(x)
      CHECK(std::fabs(std::cos(x)) > 0.5);
    }
  }
}

TEST_CASE("disabled wrappers also zero the dots of other math dirty calls") {
  Prepared prep = prepare_source(R"(
var x: f64;
x = input(0);
print(exp(x));
)",
                                 /*math_wrappers=*/false);
  EngineOutcome out = run_engine(prep, std::vector<double>{0.5}, 0, true);
  REQUIRE(out.ok);
  CHECK(out.out_values.at(0) == std::exp(0.5));
  CHECK(out.out_dots.at(0) == 0.0);
}

TEST_CASE("inline sine outside a whole assignment is a compile error") {
  CHECK_THROWS_AS(
      prepare_source("var x: f64;\nvar y: f64;\nx = input(0);\ny = 1.0 + sin(x);\n",
                     false),
      ml::CompileError);
  // fine with wrappers
  CHECK_NOTHROW(
      prepare_source("var x: f64;\nvar y: f64;\nx = input(0);\ny = 1.0 + sin(x);\n",
                     true));
}
