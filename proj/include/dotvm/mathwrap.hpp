#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dotvm {

/// An analytically differentiated math function: the value function plus one
/// partial derivative per argument. Both the engine's call wrappers and the
/// dual-number oracle evaluate dots through the same entry points, so their
/// rounding behaviour is identical by construction.
struct MathCall {
  const char* name;
  int arity; // 1 or 2
  double (*value)(double, double);
  double (*d1)(double, double);
  double (*d2)(double, double); // null for unary functions
};

const std::vector<MathCall>& math_calls();
const MathCall* find_math_call(std::string_view name);

double math_value(const MathCall& f, double a1, double a2 = 0.0);

/// dot = d1 * da1 (+ d2 * da2 for binary functions), evaluated in exactly
/// this order.
double math_dot(const MathCall& f, double a1, double a2, double da1, double da2);

/// Convenience wrapper resolving by name; throws on unknown name or arity
/// mismatch.
std::pair<double, double> wrapped_call(std::string_view name,
                                       std::span<const double> args,
                                       std::span<const double> arg_dots);

} // namespace dotvm
