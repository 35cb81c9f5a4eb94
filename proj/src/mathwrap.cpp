#include "dotvm/mathwrap.hpp"

#include <cmath>
#include <stdexcept>

namespace dotvm {

namespace {

double v_sin(double x, double) { return std::sin(x); }
double d_sin(double x, double) { return std::cos(x); }
double v_cos(double x, double) { return std::cos(x); }
double d_cos(double x, double) { return -std::sin(x); }
double v_tan(double x, double) { return std::tan(x); }
double d_tan(double x, double) { return 1.0 / (std::cos(x) * std::cos(x)); }
double v_asin(double x, double) { return std::asin(x); }
double d_asin(double x, double) { return 1.0 / std::sqrt(1.0 - x * x); }
double v_acos(double x, double) { return std::acos(x); }
double d_acos(double x, double) { return -1.0 / std::sqrt(1.0 - x * x); }
double v_atan(double x, double) { return std::atan(x); }
double d_atan(double x, double) { return 1.0 / (1.0 + x * x); }
double v_atan2(double y, double x) { return std::atan2(y, x); }
double d_atan2_1(double y, double x) { return x / (y * y + x * x); }
double d_atan2_2(double y, double x) { return -y / (y * y + x * x); }
double v_sinh(double x, double) { return std::sinh(x); }
double d_sinh(double x, double) { return std::cosh(x); }
double v_cosh(double x, double) { return std::cosh(x); }
double d_cosh(double x, double) { return std::sinh(x); }
double v_tanh(double x, double) { return std::tanh(x); }
double d_tanh(double x, double) { return 1.0 / (std::cosh(x) * std::cosh(x)); }
double v_exp(double x, double) { return std::exp(x); }
double d_exp(double x, double) { return std::exp(x); }
double v_log(double x, double) { return std::log(x); }
double d_log(double x, double) { return 1.0 / x; }
double v_log10(double x, double) { return std::log10(x); }
double d_log10(double x, double) { return 1.0 / (x * M_LN10); }
double v_sqrt(double x, double) { return std::sqrt(x); }
double d_sqrt(double x, double) { return 1.0 / (2.0 * std::sqrt(x)); }
double v_pow(double x, double y) { return std::pow(x, y); }
double d_pow_1(double x, double y) { return y * std::pow(x, y - 1.0); }
// The y-partial involves log(x); defined as 0 for x <= 0.
double d_pow_2(double x, double y) { return x > 0.0 ? std::pow(x, y) * std::log(x) : 0.0; }
double v_fabs(double x, double) { return std::fabs(x); }
double d_fabs(double x, double) { return std::signbit(x) ? -1.0 : 1.0; }
double v_fmod(double x, double y) { return std::fmod(x, y); }
double d_fmod_1(double, double) { return 1.0; }
double d_fmod_2(double x, double y) { return -std::trunc(x / y); }
double v_floor(double x, double) { return std::floor(x); }
double v_ceil(double x, double) { return std::ceil(x); }
double d_zero(double, double) { return 0.0; }
double v_ldexp(double x, double k) { return std::ldexp(x, static_cast<int>(k)); }
double d_ldexp_1(double, double k) { return std::ldexp(1.0, static_cast<int>(k)); }

const std::vector<MathCall> kCalls = {
    {"sin", 1, v_sin, d_sin, nullptr},
    {"cos", 1, v_cos, d_cos, nullptr},
    {"tan", 1, v_tan, d_tan, nullptr},
    {"asin", 1, v_asin, d_asin, nullptr},
    {"acos", 1, v_acos, d_acos, nullptr},
    {"atan", 1, v_atan, d_atan, nullptr},
    {"atan2", 2, v_atan2, d_atan2_1, d_atan2_2},
    {"sinh", 1, v_sinh, d_sinh, nullptr},
    {"cosh", 1, v_cosh, d_cosh, nullptr},
    {"tanh", 1, v_tanh, d_tanh, nullptr},
    {"exp", 1, v_exp, d_exp, nullptr},
    {"log", 1, v_log, d_log, nullptr},
    {"log10", 1, v_log10, d_log10, nullptr},
    {"sqrt", 1, v_sqrt, d_sqrt, nullptr},
    {"pow", 2, v_pow, d_pow_1, d_pow_2},
    {"fabs", 1, v_fabs, d_fabs, nullptr},
    {"fmod", 2, v_fmod, d_fmod_1, d_fmod_2},
    {"floor", 1, v_floor, d_zero, nullptr},
    {"ceil", 1, v_ceil, d_zero, nullptr},
    {"ldexp", 2, v_ldexp, d_ldexp_1, d_zero},
};

} // namespace

const std::vector<MathCall>& math_calls() { return kCalls; }

const MathCall* find_math_call(std::string_view name) {
  for (const auto& c : kCalls)
    if (name == c.name)
      return &c;
  return nullptr;
}

double math_value(const MathCall& f, double a1, double a2) { return f.value(a1, a2); }

double math_dot(const MathCall& f, double a1, double a2, double da1, double da2) {
  double dot = f.d1(a1, a2) * da1;
  if (f.arity == 2) {
    const double t2 = f.d2(a1, a2) * da2;
    dot = dot + t2;
  }
  return dot;
}

std::pair<double, double> wrapped_call(std::string_view name,
                                       std::span<const double> args,
                                       std::span<const double> arg_dots) {
  const MathCall* f = find_math_call(name);
  if (!f)
    throw std::invalid_argument("unknown math function: " + std::string(name));
  if (args.size() != static_cast<size_t>(f->arity) || arg_dots.size() != args.size())
    throw std::invalid_argument("arity mismatch for math function " + std::string(name));
  const double a1 = args[0];
  const double a2 = f->arity == 2 ? args[1] : 0.0;
  const double da1 = arg_dots[0];
  const double da2 = f->arity == 2 ? arg_dots[1] : 0.0;
  return {math_value(*f, a1, a2), math_dot(*f, a1, a2, da1, da2)};
}

} // namespace dotvm
