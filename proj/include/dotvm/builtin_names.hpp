#pragma once

namespace dotvm::builtin {

// Dirty call behaviours provided by the machine out of the box.
inline constexpr const char* kX87Store = "x87_store80";
inline constexpr const char* kX87Load = "x87_load80";
inline constexpr const char* kSetDot = "dg_set_dot";
inline constexpr const char* kGetDot = "dg_get_dot";
inline constexpr const char* kSetDotReg = "dg_set_dot_reg";
inline constexpr const char* kGetDotReg = "dg_get_dot_reg";
inline constexpr const char* kPrintF64 = "print_f64";
inline constexpr const char* kReadInput = "read_input";
inline constexpr const char* kMathPrefix = "math_"; // math_sin, math_pow, ...

// Dirty calls emitted by the instrumentation pass.
inline constexpr const char* kShadowStore = "shadow_store";
inline constexpr const char* kShadowLoad = "shadow_load";
inline constexpr const char* kShadowX87Store = "shadow_x87_store80";
inline constexpr const char* kShadowX87Load = "shadow_x87_load80";

// CCall targets emitted by the instrumentation pass.
inline constexpr const char* kBitlogicAnd = "ad_bitlogic_and";
inline constexpr const char* kBitlogicOr = "ad_bitlogic_or";
inline constexpr const char* kBitlogicXor = "ad_bitlogic_xor";
inline constexpr const char* kMathDotPrefix = "mathdot_"; // mathdot_sin, ...

} // namespace dotvm::builtin
