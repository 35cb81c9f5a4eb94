#pragma once

#include "dotvm/ir.hpp"

namespace dotvm {

enum class BitOp { And, Or, Xor };

/// Dot value of a bitwise logical operation, per the pattern rules for
/// sign-bit tricks and whole-lane masking. Operands and dots must share one
/// of the widths I32, I64 or V128. Scanning is per 64-bit lane first; a lane
/// with no match is re-examined as two independent 32-bit sub-lanes. Within
/// a lane, selection patterns are tried before arithmetic patterns, the
/// first operand before the second, and anything unmatched gets a zero dot.
Value ad_bitlogic(BitOp op, const Value& x, const Value& y, const Value& dx,
                  const Value& dy);

} // namespace dotvm
