#include "dotvm/bitlogic.hpp"

#include <optional>
#include <stdexcept>

namespace dotvm {

namespace {

// One lane at width U. Returns the dot lane, or nullopt when no pattern
// applies at this width.
template <typename U>
std::optional<U> lane_dot(BitOp op, U x, U y, U dx, U dy) {
  constexpr U ones = ~U{0};
  constexpr U signmask = U{1} << (8 * sizeof(U) - 1);
  constexpr U absmask = static_cast<U>(ones >> 1);

  switch (op) {
  case BitOp::And:
    // Selection: and with all-ones keeps the other operand; and with
    // all-zeros produces the constant zero.
    if (x == ones)
      return dy;
    if (y == ones)
      return dx;
    if (x == 0 || y == 0)
      return U{0};
    // Arithmetic: and with 0b01..1 clears the sign bit (absolute value).
    // Two abs masks make a NaN, not real arithmetic.
    if (x == absmask && y == absmask)
      return U{0};
    if (x == absmask)
      return (y & signmask) ? static_cast<U>(dy ^ signmask) : dy;
    if (y == absmask)
      return (x & signmask) ? static_cast<U>(dx ^ signmask) : dx;
    return std::nullopt;
  case BitOp::Or:
    // Selection: or with all-zeros keeps the other operand, accepted only
    // if the zero operand's dot lane is zero as well.
    if (x == 0 && dx == 0)
      return dy;
    if (y == 0 && dy == 0)
      return dx;
    // Arithmetic: or with 0b10..0 sets the sign bit (negative absolute
    // value), again only for a zero dot on the mask operand.
    if (x == signmask && dx == 0)
      return (y & signmask) ? dy : static_cast<U>(dy ^ signmask);
    if (y == signmask && dy == 0)
      return (x & signmask) ? dx : static_cast<U>(dx ^ signmask);
    return std::nullopt;
  case BitOp::Xor:
    // Arithmetic only: xor with 0b10..0 flips the sign bit (negation).
    if (x == signmask && dx == 0)
      return static_cast<U>(dy ^ signmask);
    if (y == signmask && dy == 0)
      return static_cast<U>(dx ^ signmask);
    return std::nullopt;
  }
  return std::nullopt;
}

uint64_t dot_lane64(BitOp op, uint64_t x, uint64_t y, uint64_t dx, uint64_t dy) {
  if (auto d = lane_dot<uint64_t>(op, x, y, dx, dy))
    return *d;
  // No 64-bit match: the two 32-bit sub-lanes are checked independently.
  uint64_t out = 0;
  for (int half = 0; half < 2; ++half) {
    const int shift = 32 * half;
    const auto xs = static_cast<uint32_t>(x >> shift);
    const auto ys = static_cast<uint32_t>(y >> shift);
    const auto dxs = static_cast<uint32_t>(dx >> shift);
    const auto dys = static_cast<uint32_t>(dy >> shift);
    const uint32_t d = lane_dot<uint32_t>(op, xs, ys, dxs, dys).value_or(0);
    out |= static_cast<uint64_t>(d) << shift;
  }
  return out;
}

} // namespace

Value ad_bitlogic(BitOp op, const Value& x, const Value& y, const Value& dx,
                  const Value& dy) {
  if (x.type != y.type || x.type != dx.type || x.type != dy.type)
    throw std::invalid_argument("ad_bitlogic: operand widths differ");
  Value out = zero_value(x.type);
  switch (x.type) {
  case IrType::I32:
    out.set_lane32(0, lane_dot<uint32_t>(op, x.u32(), y.u32(), dx.u32(), dy.u32())
                          .value_or(0));
    return out;
  case IrType::I64:
    out.set_lane64(0, dot_lane64(op, x.u64(), y.u64(), dx.u64(), dy.u64()));
    return out;
  case IrType::V128:
    for (unsigned lane = 0; lane < 2; ++lane)
      out.set_lane64(lane, dot_lane64(op, x.lane64(lane), y.lane64(lane),
                                      dx.lane64(lane), dy.lane64(lane)));
    return out;
  default:
    throw std::invalid_argument("ad_bitlogic: width must be 32, 64 or 128 bits");
  }
}

} // namespace dotvm
