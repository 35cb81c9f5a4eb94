#include "dotvm/fpcodec.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dotvm {

namespace {

constexpr uint64_t kFrac64Mask = 0x000FFFFFFFFFFFFFull;
constexpr uint64_t kQuiet64 = 0x0008000000000000ull;
constexpr uint32_t kFrac32Mask = 0x007FFFFFu;

// Round x down to `keep = width - drop` bits, nearest-even. drop <= 64.
uint64_t round_shift_rne(uint64_t x, unsigned drop) {
  if (drop == 0)
    return x;
  if (drop > 64)
    return 0;
  uint64_t keep = drop == 64 ? 0 : x >> drop;
  uint64_t rem = drop == 64 ? x : x & ((1ull << drop) - 1);
  uint64_t half = 1ull << (drop - 1);
  if (rem > half || (rem == half && (keep & 1)))
    keep += 1;
  return keep;
}

} // namespace

Binary64Fields split_binary64(uint64_t bits) {
  return {static_cast<bool>(bits >> 63), static_cast<uint32_t>((bits >> 52) & 0x7FF),
          bits & kFrac64Mask};
}

Binary32Fields split_binary32(uint32_t bits) {
  return {static_cast<bool>(bits >> 31), (bits >> 23) & 0xFF, bits & kFrac32Mask};
}

double decode_binary64(uint64_t bits) {
  const Binary64Fields f = split_binary64(bits);
  double mag;
  if (f.biased_exp == 0) {
    // Subnormal branch: no implicit leading 1, exponent pinned at -1022.
    mag = std::ldexp(static_cast<double>(f.significand), -1074);
  } else if (f.biased_exp == 0x7FF) {
    mag = f.significand ? std::numeric_limits<double>::quiet_NaN()
                        : std::numeric_limits<double>::infinity();
  } else {
    mag = std::ldexp(static_cast<double>(f.significand | (1ull << 52)),
                     static_cast<int>(f.biased_exp) - 1023 - 52);
  }
  return f.sign ? -mag : mag;
}

double decode_binary32(uint32_t bits) {
  const Binary32Fields f = split_binary32(bits);
  double mag;
  if (f.biased_exp == 0) {
    mag = std::ldexp(static_cast<double>(f.significand), -126 - 23);
  } else if (f.biased_exp == 0xFF) {
    mag = f.significand ? std::numeric_limits<double>::quiet_NaN()
                        : std::numeric_limits<double>::infinity();
  } else {
    mag = std::ldexp(static_cast<double>(f.significand | (1u << 23)),
                     static_cast<int>(f.biased_exp) - 127 - 23);
  }
  return f.sign ? -mag : mag;
}

uint64_t encode_binary64(double value) {
  const uint64_t sign = std::signbit(value) ? (1ull << 63) : 0;
  if (std::isnan(value))
    return sign | (0x7FFull << 52) | kQuiet64;
  if (std::isinf(value))
    return sign | (0x7FFull << 52);
  if (value == 0.0)
    return sign;
  int e;
  const double m = std::frexp(std::fabs(value), &e); // m in [0.5, 1)
  const int exp = e - 1;                             // value = (2m) * 2^exp, 2m in [1,2)
  if (exp >= -1022) {
    const auto frac = static_cast<uint64_t>(std::ldexp(2.0 * m - 1.0, 52));
    return sign | (static_cast<uint64_t>(exp + 1023) << 52) | frac;
  }
  // Subnormal: the significand digits sit at fixed scale 2^-1074.
  const auto frac = static_cast<uint64_t>(std::ldexp(std::fabs(value), 1074));
  return sign | frac;
}

uint32_t encode_binary32(double value) {
  const uint32_t sign = std::signbit(value) ? (1u << 31) : 0;
  if (std::isnan(value))
    return sign | 0x7FC00000u;
  if (std::isinf(value))
    return sign | 0x7F800000u;
  if (value == 0.0)
    return sign;
  int e;
  const double m = std::frexp(std::fabs(value), &e);
  int exp = e - 1;
  // 53-bit significand of the double, integer bit included.
  auto sig53 = static_cast<uint64_t>(std::ldexp(m, 53));
  if (exp >= -126) {
    uint64_t rounded = round_shift_rne(sig53, 29); // 53 -> 24 bits
    if (rounded == (1ull << 24)) {
      rounded >>= 1;
      exp += 1;
    }
    if (exp > 127)
      return sign | 0x7F800000u;
    return sign | (static_cast<uint32_t>(exp + 127) << 23) |
           (static_cast<uint32_t>(rounded) & kFrac32Mask);
  }
  if (exp < -151)
    return sign; // below half the smallest subnormal
  const unsigned drop = 29 + static_cast<unsigned>(-126 - exp);
  const uint64_t rounded = round_shift_rne(sig53, drop);
  // A carry out of the top subnormal digit lands in the exponent field,
  // yielding the smallest normal, which is exactly right.
  return sign | static_cast<uint32_t>(rounded);
}

X87Bytes f64_to_x87(uint64_t bits64) {
  const Binary64Fields f = split_binary64(bits64);
  uint64_t sig = 0;
  uint32_t exp15 = 0;
  if (f.biased_exp == 0x7FF) {
    exp15 = 0x7FFF;
    sig = f.significand ? ((1ull << 63) | (1ull << 62) | (f.significand << 11))
                        : (1ull << 63);
  } else if (f.biased_exp == 0) {
    if (f.significand != 0) {
      // binary64 subnormals are representable as x87 normals.
      const int msb = 63 - std::countl_zero(f.significand);
      sig = f.significand << (63 - msb);
      exp15 = static_cast<uint32_t>((msb - 1074) + 16383);
    }
  } else {
    sig = (1ull << 63) | (f.significand << 11);
    exp15 = f.biased_exp - 1023 + 16383;
  }
  X87Bytes out{};
  for (int i = 0; i < 8; ++i)
    out[i] = static_cast<uint8_t>(sig >> (8 * i));
  out[8] = static_cast<uint8_t>(exp15);
  out[9] = static_cast<uint8_t>((exp15 >> 8) | (f.sign ? 0x80 : 0));
  return out;
}

uint64_t x87_to_f64(const X87Bytes& bytes) {
  uint64_t sig = 0;
  for (int i = 0; i < 8; ++i)
    sig |= static_cast<uint64_t>(bytes[i]) << (8 * i);
  const uint32_t exp15 = bytes[8] | (static_cast<uint32_t>(bytes[9] & 0x7F) << 8);
  const uint64_t sign = (bytes[9] & 0x80) ? (1ull << 63) : 0;
  const bool int_bit = sig >> 63;

  if (exp15 == 0x7FFF) {
    if (int_bit && (sig << 1) == 0)
      return sign | (0x7FFull << 52); // infinity
    return sign | (0x7FFull << 52) | kQuiet64 | ((sig >> 11) & kFrac64Mask);
  }
  if (exp15 == 0) {
    if (int_bit)
      return sign | (0x7FFull << 52) | kQuiet64; // pseudo-denormal
    if (sig == 0)
      return sign;
    return sign; // true x87 subnormal underflows binary64 to zero
  }
  if (!int_bit)
    return sign | (0x7FFull << 52) | kQuiet64; // unnormal

  int exp = static_cast<int>(exp15) - 16383;
  if (exp >= -1022) {
    uint64_t rounded = round_shift_rne(sig, 11); // 64 -> 53 bits
    if (rounded == (1ull << 53)) {
      rounded >>= 1;
      exp += 1;
    }
    if (exp > 1023)
      return sign | (0x7FFull << 52);
    return sign | (static_cast<uint64_t>(exp + 1023) << 52) | (rounded & kFrac64Mask);
  }
  const int extra = -1022 - exp;
  if (extra >= 54)
    return sign;
  const uint64_t rounded = round_shift_rne(sig, 11 + static_cast<unsigned>(extra));
  return sign | rounded; // carry into the exponent field encodes the min normal
}

std::vector<uint64_t> lanes(std::span<const uint8_t> bytes, unsigned granularity_bits) {
  if (granularity_bits != 32 && granularity_bits != 64)
    throw std::invalid_argument("lane granularity must be 32 or 64 bits");
  const size_t step = granularity_bits / 8;
  if (bytes.size() % step != 0)
    throw std::invalid_argument("lane granularity does not divide operand width");
  std::vector<uint64_t> out;
  out.reserve(bytes.size() / step);
  for (size_t base = 0; base < bytes.size(); base += step) {
    uint64_t lane = 0;
    for (size_t i = 0; i < step; ++i)
      lane |= static_cast<uint64_t>(bytes[base + i]) << (8 * i);
    out.push_back(lane);
  }
  return out;
}

int64_t f64_to_i64_rne(double v) {
  if (std::isnan(v) || v >= 9223372036854775808.0 || v < -9223372036854775808.0)
    return std::numeric_limits<int64_t>::min();
  return std::llrint(v); // default rounding mode is nearest-even
}

double narrow_to_binary32(double v) { return decode_binary32(encode_binary32(v)); }

} // namespace dotvm
