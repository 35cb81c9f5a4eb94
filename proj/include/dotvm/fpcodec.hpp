#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace dotvm {

/// Field view of a binary64 pattern: sign bit 63, biased exponent bits 62..52,
/// significand bits 51..0.
struct Binary64Fields {
  bool sign;
  uint32_t biased_exp;  // 11 bits
  uint64_t significand; // 52 bits
};

/// Field view of a binary32 pattern: 8 exponent bits (bias 127), 23 significand bits.
struct Binary32Fields {
  bool sign;
  uint32_t biased_exp;
  uint32_t significand;
};

Binary64Fields split_binary64(uint64_t bits);
Binary32Fields split_binary32(uint32_t bits);

/// Decode a bit pattern into the extended real it represents (real, +-inf,
/// NaN or +-0), built up from the sign/exponent/significand fields rather
/// than by reinterpreting host storage.
double decode_binary64(uint64_t bits);
double decode_binary32(uint32_t bits);

/// Encode an extended real. binary64 encoding of a double is exact;
/// binary32 encoding rounds to nearest, ties to even, with overflow to
/// +-inf and gradual underflow to subnormals.
uint64_t encode_binary64(double value);
uint32_t encode_binary32(double value);

/// x87 double-extended layout, 10 bytes little-endian: bytes 0..7 hold the
/// 64-bit significand with an explicit integer bit at bit 63, bytes 8..9
/// hold sign(1) + biased exponent(15), bias 16383.
using X87Bytes = std::array<uint8_t, 10>;

X87Bytes f64_to_x87(uint64_t bits64);

/// Narrow an 80-bit pattern back to binary64, rounding to nearest-even.
/// Unnormal (nonzero exponent, integer bit clear) and pseudo-denormal
/// (zero exponent, integer bit set) patterns decode as NaN.
uint64_t x87_to_f64(const X87Bytes& bytes);

/// Split a little-endian byte block into 32- or 64-bit lane patterns,
/// lane 0 at the lowest address. Width must be a multiple of the granularity.
std::vector<uint64_t> lanes(std::span<const uint8_t> bytes, unsigned granularity_bits);

/// Round-to-nearest-even conversion used for F64toI64; out-of-range and NaN
/// inputs yield INT64_MIN, mirroring the usual cvtsd2si convention.
int64_t f64_to_i64_rne(double v);

/// Round a double through binary32 and back, entirely in integer bit
/// arithmetic. The engine's F64toF32 and the oracle both use this one
/// implementation, so their roundings cannot drift apart (and the optimizer
/// cannot elide the narrowing, which plain casts invite at high -O levels).
double narrow_to_binary32(double v);

} // namespace dotvm
