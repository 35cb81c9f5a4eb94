#include "dotvm/shadowmem.hpp"

#include <doctest.h>

#include <map>
#include <random>
#include <set>

using namespace dotvm;

TEST_CASE("fresh map reads as zero everywhere") {
  ShadowMap m;
  auto bytes = m.read_vec(0x1000, 8);
  for (uint8_t b : bytes)
    CHECK(b == 0);
  CHECK(m.pages_allocated() == 0);
}

TEST_CASE("read-your-write") {
  ShadowMap m;
  const uint8_t v[] = {0xAA};
  m.write(0x1000, v);
  CHECK(m.read_vec(0x1000, 1) == std::vector<uint8_t>{0xAA});
}

TEST_CASE("reads straddling an unwritten page fill with zeros") {
  ShadowMap m;
  std::vector<uint8_t> v(16, 0x55);
  m.write(0x2000 - 16, v); // last 16 bytes of one page
  auto r = m.read_vec(0x2000 - 16, 32);
  for (int i = 0; i < 16; ++i)
    CHECK(r[i] == 0x55);
  for (int i = 16; i < 32; ++i)
    CHECK(r[i] == 0);
  CHECK(m.pages_allocated() == 1);
}

TEST_CASE("disjoint pages allocate exactly one leaf page each") {
  ShadowMap m;
  const uint8_t v[] = {1};
  m.write(0x10000, v);
  m.write(0x90000, v);
  CHECK(m.pages_allocated() == 2);
}

TEST_CASE("overlapping writes: the later write wins") {
  ShadowMap m;
  std::vector<uint8_t> a(8, 0x11), b(4, 0x22);
  m.write(0x500, a);
  m.write(0x502, b);
  auto r = m.read_vec(0x500, 8);
  CHECK(r == std::vector<uint8_t>({0x11, 0x11, 0x22, 0x22, 0x22, 0x22, 0x11, 0x11}));
}

TEST_CASE("equivalence with a flat reference map on random traffic") {
  ShadowMap m;
  std::map<uint64_t, uint8_t> ref;
  std::mt19937_64 rng(23);
  // A few address clusters, including ones far apart in the address space.
  const uint64_t bases[] = {0x0, 0xFFF0, 0x7FFFFFFFF000ull, 0xFFFFFFFFFFFFF000ull};
  std::set<uint64_t> pages_written;
  for (int iter = 0; iter < 20000; ++iter) {
    const uint64_t addr = bases[rng() % 4] + (rng() % 0x3000);
    if (rng() % 2) {
      std::vector<uint8_t> data(1 + rng() % 16);
      for (auto& b : data)
        b = static_cast<uint8_t>(rng());
      for (size_t i = 0; i < data.size(); ++i) {
        ref[addr + i] = data[i];
        pages_written.insert((addr + i) >> 12);
      }
      m.write(addr, data);
    } else {
      const size_t len = 1 + rng() % 16;
      auto got = m.read_vec(addr, len);
      for (size_t i = 0; i < len; ++i) {
        auto it = ref.find(addr + i);
        REQUIRE(got[i] == (it == ref.end() ? 0 : it->second));
      }
    }
  }
  CHECK(m.pages_allocated() <= pages_written.size());
}

TEST_CASE("byte accessors") {
  ShadowMap m;
  m.write_byte(42, 0x7F);
  CHECK(m.read_byte(42) == 0x7F);
  CHECK(m.read_byte(43) == 0);
}
