#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

namespace dotvm {

/// Sparse byte store over the full 64-bit address space, organized as a
/// three-level prefix tree with level indices of 21/21/22 bits. The low
/// 22 bits select one of 1024 leaf pages of 4 KiB each; pages are allocated
/// on first write and never freed. Reads of never-written addresses yield
/// 0x00. The same structure backs both client memory and shadow memory.
class ShadowMap {
public:
  static constexpr unsigned kPageBits = 12;
  static constexpr uint64_t kPageSize = 1ull << kPageBits;

  void write(uint64_t addr, std::span<const uint8_t> bytes);
  void read(uint64_t addr, std::span<uint8_t> out) const;
  std::vector<uint8_t> read_vec(uint64_t addr, size_t len) const;
  uint8_t read_byte(uint64_t addr) const;
  void write_byte(uint64_t addr, uint8_t v);

  /// Number of leaf pages allocated so far.
  uint64_t pages_allocated() const { return pages_allocated_; }
  /// Total bytes passed to write().
  uint64_t bytes_written() const { return bytes_written_; }
  /// Number of distinct 4 KiB pages ever written to.
  uint64_t pages_touched() const { return pages_allocated_; }

private:
  struct Page {
    std::array<uint8_t, kPageSize> data{};
  };
  struct Leaf {
    std::array<std::unique_ptr<Page>, 1024> pages; // 10 bits of the low 22
  };
  struct Mid {
    std::unordered_map<uint32_t, std::unique_ptr<Leaf>> children; // 21 bits
  };

  static uint32_t l1_index(uint64_t addr) { return addr >> 43; }
  static uint32_t l2_index(uint64_t addr) { return (addr >> 22) & 0x1FFFFF; }
  static uint32_t page_index(uint64_t addr) { return (addr >> kPageBits) & 0x3FF; }

  const Page* find_page(uint64_t addr) const;
  Page& page_for_write(uint64_t addr);

  std::unordered_map<uint32_t, std::unique_ptr<Mid>> root_; // 21 bits
  uint64_t pages_allocated_ = 0;
  uint64_t bytes_written_ = 0;
};

} // namespace dotvm
