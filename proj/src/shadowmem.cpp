#include "dotvm/shadowmem.hpp"

#include <cstring>

namespace dotvm {

const ShadowMap::Page* ShadowMap::find_page(uint64_t addr) const {
  auto it1 = root_.find(l1_index(addr));
  if (it1 == root_.end())
    return nullptr;
  auto it2 = it1->second->children.find(l2_index(addr));
  if (it2 == it1->second->children.end())
    return nullptr;
  return it2->second->pages[page_index(addr)].get();
}

ShadowMap::Page& ShadowMap::page_for_write(uint64_t addr) {
  auto& mid = root_[l1_index(addr)];
  if (!mid)
    mid = std::make_unique<Mid>();
  auto& leaf = mid->children[l2_index(addr)];
  if (!leaf)
    leaf = std::make_unique<Leaf>();
  auto& page = leaf->pages[page_index(addr)];
  if (!page) {
    page = std::make_unique<Page>();
    ++pages_allocated_;
  }
  return *page;
}

void ShadowMap::write(uint64_t addr, std::span<const uint8_t> bytes) {
  bytes_written_ += bytes.size();
  size_t done = 0;
  while (done < bytes.size()) {
    const uint64_t a = addr + done;
    const size_t in_page = a & (kPageSize - 1);
    const size_t chunk = std::min(bytes.size() - done, kPageSize - in_page);
    std::memcpy(page_for_write(a).data.data() + in_page, bytes.data() + done, chunk);
    done += chunk;
  }
}

void ShadowMap::read(uint64_t addr, std::span<uint8_t> out) const {
  size_t done = 0;
  while (done < out.size()) {
    const uint64_t a = addr + done;
    const size_t in_page = a & (kPageSize - 1);
    const size_t chunk = std::min(out.size() - done, kPageSize - in_page);
    if (const Page* page = find_page(a))
      std::memcpy(out.data() + done, page->data.data() + in_page, chunk);
    else
      std::memset(out.data() + done, 0, chunk);
    done += chunk;
  }
}

std::vector<uint8_t> ShadowMap::read_vec(uint64_t addr, size_t len) const {
  std::vector<uint8_t> out(len);
  read(addr, out);
  return out;
}

uint8_t ShadowMap::read_byte(uint64_t addr) const {
  if (const Page* page = find_page(addr))
    return page->data[addr & (kPageSize - 1)];
  return 0;
}

void ShadowMap::write_byte(uint64_t addr, uint8_t v) {
  bytes_written_ += 1;
  page_for_write(addr).data[addr & (kPageSize - 1)] = v;
}

} // namespace dotvm
