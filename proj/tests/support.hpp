#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "tmboot/bitvec.hpp"
#include "tmboot/provider.hpp"
#include "tmboot/rng.hpp"

namespace testsupport {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("tmboot-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline tmboot::BitVector random_bits(std::size_t n, tmboot::Rng& rng, double p = 0.5) {
  tmboot::BitVector v(n);
  for (std::size_t k = 0; k < n; ++k) v.set(k, rng.chance(p));
  return v;
}

inline tmboot::BitVector bits(const std::vector<int>& b) {
  tmboot::BitVector v(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) v.set(k, b[k] != 0);
  return v;
}

/// Keyword pools that share nothing with each other or the filler list.
inline std::vector<std::vector<std::string>> planted_pools(std::size_t pools, std::size_t size,
                                                           const std::string& tag = "kw") {
  std::vector<std::vector<std::string>> out(pools);
  for (std::size_t p = 0; p < pools; ++p) {
    for (std::size_t k = 0; k < size; ++k) {
      out[p].push_back(tag + static_cast<char>('a' + p) + static_cast<char>('a' + k) + "x");
    }
  }
  return out;
}

}  // namespace testsupport
