#pragma once

#include "neckfol/core/types.hpp"

#include <cstdint>
#include <fstream>
#include <string>

namespace neckfol {

// Versioned little-endian container used for cloud, basis and leaf caches.
// Layout: magic "NFBC", u32 format version, u32 kind tag, then payload.
class BinWriter {
 public:
  BinWriter(const std::string& path, std::uint32_t kind, std::uint32_t version);
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f64(double v);
  void str(const std::string& s);
  void vec(const Vec& v);
  void mat(const Mat& m);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
};

class BinReader {
 public:
  // Throws IoError when the file is missing, truncated, or has the wrong kind/version.
  BinReader(const std::string& path, std::uint32_t kind, std::uint32_t version);
  std::uint64_t u64();
  std::int64_t i64();
  double f64();
  std::string str();
  Vec vec();
  Mat mat();

 private:
  void raw(void* dst, std::size_t bytes);
  std::ifstream in_;
  std::string path_;
};

}  // namespace neckfol
