#include "neckfol/core/binio.hpp"
#include "neckfol/core/error.hpp"

#include <cstring>

namespace neckfol {

namespace {
constexpr char kMagic[4] = {'N', 'F', 'B', 'C'};
}

BinWriter::BinWriter(const std::string& path, std::uint32_t kind, std::uint32_t version)
    : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
  require(out_.good(), ErrorCode::IoError, "cannot open " + path + " for writing");
  out_.write(kMagic, 4);
  out_.write(reinterpret_cast<const char*>(&version), sizeof version);
  out_.write(reinterpret_cast<const char*>(&kind), sizeof kind);
}

void BinWriter::u64(std::uint64_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
void BinWriter::i64(std::int64_t v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }
void BinWriter::f64(double v) { out_.write(reinterpret_cast<const char*>(&v), sizeof v); }

void BinWriter::str(const std::string& s) {
  u64(s.size());
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinWriter::vec(const Vec& v) {
  u64(static_cast<std::uint64_t>(v.size()));
  out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void BinWriter::mat(const Mat& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void BinWriter::close() {
  out_.flush();
  require(out_.good(), ErrorCode::IoError, "write failed: " + path_);
  out_.close();
}

BinReader::BinReader(const std::string& path, std::uint32_t kind, std::uint32_t version)
    : in_(path, std::ios::binary), path_(path) {
  require(in_.good(), ErrorCode::IoError, "cannot open " + path);
  char magic[4];
  std::uint32_t ver = 0, k = 0;
  raw(magic, 4);
  raw(&ver, sizeof ver);
  raw(&k, sizeof k);
  require(std::memcmp(magic, kMagic, 4) == 0, ErrorCode::IoError, "bad magic in " + path);
  require(ver == version, ErrorCode::IoError, "version mismatch in " + path);
  require(k == kind, ErrorCode::IoError, "container kind mismatch in " + path);
}

void BinReader::raw(void* dst, std::size_t bytes) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(bytes));
  require(static_cast<std::size_t>(in_.gcount()) == bytes, ErrorCode::IoError, "truncated file " + path_);
}

std::uint64_t BinReader::u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
std::int64_t BinReader::i64() { std::int64_t v; raw(&v, sizeof v); return v; }
double BinReader::f64() { double v; raw(&v, sizeof v); return v; }

std::string BinReader::str() {
  const auto n = u64();
  require(n < (1u << 30), ErrorCode::IoError, "corrupt string length in " + path_);
  std::string s(n, '\0');
  raw(s.data(), n);
  return s;
}

Vec BinReader::vec() {
  const auto n = u64();
  require(n < (1ull << 34), ErrorCode::IoError, "corrupt vector length in " + path_);
  Vec v(static_cast<Eigen::Index>(n));
  raw(v.data(), n * sizeof(double));
  return v;
}

Mat BinReader::mat() {
  const auto r = u64();
  const auto c = u64();
  require(r * c < (1ull << 34), ErrorCode::IoError, "corrupt matrix shape in " + path_);
  Mat m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  raw(m.data(), r * c * sizeof(double));
  return m;
}

}  // namespace neckfol
