#include "mvtrace/matrix_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "mvtrace/error.hpp"

namespace mvtrace {
namespace binio {

namespace {

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw ParseError("unexpected end of binary stream");
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
  }
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
void put_f64(std::ostream& out, double v) { put_le(out, v); }
std::uint32_t get_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
std::uint64_t get_u64(std::istream& in) { return get_le<std::uint64_t>(in); }
double get_f64(std::istream& in) { return get_le<double>(in); }

void expect_magic(std::istream& in, const char (&magic)[5]) {
  char buf[4] = {};
  if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
    throw ParseError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace binio

void write_mvrl(std::ostream& out, const Eigen::MatrixXd& m) {
  out.write("MVRL", 4);
  binio::put_u32(out, kMvrlVersion);
  binio::put_u64(out, static_cast<std::uint64_t>(m.rows()));
  binio::put_u64(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) binio::put_f64(out, m(r, c));
}

namespace {

MvrlHeader read_header(std::istream& in) {
  binio::expect_magic(in, "MVRL");
  MvrlHeader h;
  h.version = binio::get_u32(in);
  if (h.version != kMvrlVersion) {
    throw ParseError("unsupported MVRL version " + std::to_string(h.version));
  }
  h.rows = binio::get_u64(in);
  h.cols = binio::get_u64(in);
  return h;
}

}  // namespace

Eigen::MatrixXd read_mvrl(std::istream& in) {
  const MvrlHeader h = read_header(in);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(h.rows), static_cast<Eigen::Index>(h.cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = binio::get_f64(in);
  return m;
}

void write_mvrl(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  write_mvrl(out, m);
  if (!out) throw IoError("write failed: " + path.string());
}

Eigen::MatrixXd read_mvrl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return read_mvrl(in);
}

MvrlHeader read_mvrl_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  return read_header(in);
}

}  // namespace mvtrace
