#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include <Eigen/Dense>

namespace mvtrace {

// MVRL dense matrix file:
//   bytes 0..3   magic "MVRL"
//   u32          version (1)
//   u64 rows, u64 cols
//   rows*cols    f64, row-major
// All integers and floats are little-endian.
inline constexpr std::uint32_t kMvrlVersion = 1;

struct MvrlHeader {
  std::uint32_t version = kMvrlVersion;
  std::uint64_t rows = 0;
  std::uint64_t cols = 0;
};

void write_mvrl(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_mvrl(const std::filesystem::path& path);
MvrlHeader read_mvrl_header(const std::filesystem::path& path);

void write_mvrl(std::ostream& out, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_mvrl(std::istream& in);

// Little-endian primitives shared with the MVNN model container.
namespace binio {
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);
void expect_magic(std::istream& in, const char (&magic)[5]);
}  // namespace binio

}  // namespace mvtrace
