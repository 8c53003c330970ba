#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wmmd/error.hpp"
#include "wmmd/measures.hpp"

namespace wmmd {

inline constexpr char kBinaryMagic[5] = {'W', 'M', 'M', 'D', '1'};

/// Shortest decimal text that reads back to the same double (17 significant digits).
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline bool parse_double(const std::string& text, double& out) {
  std::size_t b = text.find_first_not_of(" \t\r");
  std::size_t e = text.find_last_not_of(" \t\r");
  if (b == std::string::npos) return false;
  const std::string t = text.substr(b, e - b + 1);
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::uint64_t read_u64_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

}  // namespace detail

/// CSV, one sample per row. A first row that does not parse as numbers is a header.
inline Matrix parse_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    std::vector<double> values(cells.size());
    bool numeric = true;
    for (std::size_t k = 0; k < cells.size(); ++k)
      if (!detail::parse_double(cells[k], values[k])) numeric = false;
    if (!numeric) {
      require(first, Errc::Parse, "non-numeric value on line " + std::to_string(lineno));
      first = false;
      continue;
    }
    first = false;
    if (!rows.empty())
      require(values.size() == rows.front().size(), Errc::RaggedDimensions,
              "line " + std::to_string(lineno) + " has " + std::to_string(values.size()) + " columns");
    rows.push_back(std::move(values));
  }
  require(!rows.empty(), Errc::EmptyInput, "dataset has no rows");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
  return m;
}

inline Matrix parse_binary(const std::string& bytes) {
  require(bytes.size() >= 21 && std::memcmp(bytes.data(), kBinaryMagic, 5) == 0, Errc::Parse, "missing WMMD1 header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint64_t n = detail::read_u64_le(p + 5);
  const std::uint64_t d = detail::read_u64_le(p + 13);
  require(n >= 1 && d >= 1, Errc::EmptyInput, "binary dataset is empty");
  require(bytes.size() == 21 + 8 * n * d, Errc::Parse, "binary dataset size does not match its header");
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::uint64_t i = 0; i < n * d; ++i) {
    const std::uint64_t bits = detail::read_u64_le(p + 21 + 8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    m.data()[i] = v;
  }
  return m;
}

/// Reads a dataset file, CSV or WMMD1 binary (chosen by the magic bytes).
inline Matrix read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::Io, "cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() >= 5 && std::memcmp(bytes.data(), kBinaryMagic, 5) == 0) return parse_binary(bytes);
  std::istringstream is(bytes);
  return parse_csv(is);
}

inline void write_csv(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      if (k) os << ',';
      os << format_double(m(i, k));
    }
    os << '\n';
  }
}

inline void write_binary(std::ostream& os, const Matrix& m) {
  os.write(kBinaryMagic, 5);
  detail::write_u64_le(os, static_cast<std::uint64_t>(m.rows()));
  detail::write_u64_le(os, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, m.data() + i, 8);
    detail::write_u64_le(os, bits);
  }
}

inline void write_dataset(const std::string& path, const Matrix& m, bool binary = false) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::Io, "cannot write " + path);
  if (binary)
    write_binary(out, m);
  else
    write_csv(out, m);
  require(static_cast<bool>(out), Errc::Io, "write failed for " + path);
}

}  // namespace wmmd
