// Copyright 2026 The manifoldconc authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MANIFOLDCONC_MATRIX_IO_HPP
#define MANIFOLDCONC_MATRIX_IO_HPP

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "manifoldconc/matcalc.hpp"
#include "manifoldconc/tensor.hpp"

namespace manifoldconc {

// %.17g round-trips IEEE doubles exactly and keeps CSV bodies byte-stable.
inline std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace io_detail {

inline double parse_double(const std::string& tok, const std::string& ctx) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument(ctx + ": cannot parse '" + tok + "' as a number");
  }
  if (!std::isfinite(v)) throw std::invalid_argument(ctx + ": non-finite entry '" + tok + "'");
  return v;
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

inline long parse_header_field(const std::string& line, const std::string& key, const std::string& ctx) {
  const std::string needle = key + "=";
  const std::size_t at = line.find(needle);
  if (at == std::string::npos) throw std::invalid_argument(ctx + ": header missing '" + key + "='");
  return std::stol(line.substr(at + needle.size()));
}

}  // namespace io_detail

// Matrix CSV: first line "# rows=<n> cols=<m>", then one matrix row per line,
// comma-separated decimal floating point.
inline void write_matrix_csv(std::ostream& os, const Matrix& a) {
  os << "# rows=" << a.rows() << " cols=" << a.cols() << "\n";
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j) os << ",";
      os << fmt_g17(a(i, j));
    }
    os << "\n";
  }
}

inline Matrix read_matrix_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("matrix csv: empty input");
  const long rows = io_detail::parse_header_field(line, "rows", "matrix csv");
  const long cols = io_detail::parse_header_field(line, "cols", "matrix csv");
  detail::require(rows >= 1 && cols >= 1, "matrix csv: dimensions must be >= 1");
  Matrix a(rows, cols);
  for (long i = 0; i < rows; ++i) {
    if (!std::getline(is, line)) throw std::invalid_argument("matrix csv: missing row " + std::to_string(i));
    const auto toks = io_detail::split_csv(line);
    if (static_cast<long>(toks.size()) != cols)
      throw std::invalid_argument("matrix csv: row " + std::to_string(i) + " has " +
                                  std::to_string(toks.size()) + " entries, expected " + std::to_string(cols));
    for (long j = 0; j < cols; ++j) a(i, j) = io_detail::parse_double(toks[static_cast<std::size_t>(j)], "matrix csv");
  }
  return a;
}

inline void write_matrix_csv_file(const std::string& path, const Matrix& a) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_matrix_csv(os, a);
}

inline Matrix read_matrix_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("missing matrix file '" + path + "'");
  return read_matrix_csv(is);
}

// Tensor CSV: header "# order=<k> dims=<d1,...,dk>", entries flattened in
// lexicographic order, one line per trailing-dimension block.
inline void write_tensor_csv(std::ostream& os, const DenseTensor& t) {
  os << "# order=" << t.order() << " dims=";
  for (Index m = 0; m < t.order(); ++m) {
    if (m) os << ",";
    os << t.dim(m);
  }
  os << "\n";
  const Index line_len = t.dim(t.order() - 1);
  for (Index f = 0; f < t.size(); ++f) {
    os << fmt_g17(t[f]);
    os << (((f + 1) % line_len == 0) ? "\n" : ",");
  }
}

inline DenseTensor read_tensor_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("tensor csv: empty input");
  const long order = io_detail::parse_header_field(line, "order", "tensor csv");
  detail::require(order >= 1, "tensor csv: order must be >= 1");
  const std::size_t at = line.find("dims=");
  if (at == std::string::npos) throw std::invalid_argument("tensor csv: header missing 'dims='");
  const auto dim_toks = io_detail::split_csv(line.substr(at + 5));
  detail::require(static_cast<long>(dim_toks.size()) == order, "tensor csv: dims count != order");
  std::vector<Index> dims;
  Index total = 1;
  for (const auto& tok : dim_toks) {
    dims.push_back(std::stol(tok));
    total *= dims.back();
  }
  Vector entries(total);
  Index f = 0;
  while (f < total && std::getline(is, line)) {
    if (line.empty()) continue;
    for (const auto& tok : io_detail::split_csv(line)) {
      if (f >= total) throw std::invalid_argument("tensor csv: too many entries");
      entries[f++] = io_detail::parse_double(tok, "tensor csv");
    }
  }
  if (f != total)
    throw std::invalid_argument("tensor csv: expected " + std::to_string(total) + " entries, got " +
                                std::to_string(f));
  return DenseTensor(std::move(dims), std::move(entries));
}

inline DenseTensor read_tensor_csv_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("missing tensor file '" + path + "'");
  return read_tensor_csv(is);
}

}  // namespace manifoldconc

#endif  // MANIFOLDCONC_MATRIX_IO_HPP
