#pragma once

// File formats: Matrix Market coordinate (real, general, 1-based) for the
// design matrix, one-number-per-line text for vectors, one-node-id-per-line
// for partitions, and flat key=value manifests. Numeric output uses 17
// significant digits so a store/load round trip is exact.

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hydra/common.hpp"
#include "hydra/partition.hpp"
#include "hydra/sparse_matrix.hpp"

namespace hydra {

namespace detail {

inline std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

inline ParseError parse_error(const std::string& path, std::size_t line, const std::string& msg) {
  return ParseError(path + ":" + std::to_string(line) + ": " + msg);
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open file for writing: " + path);
  return out;
}

inline bool parse_double(const std::string& tok, double& out) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  out = std::strtod(begin, &end);
  return end == begin + tok.size() && !tok.empty();
}

inline bool parse_index(const std::string& tok, std::size_t& out) {
  if (tok.empty() || tok[0] == '-') return false;
  const char* begin = tok.c_str();
  char* end = nullptr;
  unsigned long long v = std::strtoull(begin, &end, 10);
  if (end != begin + tok.size()) return false;
  out = static_cast<std::size_t>(v);
  return true;
}

}  // namespace detail

inline SparseMatrix load_matrix_market(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(in, line)) throw detail::parse_error(path, 1, "empty file");
  ++lineno;
  {
    std::istringstream hs(line);
    std::string banner, object, fmt, field, symmetry;
    hs >> banner >> object >> fmt >> field >> symmetry;
    if (banner != "%%MatrixMarket" || detail::lower(object) != "matrix" ||
        detail::lower(fmt) != "coordinate" || detail::lower(field) != "real" ||
        detail::lower(symmetry) != "general")
      throw detail::parse_error(path, lineno,
                                "expected header '%%MatrixMarket matrix coordinate real general'");
  }

  std::size_t n = 0, d = 0, nnz = 0;
  bool have_size = false;
  std::vector<Triplet> entries;
  std::vector<std::size_t> entry_lines;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line[0] == '%') continue;
    std::istringstream ls(line);
    std::string a, b, c, extra;
    if (!(ls >> a)) continue;  // blank line
    if (!have_size) {
      if (!(ls >> b >> c) || (ls >> extra))
        throw detail::parse_error(path, lineno, "expected size line 'rows cols nnz'");
      if (!detail::parse_index(a, n) || !detail::parse_index(b, d) || !detail::parse_index(c, nnz))
        throw detail::parse_error(path, lineno, "invalid size line");
      have_size = true;
      entries.reserve(nnz);
      continue;
    }
    if (!(ls >> b >> c) || (ls >> extra))
      throw detail::parse_error(path, lineno, "expected entry 'row col value'");
    std::size_t r = 0, j = 0;
    double v = 0.0;
    if (!detail::parse_index(a, r) || !detail::parse_index(b, j))
      throw detail::parse_error(path, lineno, "invalid entry indices");
    if (!detail::parse_double(c, v))
      throw detail::parse_error(path, lineno, "invalid entry value");
    if (r < 1 || r > n || j < 1 || j > d)
      throw detail::parse_error(path, lineno, "entry index out of range");
    if (v == 0.0) throw detail::parse_error(path, lineno, "explicitly stored zero value");
    entries.push_back({r - 1, j - 1, v});
    entry_lines.push_back(lineno);
  }
  if (!have_size) throw detail::parse_error(path, lineno, "missing size line");
  if (entries.size() != nnz)
    throw detail::parse_error(path, lineno,
                              "entry count " + std::to_string(entries.size()) +
                                  " does not match declared nnz " + std::to_string(nnz));
  try {
    return SparseMatrix::from_triplets(n, d, std::move(entries));
  } catch (const ValidationError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void save_matrix_market(const SparseMatrix& a, const std::string& path) {
  std::ofstream out = detail::open_output(path);
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << " " << a.cols() << " " << a.nnz() << "\n";
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const auto rows = a.col_rows(j);
    const auto vals = a.col_values(j);
    for (std::size_t k = 0; k < rows.size(); ++k)
      out << rows[k] + 1 << " " << j + 1 << " " << format_double(vals[k]) << "\n";
  }
  if (!out) throw Error("write failed: " + path);
}

inline std::vector<double> load_vector(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::vector<double> v;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok[0] == '#') continue;
    std::string extra;
    if (ls >> extra) throw detail::parse_error(path, lineno, "expected one number per line");
    double x = 0.0;
    if (!detail::parse_double(tok, x)) throw detail::parse_error(path, lineno, "invalid number");
    v.push_back(x);
  }
  return v;
}

inline void save_vector(std::span<const double> v, const std::string& path) {
  std::ofstream out = detail::open_output(path);
  for (double x : v) out << format_double(x) << "\n";
  if (!out) throw Error("write failed: " + path);
}

// d lines, each the owning node id of one coordinate; node count inferred.
inline Partition load_partition(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  std::vector<std::size_t> owner;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok)) continue;
    if (tok[0] == '#') continue;
    std::size_t id = 0;
    if (!detail::parse_index(tok, id)) throw detail::parse_error(path, lineno, "invalid node id");
    owner.push_back(id);
  }
  try {
    return Partition::from_assignment(std::move(owner));
  } catch (const ValidationError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline void save_partition(const Partition& p, const std::string& path) {
  std::ofstream out = detail::open_output(path);
  for (std::size_t l : p.assignment()) out << l << "\n";
  if (!out) throw Error("write failed: " + path);
}

// Flat key=value text, one pair per line, '#' comments.
using Manifest = std::map<std::string, std::string>;

inline Manifest load_manifest(const std::string& path) {
  std::ifstream in = detail::open_input(path);
  Manifest m;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw detail::parse_error(path, lineno, "expected key=value");
    m[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return m;
}

inline void save_manifest(const Manifest& m, const std::string& path) {
  std::ofstream out = detail::open_output(path);
  for (const auto& [k, v] : m) out << k << "=" << v << "\n";
  if (!out) throw Error("write failed: " + path);
}

inline double manifest_double(const Manifest& m, const std::string& key) {
  const auto it = m.find(key);
  require(it != m.end(), "manifest missing key: " + key);
  double v = 0.0;
  if (!detail::parse_double(it->second, v))
    throw ValidationError("manifest key " + key + " is not a number: " + it->second);
  return v;
}

}  // namespace hydra
