#include "amr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "amr/error.hpp"
#include "amr/rng.hpp"
#include "csv_util.hpp"

namespace amr {

ObservationSet::ObservationSet(Matrix X, Vector A, Vector Y, std::vector<std::string> covariate_names)
    : X_(std::move(X)), A_(std::move(A)), Y_(std::move(Y)), names_(std::move(covariate_names)) {
  const Index n = Y_.size();
  if (n < 2) throw ValidationError("observation set needs at least 2 units, got " + std::to_string(n));
  if (A_.size() != n || X_.rows() != n) {
    throw ValidationError("X, A and Y must share n: X has " + std::to_string(X_.rows()) + " rows, A " +
                          std::to_string(A_.size()) + ", Y " + std::to_string(n));
  }
  for (Index i = 0; i < n; ++i) {
    if (A_[i] != 0.0 && A_[i] != 1.0) {
      throw ValidationError("treatment at row " + std::to_string(i) + " is not 0 or 1");
    }
    if (!std::isfinite(Y_[i])) throw ValidationError("outcome at row " + std::to_string(i) + " is not finite");
  }
  if (!X_.allFinite()) throw ValidationError("covariate matrix contains non-finite entries");
  if (names_.empty()) {
    for (Index j = 0; j < X_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
  } else if (static_cast<Index>(names_.size()) != X_.cols()) {
    throw ValidationError("covariate name count does not match X columns");
  }
}

Index ObservationSet::treated_count() const {
  return static_cast<Index>(A_.sum() + 0.5);
}

ObservationSet ObservationSet::subset(const IndexList& rows) const {
  return ObservationSet(take_rows(X_, rows), take(A_, rows), take(Y_, rows), names_);
}

ObservationSet ObservationSet::with_outcome(Vector Y) const {
  return ObservationSet(X_, A_, std::move(Y), names_);
}

std::vector<std::string> split_column_list(const std::string& list) {
  std::vector<std::string> out;
  for (auto& field : detail::split_csv_line(list)) {
    auto s = detail::trim(field);
    if (!s.empty()) out.emplace_back(s);
  }
  return out;
}

namespace {

double parse_cell(std::string_view cell, std::size_t row, const std::string& column) {
  auto s = detail::trim(cell);
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError("cannot parse row " + std::to_string(row) + ", column '" + column + "': '" +
                     std::string(cell) + "'");
  }
  return v;
}

}  // namespace

ObservationSet load_observations(const std::filesystem::path& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing header row");
  detail::strip_line_end(line);
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // UTF-8 BOM
  std::vector<std::string> header;
  for (auto& h : detail::split_csv_line(line)) header.emplace_back(detail::trim(h));

  std::unordered_map<std::string, std::size_t> where;
  for (std::size_t j = 0; j < header.size(); ++j) where.emplace(header[j], j);
  auto require = [&](const std::string& name) {
    auto it = where.find(name);
    if (it == where.end()) throw SchemaError(path.string() + ": no column named '" + name + "'");
    return it->second;
  };
  const std::size_t y_idx = require(schema.y_col);
  const std::size_t a_idx = require(schema.a_col);

  std::vector<std::size_t> x_idx;
  for (const auto& entry : schema.x_cols) {
    if (!entry.empty() && entry.back() == '*') {
      const std::string prefix = entry.substr(0, entry.size() - 1);
      bool any = false;
      for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == y_idx || j == a_idx) continue;
        if (header[j].compare(0, prefix.size(), prefix) == 0 &&
            std::find(x_idx.begin(), x_idx.end(), j) == x_idx.end()) {
          x_idx.push_back(j);
          any = true;
        }
      }
      if (!any) throw SchemaError(path.string() + ": no column matches '" + entry + "'");
    } else {
      x_idx.push_back(require(entry));
    }
  }
  if (x_idx.empty()) throw SchemaError(path.string() + ": schema selects no covariate columns");

  std::vector<double> ys, as, xs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    detail::strip_line_end(line);
    ++row;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                       " fields, header has " + std::to_string(header.size()));
    }
    ys.push_back(parse_cell(cells[y_idx], row, header[y_idx]));
    const double a = parse_cell(cells[a_idx], row, header[a_idx]);
    if (a != 0.0 && a != 1.0) {
      throw ValidationError("row " + std::to_string(row) + ", column '" + header[a_idx] +
                            "': treatment must be 0 or 1");
    }
    as.push_back(a);
    for (auto j : x_idx) xs.push_back(parse_cell(cells[j], row, header[j]));
  }

  const Index n = static_cast<Index>(ys.size());
  const Index p = static_cast<Index>(x_idx.size());
  Matrix X(n, p);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < p; ++j) X(i, j) = xs[static_cast<std::size_t>(i * p + j)];
  std::vector<std::string> names;
  for (auto j : x_idx) names.push_back(header[j]);
  return ObservationSet(std::move(X), Eigen::Map<Vector>(as.data(), n), Eigen::Map<Vector>(ys.data(), n),
                        std::move(names));
}

void write_observations(const std::filesystem::path& path, const ObservationSet& data, const std::string& y_col,
                        const std::string& a_col) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << y_col << ',' << a_col;
  for (const auto& name : data.covariate_names()) out << ',' << name;
  out << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    out << detail::format_double(data.Y()[i]) << ',' << (data.A()[i] == 1.0 ? '1' : '0');
    for (Index j = 0; j < data.p(); ++j) out << ',' << detail::format_double(data.X()(i, j));
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

IndexList FoldAssignment::members(int k) const {
  IndexList out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] == k) out.push_back(static_cast<Index>(i));
  return out;
}

IndexList FoldAssignment::complement(int k) const {
  IndexList out;
  for (std::size_t i = 0; i < fold_of.size(); ++i)
    if (fold_of[i] != k) out.push_back(static_cast<Index>(i));
  return out;
}

std::vector<Index> FoldAssignment::sizes() const {
  std::vector<Index> s(static_cast<std::size_t>(K), 0);
  for (int f : fold_of) ++s[static_cast<std::size_t>(f)];
  return s;
}

FoldAssignment make_folds(Index n, int K, std::uint64_t seed) {
  if (K < 2 || K > n) {
    throw ArgumentError("fold count must satisfy 2 <= K <= n (K=" + std::to_string(K) + ", n=" + std::to_string(n) +
                        ")");
  }
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Engine eng(seed);
  std::shuffle(perm.begin(), perm.end(), eng);

  FoldAssignment folds;
  folds.K = K;
  folds.seed = seed;
  folds.fold_of.assign(static_cast<std::size_t>(n), 0);
  const Index base = n / K;
  const Index extra = n % K;
  Index pos = 0;
  for (int k = 0; k < K; ++k) {
    const Index size = base + (k < extra ? 1 : 0);
    for (Index j = 0; j < size; ++j) folds.fold_of[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos++)])] = k;
  }
  return folds;
}

}  // namespace amr
