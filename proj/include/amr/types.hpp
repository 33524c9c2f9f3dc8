#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace amr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

/// Rows of `x` selected by `rows`, in order.
inline Vector take(const Vector& x, const IndexList& rows) {
  Vector out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = x[rows[i]];
  return out;
}

inline Matrix take_rows(const Matrix& x, const IndexList& rows) {
  Matrix out(static_cast<Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
  return out;
}

/// Writes `values` into `dest` at positions `rows`.
inline void scatter(Vector& dest, const IndexList& rows, const Vector& values) {
  for (std::size_t i = 0; i < rows.size(); ++i) dest[rows[i]] = values[static_cast<Index>(i)];
}

}  // namespace amr
