#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "amr/types.hpp"

namespace amr {

/// Covariates X (n x p), binary treatment A and outcome Y for n units.
///
/// Immutable once constructed; the constructor enforces the invariants
/// (A in {0,1}, shared n >= 2, all of X and Y finite).
class ObservationSet {
 public:
  ObservationSet(Matrix X, Vector A, Vector Y, std::vector<std::string> covariate_names = {});

  const Matrix& X() const { return X_; }
  const Vector& A() const { return A_; }
  const Vector& Y() const { return Y_; }
  const std::vector<std::string>& covariate_names() const { return names_; }

  Index n() const { return Y_.size(); }
  Index p() const { return X_.cols(); }
  Index treated_count() const;

  /// Copy of the units listed in `rows`.
  ObservationSet subset(const IndexList& rows) const;

  /// Same X and A with a replaced outcome vector.
  ObservationSet with_outcome(Vector Y) const;

 private:
  Matrix X_;
  Vector A_;
  Vector Y_;
  std::vector<std::string> names_;
};

/// Column mapping for CSV ingestion. Each covariate entry is either an exact
/// column name or a prefix glob ending in '*' ("x*" selects x1, x2, ...).
struct ColumnSchema {
  std::string y_col = "y";
  std::string a_col = "a";
  std::vector<std::string> x_cols = {"x*"};
};

/// Parses a comma list such as "x1,x2" or "x*" into schema covariate entries.
std::vector<std::string> split_column_list(const std::string& list);

ObservationSet load_observations(const std::filesystem::path& path, const ColumnSchema& schema = {});

/// Writes y, a, then covariates using shortest round-trip decimal text.
void write_observations(const std::filesystem::path& path, const ObservationSet& data,
                        const std::string& y_col = "y", const std::string& a_col = "a");

/// Seeded K-fold partition of 0..n-1 with fold sizes differing by at most one.
struct FoldAssignment {
  std::vector<int> fold_of;
  int K = 0;
  std::uint64_t seed = 0;

  Index n() const { return static_cast<Index>(fold_of.size()); }
  IndexList members(int k) const;
  IndexList complement(int k) const;
  std::vector<Index> sizes() const;
};

/// Permute-then-block: a seeded uniform permutation cut into K contiguous
/// blocks, the first (n mod K) of size ceil(n/K).
FoldAssignment make_folds(Index n, int K, std::uint64_t seed);

}  // namespace amr
