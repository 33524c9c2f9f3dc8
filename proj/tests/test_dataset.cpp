#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include "amr/dataset.hpp"
#include "amr/error.hpp"
#include "test_util.hpp"

using namespace amr;
using amr::test::TempDir;

namespace {

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("load_observations parses a two-row file") {
  TempDir dir("ds");
  write_text(dir / "a.csv", "y,a,x1\n1.5,1,0.2\n0.5,0,-0.1\n");
  const ObservationSet d = load_observations(dir / "a.csv");
  CHECK(d.n() == 2);
  CHECK(d.p() == 1);
  CHECK(d.A()[0] == 1.0);
  CHECK(d.A()[1] == 0.0);
  CHECK(d.Y()[0] == 1.5);
  CHECK(d.X()(1, 0) == -0.1);
  CHECK(d.covariate_names() == std::vector<std::string>{"x1"});
}

TEST_CASE("load_observations rejects bad treatment and missing columns") {
  TempDir dir("ds");
  write_text(dir / "bad.csv", "y,a,x1\n1.5,1,0.2\n0.5,2,-0.1\n");
  CHECK_THROWS_AS(load_observations(dir / "bad.csv"), ValidationError);
  write_text(dir / "nan.csv", "y,a,x1\n1.5,1,abc\n0.5,0,-0.1\n");
  CHECK_THROWS_AS(load_observations(dir / "nan.csv"), ParseError);
  write_text(dir / "cols.csv", "y,a,z\n1.5,1,0.2\n0.5,0,-0.1\n");
  CHECK_THROWS_AS(load_observations(dir / "cols.csv"), SchemaError);
  CHECK_THROWS_AS(load_observations(dir / "missing.csv"), IoError);
}

TEST_CASE("explicit schema selects named columns in order") {
  TempDir dir("ds");
  write_text(dir / "s.csv", "out,w,b,c\n1,1,2,3\n2,0,4,5\n");
  const ObservationSet d = load_observations(dir / "s.csv", ColumnSchema{"out", "w", split_column_list("c,b")});
  CHECK(d.X()(0, 0) == 3.0);
  CHECK(d.X()(0, 1) == 2.0);
}

TEST_CASE("wide file with 5985 rows and 61 covariates") {
  TempDir dir("ds");
  const Index n = 5985, p = 61;
  std::mt19937_64 eng(3);
  std::normal_distribution<double> z;
  Matrix X(n, p);
  for (Index i = 0; i < X.size(); ++i) X.data()[i] = z(eng);
  Vector A(n), Y(n);
  for (Index i = 0; i < n; ++i) {
    A[i] = double(i % 2);
    Y[i] = z(eng);
  }
  write_observations(dir / "wide.csv", ObservationSet(X, A, Y));
  const ObservationSet d = load_observations(dir / "wide.csv");
  CHECK(d.n() == n);
  CHECK(d.p() == p);
}

TEST_CASE("CSV round trip preserves values") {
  TempDir dir("ds");
  std::mt19937_64 eng(11);
  std::normal_distribution<double> z(0.0, 1e3);
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 20 + trial, p = 1 + trial;
    Matrix X(n, p);
    for (Index i = 0; i < X.size(); ++i) X.data()[i] = z(eng) * std::pow(10.0, trial * 40 - 80);
    Vector A(n), Y(n);
    for (Index i = 0; i < n; ++i) {
      A[i] = double((i * 7 + trial) % 3 == 0);
      Y[i] = z(eng) / 3.0;
    }
    const ObservationSet original(X, A, Y);
    write_observations(dir / "rt.csv", original);
    const ObservationSet back = load_observations(dir / "rt.csv");
    REQUIRE(back.n() == n);
    REQUIRE(back.p() == p);
    CHECK(back.A() == original.A());
    for (Index i = 0; i < n; ++i) CHECK(amr::test::rel_diff(back.Y()[i], Y[i]) <= 1e-12 * std::max(1.0, std::abs(Y[i])));
    for (Index i = 0; i < X.size(); ++i) CHECK(back.X().data()[i] == X.data()[i]);
  }
}

TEST_CASE("ObservationSet invariants") {
  CHECK_THROWS_AS(ObservationSet(Matrix::Zero(1, 1), Vector::Ones(1), Vector::Zero(1)), ValidationError);
  CHECK_THROWS_AS(ObservationSet(Matrix::Zero(3, 1), Vector::Ones(2), Vector::Zero(3)), ValidationError);
  Vector Y = Vector::Zero(2);
  Y[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(ObservationSet(Matrix::Zero(2, 1), Vector::Ones(2), Y), ValidationError);
}

TEST_CASE("make_folds examples") {
  const FoldAssignment f = make_folds(10, 5, 7);
  std::vector<Index> sizes = f.sizes();
  CHECK(sizes == std::vector<Index>(5, 2));
  std::set<Index> all;
  for (int k = 0; k < 5; ++k)
    for (Index i : f.members(k)) CHECK(all.insert(i).second);
  CHECK(all.size() == 10);
  CHECK(make_folds(10, 5, 7).fold_of == f.fold_of);

  std::vector<Index> s = make_folds(7, 3, 1).sizes();
  std::sort(s.begin(), s.end(), std::greater<>());
  CHECK(s == std::vector<Index>{3, 2, 2});

  CHECK_THROWS_AS(make_folds(3, 4, 0), ArgumentError);
  CHECK_THROWS_AS(make_folds(5, 1, 0), ArgumentError);
}

TEST_CASE("fold size multiset property") {
  for (Index n = 2; n <= 60; n += 3) {
    for (int K = 2; K <= std::min<Index>(n, 9); ++K) {
      const FoldAssignment f = make_folds(n, K, static_cast<std::uint64_t>(n * 31 + K));
      std::vector<Index> sizes = f.sizes();
      std::sort(sizes.begin(), sizes.end(), std::greater<>());
      std::vector<Index> expected;
      for (int k = 0; k < K; ++k) expected.push_back(n / K + (k < n % K ? 1 : 0));
      CHECK(sizes == expected);
      for (int k = 0; k < K; ++k) CHECK(f.members(k).size() + f.complement(k).size() == static_cast<std::size_t>(n));
    }
  }
}
