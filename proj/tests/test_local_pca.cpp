#include "doctest.h"

#include "bdpca/error.hpp"
#include "bdpca/local_pca.hpp"
#include "support.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace bdpca;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("bdpca_test_" + name)).string();
}

}  // namespace

TEST_CASE("sample_covariance examples") {
  Eigen::MatrixXd x(1, 2);
  x << 1, -1;
  CHECK(sample_covariance(DataShard(x, 1))(0, 0) == 1.0);

  CHECK(sample_covariance(DataShard(Eigen::MatrixXd::Zero(3, 4), 1)).matrix().norm() == 0.0);

  const SymMatrix half = sample_covariance(DataShard(Eigen::MatrixXd::Identity(2, 2), 1));
  CHECK(half(0, 0) == 0.5);
  CHECK(half(1, 1) == 0.5);
  CHECK(half(0, 1) == 0.0);
}

TEST_CASE("centering subtracts the shard mean") {
  Eigen::MatrixXd x(1, 2);
  x << 3, 5;
  CHECK(sample_covariance(DataShard(x, 1), false)(0, 0) == 17.0);
  CHECK(sample_covariance(DataShard(x, 1), true)(0, 0) == 1.0);
}

TEST_CASE("DataShard validation") {
  CHECK_THROWS_AS(DataShard(Eigen::MatrixXd(3, 0), 1), Error);
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 2);
  x(1, 1) = std::nan("");
  CHECK_THROWS_AS(DataShard(x, 1), Error);
}

TEST_CASE("truncated_eig examples") {
  const TruncatedEig d = truncated_eig(SymMatrix::diagonal(Eigen::Vector3d(3, 2, 1)), 2);
  CHECK(d.values() == Eigen::Vector2d(3, 2));
  CHECK(d.vectors() == Eigen::MatrixXd::Identity(3, 2));

  const TruncatedEig id = truncated_eig(SymMatrix::identity(3), 3);
  CHECK((id.values().array() == 1.0).all());
  CHECK((id.vectors() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-15);

  Eigen::Matrix2d a;
  a << 7, 2, 2, 3;
  const TruncatedEig top = truncated_eig(SymMatrix(a), 1);
  const double l1 = oracle::eig2(7, 2, 3).first;
  CHECK(std::abs(top.values()[0] - l1) < 1e-12);
  Eigen::Vector2d v(2, l1 - 7);
  v.normalize();
  CHECK((top.vectors().col(0) - v).norm() < 1e-12);

  CHECK_THROWS_AS(truncated_eig(SymMatrix::identity(3), 0), Error);
  CHECK_THROWS_AS(truncated_eig(SymMatrix::identity(3), 4), Error);
}

TEST_CASE("truncated_eig at full rank reconstructs the input") {
  std::mt19937_64 rng(21);
  const Eigen::MatrixXd a = oracle::random_pd(9, 0.2, 5, rng);
  const TruncatedEig t = truncated_eig(SymMatrix(a), 9);
  CHECK((t.reconstruct().matrix() - a).cwiseAbs().maxCoeff() < 1e-12);
  const TruncatedEig lead = t.leading(4);
  CHECK(lead.values() == t.values().head(4));
  CHECK(lead.vectors() == t.vectors().leftCols(4));
}

TEST_CASE("negative round-off eigenvalues are clamped to zero") {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  const TruncatedEig t = local_summary(DataShard(x, 1), 3);
  CHECK(t.values()[0] == doctest::Approx(14));
  CHECK(t.values()[1] >= 0.0);
  CHECK(t.values()[2] >= 0.0);
}

TEST_CASE("covariance of a short shard has rank at most n") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(20, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  const SymMatrix c = sample_covariance(DataShard(x, 1));
  const oracle::Eig ref = oracle::jacobi(c.matrix());
  CHECK(ref.values.minCoeff() >= -1e-10 * c.matrix().cwiseAbs().maxCoeff());
  CHECK((ref.values.array() > 1e-10).count() <= 6);
}

TEST_CASE("TruncatedEig validation") {
  CHECK_THROWS_AS(TruncatedEig(Eigen::Vector2d(1, 2), Eigen::MatrixXd::Identity(3, 2)), Error);
  CHECK_THROWS_AS(TruncatedEig(Eigen::Vector2d(1, -1), Eigen::MatrixXd::Identity(3, 2)), Error);
  CHECK_THROWS_AS(TruncatedEig(Eigen::Vector3d(3, 2, 1), Eigen::MatrixXd::Identity(2, 3)), Error);
}

TEST_CASE("binary shard round-trip") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(5, 7);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  const std::string path = temp_path("roundtrip.bdpx");
  write_shard(DataShard(x, 42), path);
  const DataShard back = read_shard(path);
  CHECK(back.machine_id() == 42);
  CHECK(back.samples() == x);

  std::ifstream in(path, std::ios::binary);
  char magic[4];
  in.read(magic, 4);
  CHECK(std::string(magic, 4) == "BDPX");
  CHECK(std::filesystem::file_size(path) == 4 + 16 + 5 * 7 * 8);
  std::filesystem::remove(path);
}

TEST_CASE("CSV shards, with and without header") {
  const std::string with = temp_path("with_header.csv");
  {
    std::ofstream out(with);
    out << "x1,x2,x3\n1,2,3\n4,5,6\n";
  }
  const DataShard a = read_shard(with, 7);
  CHECK(a.p() == 3);
  CHECK(a.n() == 2);
  CHECK(a.machine_id() == 7);
  CHECK(a.samples()(2, 1) == 6.0);

  const std::string without = temp_path("no_header.csv");
  {
    std::ofstream out(without);
    out << "1,2,3\r\n4,5,6\r\n";
  }
  CHECK(read_shard(without).samples() == a.samples());

  const std::string ragged = temp_path("ragged.csv");
  {
    std::ofstream out(ragged);
    out << "1,2,3\n4,5\n";
  }
  try {
    read_shard(ragged);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
  for (const auto& p : {with, without, ragged}) std::filesystem::remove(p);
}

TEST_CASE("missing and corrupt shard files") {
  try {
    read_shard(temp_path("does_not_exist.bdpx"));
    FAIL("expected IoError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IoError);
  }
  const std::string path = temp_path("truncated.bdpx");
  {
    std::ofstream out(path, std::ios::binary);
    out << "BDPX\x01";
  }
  try {
    read_shard(path);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ParseError);
  }
  std::filesystem::remove(path);
}
