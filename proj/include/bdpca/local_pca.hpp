#ifndef BDPCA_LOCAL_PCA_HPP
#define BDPCA_LOCAL_PCA_HPP

#include "bdpca/linalg.hpp"

#include <cstdint>
#include <string>

namespace bdpca {

// p x n_ell block of samples held by one machine, one sample per column.
class DataShard {
 public:
  DataShard() = default;
  DataShard(Eigen::MatrixXd samples, std::uint32_t machine_id);

  Eigen::Index p() const { return samples_.rows(); }
  Eigen::Index n() const { return samples_.cols(); }
  std::uint32_t machine_id() const { return machine_id_; }
  const Eigen::MatrixXd& samples() const { return samples_; }

 private:
  Eigen::MatrixXd samples_;
  std::uint32_t machine_id_ = 1;
};

// Top-q eigenpairs of a covariance: what a worker ships to the coordinator.
class TruncatedEig {
 public:
  TruncatedEig() = default;
  TruncatedEig(Eigen::VectorXd values, Eigen::MatrixXd vectors);

  Eigen::Index p() const { return vectors_.rows(); }
  Eigen::Index q() const { return vectors_.cols(); }
  const Eigen::VectorXd& values() const { return values_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  // First r pairs. The rank-r local summary is always a prefix of rank q.
  TruncatedEig leading(Eigen::Index r) const;

  // vectors * diag(values) * vectors^T
  SymMatrix reconstruct() const;

 private:
  Eigen::VectorXd values_;
  Eigen::MatrixXd vectors_;
};

// (1/n) X X^T, optionally after subtracting the shard mean.
SymMatrix sample_covariance(const DataShard& shard, bool center = false);

// Leading q eigenpairs of m with negative eigenvalues clamped to zero.
TruncatedEig truncated_eig(const SymMatrix& m, Eigen::Index q);

// sample_covariance followed by truncated_eig; warns when q exceeds n_ell.
TruncatedEig local_summary(const DataShard& shard, Eigen::Index q, bool center = false);

// Shard files: binary "BDPX" v1 (little-endian u32 version, p, n_ell,
// machine_id, then column-major float64 samples) or CSV with one sample per
// row and an optional header. `csv_machine_id` is used for CSV input only.
DataShard read_shard(const std::string& path, std::uint32_t csv_machine_id = 1);
void write_shard(const DataShard& shard, const std::string& path);

}  // namespace bdpca

#endif  // BDPCA_LOCAL_PCA_HPP
