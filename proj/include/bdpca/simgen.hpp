#ifndef BDPCA_SIMGEN_HPP
#define BDPCA_SIMGEN_HPP

#include "bdpca/linalg.hpp"
#include "bdpca/local_pca.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bdpca {

enum class Distribution { Gaussian, StudentT3 };

const char* distribution_name(Distribution d) noexcept;  // "gaussian" / "t3"
Distribution parse_distribution(const std::string& name);

// Independent random streams derived from one user seed. Each stream seeds its
// own mt19937_64 via a SplitMix64 mix of (seed, stream, index).
enum class Stream : std::uint64_t {
  Population = 1,        // planted eigenvectors
  NoiseEigenvalues = 2,  // Uniform(0.5, 1.5) noise spectrum
  Data = 3,              // samples
  Folds = 4,             // cross-validation partition
  Replicate = 5,         // per-replicate base seeds
};

std::uint64_t stream_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

struct PopulationModel {
  Eigen::Index p = 0;
  Eigen::Index n = 0;
  Eigen::Index r = 0;
  Eigen::MatrixXd gamma;   // p x p orthogonal, column j pairs with lambda[j]
  Eigen::VectorXd lambda;  // non-increasing, positive
  Distribution distribution = Distribution::Gaussian;
  std::uint64_t seed = 0;

  // The true leading rank-r basis.
  Eigen::MatrixXd truth() const { return gamma.leftCols(r); }
  SymMatrix covariance() const;
};

// Gamma: QR of an iid N(0,1) matrix with R's diagonal made positive.
// Signal eigenvalues 1 + sqrt(p/n) + p^{1/(1+j)}, j = 1..r; noise
// Uniform(0.5, 1.5). The spectrum is re-sorted descending and gamma's columns
// follow, so truth() is always the top-r eigenspace.
PopulationModel make_population(Eigen::Index p, Eigen::Index n, Eigen::Index r, Distribution dist,
                                std::uint64_t seed);

// p x n_samples draw with covariance Sigma. Gaussian: Sigma^{1/2} Z. t3:
// (Sigma/3)^{1/2} Z / sqrt(W/3) per column, W ~ chi^2_3, so cov = Sigma.
Eigen::MatrixXd sample_data(const PopulationModel& model, Eigen::Index n_samples, std::uint64_t stream_index = 0);
inline Eigen::MatrixXd sample_data(const PopulationModel& model) { return sample_data(model, model.n); }

// Contiguous column blocks of n/m; the last shard absorbs any remainder.
// Machine ids are 1..m.
std::vector<DataShard> split_shards(const Eigen::MatrixXd& x, std::size_t m);

// Mean of the r singular values of est^T truth (est: p x k, truth: p x r, k >= r).
double rho_similarity(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth);
double rho_similarity(const TruncatedEig& est, const Eigen::MatrixXd& truth);

}  // namespace bdpca

#endif  // BDPCA_SIMGEN_HPP
