#include "bdpca/simgen.hpp"
#include "bdpca/error.hpp"
#include "bdpca/log.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace bdpca {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr double kDof = 3.0;

}  // namespace

const char* distribution_name(Distribution d) noexcept {
  return d == Distribution::Gaussian ? "gaussian" : "t3";
}

Distribution parse_distribution(const std::string& name) {
  if (name == "gaussian" || name == "normal") return Distribution::Gaussian;
  if (name == "t3" || name == "t") return Distribution::StudentT3;
  fail(ErrorCode::InvalidInput, "unknown distribution '" + name + "' (expected gaussian or t3)");
}

std::uint64_t stream_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(stream)) ^ index);
}

SymMatrix PopulationModel::covariance() const {
  return SymMatrix(gamma * lambda.asDiagonal() * gamma.transpose());
}

PopulationModel make_population(Eigen::Index p, Eigen::Index n, Eigen::Index r, Distribution dist,
                                std::uint64_t seed) {
  require(p >= 2 && n >= 1, "make_population: need p >= 2 and n >= 1");
  require(r >= 1 && r < p, "make_population: need 1 <= r < p");

  std::normal_distribution<double> normal;
  std::mt19937_64 pop_rng(stream_seed(seed, Stream::Population));
  Eigen::MatrixXd g(p, p);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(pop_rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd& rmat = qr.matrixQR();
  for (Eigen::Index j = 0; j < p; ++j)
    if (rmat(j, j) < 0) q.col(j) = -q.col(j);

  Eigen::VectorXd lambda(p);
  const double pd = static_cast<double>(p);
  const double base = 1.0 + std::sqrt(pd / static_cast<double>(n));
  for (Eigen::Index j = 0; j < r; ++j) lambda[j] = base + std::pow(pd, 1.0 / (2.0 + static_cast<double>(j)));
  std::mt19937_64 noise_rng(stream_seed(seed, Stream::NoiseEigenvalues));
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  for (Eigen::Index j = r; j < p; ++j) lambda[j] = unif(noise_rng);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return lambda[a] > lambda[b]; });
  if (lambda.tail(p - r).maxCoeff() >= lambda.head(r).minCoeff())
    warn("make_population: noise eigenvalues interleave with the signal; spectrum re-sorted");

  PopulationModel model;
  model.p = p;
  model.n = n;
  model.r = r;
  model.distribution = dist;
  model.seed = seed;
  model.lambda.resize(p);
  model.gamma.resize(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    model.lambda[j] = lambda[order[static_cast<std::size_t>(j)]];
    model.gamma.col(j) = q.col(order[static_cast<std::size_t>(j)]);
  }
  return model;
}

Eigen::MatrixXd sample_data(const PopulationModel& model, Eigen::Index n_samples, std::uint64_t stream_index) {
  require(n_samples >= 1, "sample_data: need at least one sample");
  const Eigen::Index p = model.p;
  // gamma diag(sqrt(lambda)) gamma^T is the symmetric root of Sigma.
  const Eigen::MatrixXd root = sqrt_factor(model.covariance());

  std::mt19937_64 rng(stream_seed(model.seed, Stream::Data, stream_index));
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(p, n_samples);
  if (model.distribution == Distribution::Gaussian) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
    return root * z;
  }

  std::chi_squared_distribution<double> chi2(kDof);
  const double scatter_scale = std::sqrt((kDof - 2.0) / kDof);
  for (Eigen::Index c = 0; c < n_samples; ++c) {
    for (Eigen::Index i = 0; i < p; ++i) z(i, c) = normal(rng);
    const double w = chi2(rng);
    z.col(c) *= scatter_scale / std::sqrt(w / kDof);
  }
  return root * z;
}

std::vector<DataShard> split_shards(const Eigen::MatrixXd& x, std::size_t m) {
  require(m >= 1, "split_shards: need m >= 1");
  const auto n = static_cast<std::size_t>(x.cols());
  require(n >= m, "split_shards: fewer samples than machines");
  const std::size_t block = n / m;
  if (n % m != 0)
    warn("split_shards: n=" + std::to_string(n) + " not divisible by m=" + std::to_string(m) +
         "; last shard absorbs the remainder");
  std::vector<DataShard> shards;
  shards.reserve(m);
  for (std::size_t l = 0; l < m; ++l) {
    const std::size_t begin = l * block;
    const std::size_t count = (l + 1 == m) ? n - begin : block;
    shards.emplace_back(x.middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)),
                        static_cast<std::uint32_t>(l + 1));
  }
  return shards;
}

double rho_similarity(const Eigen::MatrixXd& est, const Eigen::MatrixXd& truth) {
  require(est.rows() == truth.rows(), "rho_similarity: dimension mismatch");
  require(truth.cols() >= 1, "rho_similarity: empty truth basis");
  require(est.cols() >= truth.cols(), "rho_similarity: need k >= r");
  const Eigen::MatrixXd inner = est.transpose() * truth;  // k x r
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(inner).singularValues();
  double s = 0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j) s += std::clamp(sv[j], 0.0, 1.0);
  return s / static_cast<double>(truth.cols());
}

double rho_similarity(const TruncatedEig& est, const Eigen::MatrixXd& truth) {
  return rho_similarity(est.vectors(), truth);
}

}  // namespace bdpca
