#include "bdpca/aggregation.hpp"
#include "bdpca/error.hpp"
#include "bdpca/log.hpp"

#include <cmath>
#include <sstream>

namespace bdpca {

namespace {

constexpr double kTieRelTol = 1e-12;

void check_inputs(std::span<const SymMatrix> inputs) {
  require(!inputs.empty(), "mean of an empty list");
  for (const auto& m : inputs) require(m.dim() == inputs.front().dim(), "mean: dimension mismatch");
}

std::vector<double> normalized_weights(std::size_t m, std::span<const double> weights) {
  if (weights.empty()) return std::vector<double>(m, 1.0 / static_cast<double>(m));
  require(weights.size() == m, "aggregate: one weight per summary required");
  double total = 0.0;
  for (double w : weights) {
    require(std::isfinite(w) && w > 0.0, "aggregate: weights must be positive");
    total += w;
  }
  std::vector<double> out(weights.begin(), weights.end());
  for (double& w : out) w /= total;
  return out;
}

AggregateResult finish(SymMatrix sigma, Eigen::Index r, Branch branch) {
  const EigenSystem es = eig_sym(sigma);
  AggregateResult res;
  res.branch = branch;
  res.leading = TruncatedEig(es.values.head(r).cwiseMax(0.0), es.vectors.leftCols(r));
  if (r < es.values.size()) {
    const double scale = std::max(1.0, std::abs(es.values[0]));
    if (es.values[r - 1] - es.values[r] <= kTieRelTol * scale) {
      res.tie_warning = true;
      std::ostringstream os;
      os << "eigenvalues " << r << " and " << r + 1 << " of the aggregate coincide (" << es.values[r - 1]
         << "); leading subspace is not unique";
      warn(os.str());
    }
  }
  res.sigma_beta = std::move(sigma);
  return res;
}

}  // namespace

void BetaConfig::validate() const {
  require(std::isfinite(beta), "BetaConfig: beta must be finite");
  require(delta > 0.0, "BetaConfig: delta must be positive");
  require(eigen_floor > 0.0, "BetaConfig: eigen_floor must be positive");
}

const char* branch_name(Branch b) noexcept {
  switch (b) {
    case Branch::Positive: return "positive";
    case Branch::LimitZero: return "limit_zero";
    case Branch::Negative: return "negative";
    case Branch::Projection: return "projection";
  }
  return "unknown";
}

Branch branch_for(double beta) noexcept {
  if (beta > 0) return Branch::Positive;
  if (beta < 0) return Branch::Negative;
  return Branch::LimitZero;
}

SymMatrix phi_mean(std::span<const SymMatrix> inputs, const ScalarMap& phi, const ScalarMap& phi_inverse) {
  check_inputs(inputs);
  const Eigen::Index p = inputs.front().dim();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
  for (const auto& m : inputs) acc += matrix_function(m, phi).matrix();
  acc /= static_cast<double>(inputs.size());
  return matrix_function(SymMatrix(acc), phi_inverse);
}

SymMatrix beta_mean(std::span<const SymMatrix> inputs, const BetaConfig& cfg) {
  check_inputs(inputs);
  cfg.validate();
  const Eigen::Index p = inputs.front().dim();
  const double inv_m = 1.0 / static_cast<double>(inputs.size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);

  if (cfg.beta == 0.0) {
    for (const auto& m : inputs) acc += matrix_log(m, cfg.eigen_floor).matrix();
    return matrix_exp(SymMatrix(acc * inv_m));
  }
  for (const auto& m : inputs) {
    if (cfg.beta < 0) {
      const SymMatrix shifted(m.matrix() + cfg.delta * Eigen::MatrixXd::Identity(p, p));
      acc += matrix_power(shifted, cfg.beta, cfg.eigen_floor).matrix();
    } else {
      acc += matrix_power(m, cfg.beta, cfg.eigen_floor).matrix();
    }
  }
  return matrix_power(SymMatrix(acc * inv_m), 1.0 / cfg.beta, cfg.eigen_floor);
}

AggregateResult beta_aggregate(std::span<const TruncatedEig> summaries, const BetaConfig& cfg, Eigen::Index r,
                               std::span<const double> weights) {
  cfg.validate();
  require(!summaries.empty(), "beta_aggregate: no summaries");
  const Eigen::Index p = summaries.front().p();
  const Eigen::Index q = summaries.front().q();
  for (const auto& s : summaries)
    require(s.p() == p && s.q() == q, "beta_aggregate: summaries disagree on p or q");
  require(r >= 1 && r <= q, "beta_aggregate: r must lie in [1, q]");
  const std::vector<double> w = normalized_weights(summaries.size(), weights);
  const double beta = cfg.beta;

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < summaries.size(); ++i) {
    const auto& s = summaries[i];
    const Eigen::MatrixXd& g = s.vectors();
    Eigen::VectorXd mapped(q);
    if (beta > 0) {
      // Gamma_q Lambda_q^beta Gamma_q^T
      for (Eigen::Index j = 0; j < q; ++j) mapped[j] = std::pow(s.values()[j], beta);
      acc.noalias() += w[i] * (g * mapped.asDiagonal() * g.transpose());
    } else if (beta == 0) {
      // Gamma_q ln(Lambda_q) Gamma_q^T; zero outside the span.
      for (Eigen::Index j = 0; j < q; ++j) {
        const double lambda = std::max(s.values()[j], cfg.eigen_floor);
        if (!(lambda > 0)) fail(ErrorCode::DomainError, "beta_aggregate: non-positive eigenvalue in log branch");
        mapped[j] = std::log(lambda);
      }
      acc.noalias() += w[i] * (g * mapped.asDiagonal() * g.transpose());
    } else {
      // (Gamma Lambda Gamma^T + delta I)^beta
      //   = Gamma (Lambda + delta)^beta Gamma^T + delta^beta (I - Gamma Gamma^T)
      const double delta_pow = std::pow(cfg.delta, beta);
      for (Eigen::Index j = 0; j < q; ++j) mapped[j] = std::pow(s.values()[j] + cfg.delta, beta) - delta_pow;
      acc.noalias() += w[i] * (g * mapped.asDiagonal() * g.transpose());
      acc.diagonal().array() += w[i] * delta_pow;
    }
  }

  const SymMatrix inner(acc);
  if (beta == 0) return finish(matrix_exp(inner), r, Branch::LimitZero);
  return finish(matrix_power(inner, 1.0 / beta, cfg.eigen_floor), r, branch_for(beta));
}

AggregateResult fan_aggregate(std::span<const TruncatedEig> summaries, Eigen::Index r) {
  require(!summaries.empty(), "fan_aggregate: no summaries");
  const Eigen::Index p = summaries.front().p();
  for (const auto& s : summaries) {
    require(s.p() == p, "fan_aggregate: summaries disagree on p");
    require(r >= 1 && r <= s.q(), "fan_aggregate: r must not exceed the summary rank");
  }
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
  for (const auto& s : summaries) {
    const auto g = s.vectors().leftCols(r);
    acc.noalias() += g * g.transpose();
  }
  acc /= static_cast<double>(summaries.size());
  return finish(SymMatrix(acc), r, Branch::Projection);
}

}  // namespace bdpca
