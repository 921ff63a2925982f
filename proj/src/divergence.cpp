#include "bdpca/divergence.hpp"
#include "bdpca/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace bdpca {

namespace {

double scale_of(const Eigen::VectorXd& v) { return std::max(1.0, v.cwiseAbs().maxCoeff()); }

// Returns the spectrum ready for t^a (or ln when `log_slot`). Slots needing an
// inverse or a logarithm demand every eigenvalue >= floor.
Eigen::VectorXd guarded(const Eigen::VectorXd& values, double exponent, bool log_slot, double floor,
                        const char* slot) {
  Eigen::VectorXd out = values;
  const bool strict = log_slot || exponent < 0;
  const double slack = kPsdSlack * scale_of(values);
  for (Eigen::Index j = 0; j < out.size(); ++j) {
    double& v = out[j];
    if (strict && v < floor) {
      std::ostringstream os;
      os << "divergence: " << slot << " needs a positive-definite argument (eigenvalue " << v << ")";
      fail(ErrorCode::DomainError, os.str());
    }
    if (!strict && v < 0) {
      if (v <= -slack) {
        std::ostringstream os;
        os << "divergence: " << slot << " is not positive semidefinite (eigenvalue " << v << ")";
        fail(ErrorCode::DomainError, os.str());
      }
      v = 0.0;
    }
  }
  return out;
}

double pow_sum(const Eigen::VectorXd& v, double a) {
  double s = 0;
  for (Eigen::Index j = 0; j < v.size(); ++j) s += std::pow(v[j], a);
  return s;
}

// diag(V^T A V), i.e. v_j^T A v_j for each eigenvector of the second slot.
Eigen::VectorXd quadratic_forms(const Eigen::MatrixXd& vectors, const Eigen::MatrixXd& a) {
  return (vectors.array() * (a * vectors).array()).colwise().sum().transpose();
}

}  // namespace

DivergenceKind DivergenceKind::beta(double b) {
  require(std::isfinite(b) && b != 0.0 && b != -1.0,
          "DivergenceKind::beta: beta must be finite and not 0 or -1 (use the named limits)");
  return DivergenceKind(Tag::Beta, b);
}

DivergenceKind DivergenceKind::for_beta(double b) {
  if (b == 0.0) return von_neumann();
  if (b == -1.0) return log_det();
  return beta(b);
}

double generating_value(const SymMatrix& m, DivergenceKind kind, double floor) {
  const EigenSystem es = eig_sym(m);
  const auto p = static_cast<double>(m.dim());
  switch (kind.tag()) {
    case DivergenceKind::Tag::Beta: {
      const double b = kind.beta_value();
      const Eigen::VectorXd v = guarded(es.values, b + 1, false, floor, "M");
      return (pow_sum(v, b + 1) - (b + 1) * v.sum() + b * p) / (b * (b + 1));
    }
    case DivergenceKind::Tag::VonNeumann: {
      const Eigen::VectorXd v = guarded(es.values, 1, true, floor, "M");
      return (v.array() * v.array().log() - v.array()).sum() + p;
    }
    case DivergenceKind::Tag::LogDet: {
      const Eigen::VectorXd v = guarded(es.values, -1, true, floor, "M");
      return -v.array().log().sum() + v.sum() - p;
    }
  }
  return 0;
}

SymMatrix generating_gradient(const SymMatrix& m, DivergenceKind kind, double floor) {
  EigenSystem es = eig_sym(m);
  switch (kind.tag()) {
    case DivergenceKind::Tag::Beta: {
      const double b = kind.beta_value();
      es.values = guarded(es.values, b, false, floor, "M");
      return matrix_function(es, [b](double t) { return (std::pow(t, b) - 1.0) / b; });
    }
    case DivergenceKind::Tag::VonNeumann:
      es.values = guarded(es.values, 1, true, floor, "M");
      return matrix_function(es, [](double t) { return std::log(t); });
    case DivergenceKind::Tag::LogDet:
      es.values = guarded(es.values, -1, true, floor, "M");
      return matrix_function(es, [](double t) { return 1.0 - 1.0 / t; });
  }
  return m;
}

double divergence(const SymMatrix& m1, const SymMatrix& m2, DivergenceKind kind, double floor) {
  require(m1.dim() == m2.dim(), "divergence: dimension mismatch");
  const EigenSystem e1 = eig_sym(m1);
  const EigenSystem e2 = eig_sym(m2);
  const auto p = static_cast<double>(m1.dim());
  const Eigen::VectorXd forms = quadratic_forms(e2.vectors, m1.matrix());

  switch (kind.tag()) {
    case DivergenceKind::Tag::Beta: {
      const double b = kind.beta_value();
      const Eigen::VectorXd v1 = guarded(e1.values, b + 1, false, floor, "M1");
      const Eigen::VectorXd v2 = guarded(e2.values, std::min(b, b + 1), false, floor, "M2");
      // tr(M2^b M1) = sum_j lambda2_j^b (v_j^T M1 v_j)
      double cross = 0;
      for (Eigen::Index j = 0; j < v2.size(); ++j) cross += std::pow(v2[j], b) * forms[j];
      return (pow_sum(v1, b + 1) + b * pow_sum(v2, b + 1) - (b + 1) * cross) / (b * (b + 1));
    }
    case DivergenceKind::Tag::VonNeumann: {
      const Eigen::VectorXd v1 = guarded(e1.values, 1, true, floor, "M1");
      const Eigen::VectorXd v2 = guarded(e2.values, 1, true, floor, "M2");
      // tr(M1 (ln M1 - ln M2) - M1 + M2)
      const double self = (v1.array() * v1.array().log()).sum();
      const double cross = (v2.array().log() * forms.array()).sum();
      return self - cross - v1.sum() + v2.sum();
    }
    case DivergenceKind::Tag::LogDet: {
      const Eigen::VectorXd v1 = guarded(e1.values, -1, true, floor, "M1");
      const Eigen::VectorXd v2 = guarded(e2.values, -1, true, floor, "M2");
      // tr(M1 M2^{-1}) - (ln det M1 - ln det M2) - p
      const double trace_ratio = (forms.array() / v2.array()).sum();
      return trace_ratio - (v1.array().log().sum() - v2.array().log().sum()) - p;
    }
  }
  return 0;
}

double mean_divergence(const SymMatrix& m, std::span<const SymMatrix> targets, DivergenceKind kind, double floor) {
  require(!targets.empty(), "mean_divergence: no targets");
  double total = 0;
  for (const auto& t : targets) total += divergence(m, t, kind, floor);
  return total / static_cast<double>(targets.size());
}

MinimizerReport verify_minimizer(std::span<const SymMatrix> inputs, const BetaConfig& cfg, int trials,
                                 double noise_scale, std::uint64_t seed) {
  require(trials >= 1, "verify_minimizer: trials must be >= 1");
  require(noise_scale > 0, "verify_minimizer: noise_scale must be positive");
  require(!inputs.empty(), "verify_minimizer: no inputs");
  cfg.validate();

  const DivergenceKind kind = DivergenceKind::for_beta(cfg.beta);
  const Eigen::Index p = inputs.front().dim();
  std::vector<SymMatrix> targets;
  targets.reserve(inputs.size());
  for (const auto& m : inputs) {
    if (cfg.beta < 0)
      targets.emplace_back(m.matrix() + cfg.delta * Eigen::MatrixXd::Identity(p, p));
    else
      targets.push_back(m);
  }

  MinimizerReport rep;
  rep.center = beta_mean(inputs, cfg);
  rep.objective_at_center = mean_divergence(rep.center, targets, kind, cfg.eigen_floor);
  rep.min_margin = std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  for (int t = 0; t < trials; ++t) {
    Eigen::MatrixXd e(p, p);
    for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = normal(rng);
    e = (e + e.transpose()).eval();
    e *= noise_scale / e.norm();
    const SymMatrix candidate(rep.center.matrix() + e);
    double j = 0;
    try {
      j = mean_divergence(candidate, targets, kind, cfg.eigen_floor);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::DomainError) throw;
      ++rep.out_of_domain;
      continue;
    }
    const double margin = j - rep.objective_at_center;
    rep.margins.push_back(margin);
    rep.min_margin = std::min(rep.min_margin, margin);
  }
  if (rep.margins.empty()) rep.min_margin = 0;
  return rep;
}

}  // namespace bdpca
