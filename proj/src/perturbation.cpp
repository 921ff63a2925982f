#include "bdpca/perturbation.hpp"
#include "bdpca/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

namespace bdpca {

namespace {

Eigen::VectorXd aggregate_spectrum(const PerturbationScenario& sc, double d) {
  const Eigen::Index p = sc.p();
  const auto m = static_cast<Eigen::Index>(sc.m());
  Eigen::VectorXd out(p);
  Eigen::VectorXd column(m);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index l = 0; l < m; ++l) column[l] = sc.base_spectra[static_cast<std::size_t>(l)][j];
    if (j == sc.noise_index - 1) column[m - 1] += d;
    out[j] = power_mean(column, sc.beta);
  }
  return out;
}

}  // namespace

void PerturbationScenario::validate() const {
  require(!base_spectra.empty(), "PerturbationScenario: no spectra");
  for (const auto& s : base_spectra) {
    require(s.size() == p(), "PerturbationScenario: spectra lengths differ");
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      require(std::isfinite(s[j]) && s[j] > 0, "PerturbationScenario: spectra must be positive");
      require(j == 0 || s[j] <= s[j - 1], "PerturbationScenario: spectra must be non-increasing");
    }
  }
  require(r >= 1 && r < p(), "PerturbationScenario: need 1 <= r < p");
  require(noise_index > r && noise_index <= p(), "PerturbationScenario: need r < l <= p");
  require(std::isfinite(d_l) && d_l >= 0, "PerturbationScenario: d_l must be non-negative");
  require(std::isfinite(beta), "PerturbationScenario: beta must be finite");
}

double power_mean(const Eigen::Ref<const Eigen::VectorXd>& values, double beta) {
  const auto n = static_cast<double>(values.size());
  if (beta == 0) return std::exp(values.array().log().sum() / n);
  return std::pow(values.array().pow(beta).sum() / n, 1.0 / beta);
}

Eigen::VectorXd unperturbed_beta_spectrum(const PerturbationScenario& sc) {
  sc.validate();
  return aggregate_spectrum(sc, 0.0);
}

Eigen::VectorXd perturbed_beta_spectrum(const PerturbationScenario& sc) {
  sc.validate();
  return aggregate_spectrum(sc, sc.d_l);
}

bool order_condition(const Eigen::VectorXd& spectrum, Eigen::Index r) {
  require(r >= 1 && r < spectrum.size(), "order_condition: need 1 <= r < p");
  return spectrum.head(r).minCoeff() > spectrum.tail(spectrum.size() - r).maxCoeff();
}

bool invariance_check(const PerturbationScenario& sc) {
  return order_condition(perturbed_beta_spectrum(sc), sc.r);
}

double induced_perturbation(const PerturbationScenario& sc) {
  sc.validate();
  const double lambda = sc.base_spectra.back()[sc.noise_index - 1];
  const double b = sc.beta;
  if (b == 0) return (lambda + sc.d_l) / lambda;
  if (b > 0) return std::pow(std::pow(lambda + sc.d_l, b) - std::pow(lambda, b), 1.0 / b);
  const double gap = std::pow(lambda, b) - std::pow(lambda + sc.d_l, b);
  if (gap <= 0) return 0.0;
  return std::pow(gap, 1.0 / b);
}

ToleranceReport tolerance(const PerturbationScenario& sc) {
  sc.validate();
  ToleranceReport rep;
  rep.lambda_bar = aggregate_spectrum(sc, 0.0);
  rep.lambda_beta = aggregate_spectrum(sc, sc.d_l);
  if (!order_condition(rep.lambda_bar, sc.r)) {
    std::ostringstream os;
    os << "tolerance: unperturbed aggregate already violates the ordering (lambda_r = " << rep.lambda_bar[sc.r - 1]
       << ", max noise = " << rep.lambda_bar.tail(sc.p() - sc.r).maxCoeff() << ")";
    fail(ErrorCode::PreconditionError, os.str());
  }

  const double b = sc.beta;
  const double bar_r = rep.lambda_bar[sc.r - 1];
  const double bar_l = rep.lambda_bar[sc.noise_index - 1];
  const auto m = static_cast<double>(sc.m());
  constexpr double inf = std::numeric_limits<double>::infinity();

  if (b > 0)
    rep.tau = std::pow(m * (std::pow(bar_r, b) - std::pow(bar_l, b)), 1.0 / b);
  else if (b == 0)
    rep.tau = std::pow(bar_r / bar_l, m);
  else
    rep.tau = inf;

  rep.perturbed_supremum = inf;
  if (b < 0) {
    // d_l -> inf removes machine m's contribution from the power sum.
    double s = 0;
    for (std::size_t l = 0; l + 1 < sc.m(); ++l) s += std::pow(sc.base_spectra[l][sc.noise_index - 1], b);
    rep.perturbed_supremum = s > 0 ? std::pow(s / m, 1.0 / b) : 0.0;
  }

  rep.lambda_tilde_l = induced_perturbation(sc);
  rep.order_invariant = order_condition(rep.lambda_beta, sc.r);
  return rep;
}

std::vector<Eigen::VectorXd> sample_spectra(std::size_t m, Eigen::Index p, Eigen::Index r, std::uint64_t seed,
                                            double dim, double n) {
  require(m >= 1 && r >= 1 && r < p, "sample_spectra: need m >= 1 and 1 <= r < p");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.9, 1.1);
  std::uniform_real_distribution<double> noise(0.5, 1.5);
  std::vector<Eigen::VectorXd> out;
  out.reserve(m);
  for (std::size_t l = 0; l < m; ++l) {
    Eigen::VectorXd s(p);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (j < r) {
        const double jj = static_cast<double>(j + 1);
        s[j] = (1.0 + std::sqrt(dim / n) + std::pow(dim, 1.0 / (1.0 + jj))) * jitter(rng);
      } else {
        s[j] = noise(rng);
      }
    }
    std::sort(s.begin(), s.end(), std::greater<>());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace bdpca
