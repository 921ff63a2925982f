#ifndef BDPCA_PERTURBATION_HPP
#define BDPCA_PERTURBATION_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace bdpca {

// Commuting single-perturbation model: every machine shares the eigenvectors,
// machine m (the last spectrum) has its l-th eigenvalue raised by d_l.
struct PerturbationScenario {
  std::vector<Eigen::VectorXd> base_spectra;  // m spectra, positive, non-increasing
  Eigen::Index r = 1;                         // target rank
  Eigen::Index noise_index = 2;               // l, 1-based, l > r
  double d_l = 0;
  double beta = 1;                            // 0 is the logarithmic limit

  std::size_t m() const { return base_spectra.size(); }
  Eigen::Index p() const { return base_spectra.empty() ? 0 : base_spectra.front().size(); }
  void validate() const;
};

struct ToleranceReport {
  double tau = 0;                // +inf for beta < 0
  double lambda_tilde_l = 0;     // induced perturbation of the l-th eigenvalue
  bool order_invariant = false;  // direct evaluation of the ordering condition
  Eigen::VectorXd lambda_beta;   // perturbed aggregate spectrum
  Eigen::VectorXd lambda_bar;    // unperturbed aggregate spectrum
  // Limit of the l-th aggregate eigenvalue as d_l -> inf (finite only for beta < 0).
  double perturbed_supremum = 0;
};

// Scalar beta power mean of `values` (beta == 0: geometric mean).
double power_mean(const Eigen::Ref<const Eigen::VectorXd>& values, double beta);

Eigen::VectorXd unperturbed_beta_spectrum(const PerturbationScenario& sc);
Eigen::VectorXd perturbed_beta_spectrum(const PerturbationScenario& sc);

// min_{j<=r} spectrum_j > max_{j>r} spectrum_j (strict).
bool order_condition(const Eigen::VectorXd& spectrum, Eigen::Index r);

bool invariance_check(const PerturbationScenario& sc);

// beta > 0: ((lambda + d)^b - lambda^b)^{1/b}
// beta = 0: (lambda + d) / lambda  (multiplicative analogue)
// beta < 0: (lambda^b - (lambda + d)^b)^{1/b}  (sign-corrected so it stays real)
double induced_perturbation(const PerturbationScenario& sc);

// Throws PreconditionError when the unperturbed aggregate already violates
// the ordering condition.
ToleranceReport tolerance(const PerturbationScenario& sc);

// Random per-machine spectra: signal eigenvalues follow
// 1 + sqrt(dim/n) + dim^{1/(1+j)} scaled by a U(0.9, 1.1) jitter, noise
// eigenvalues are U(0.5, 1.5); each spectrum sorted descending.
std::vector<Eigen::VectorXd> sample_spectra(std::size_t m, Eigen::Index p, Eigen::Index r, std::uint64_t seed,
                                            double dim = 500, double n = 250);

}  // namespace bdpca

#endif  // BDPCA_PERTURBATION_HPP
