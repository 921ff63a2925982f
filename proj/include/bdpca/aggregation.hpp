#ifndef BDPCA_AGGREGATION_HPP
#define BDPCA_AGGREGATION_HPP

#include "bdpca/linalg.hpp"
#include "bdpca/local_pca.hpp"

#include <span>
#include <string>
#include <vector>

namespace bdpca {

// beta == 0 selects the logarithmic (geometric-mean) limit.
struct BetaConfig {
  double beta = 1.0;
  double delta = 1e-5;  // added as delta * I before negative powers only
  double eigen_floor = kEigenFloor;

  void validate() const;
};

// Projection marks the projection-averaging baseline.
enum class Branch { Positive, LimitZero, Negative, Projection };

const char* branch_name(Branch b) noexcept;
Branch branch_for(double beta) noexcept;

struct AggregateResult {
  SymMatrix sigma_beta;
  TruncatedEig leading;  // truncated_eig(sigma_beta, r)
  Branch branch = Branch::Positive;
  // Set when the r-th and (r+1)-th eigenvalues of sigma_beta coincide.
  bool tie_warning = false;
};

// phi^{-1}((1/m) sum phi(M_l)) with phi applied spectrally.
SymMatrix phi_mean(std::span<const SymMatrix> inputs, const ScalarMap& phi, const ScalarMap& phi_inverse);

// Matrix beta-mean. beta < 0 regularizes every input by +delta I before
// powering; beta == 0 floors eigenvalues before ln.
SymMatrix beta_mean(std::span<const SymMatrix> inputs, const BetaConfig& cfg);

// Aggregates rank-q summaries, summing in list order. `weights` (optional,
// one per summary) replaces the uniform 1/m; they are normalized to sum 1.
AggregateResult beta_aggregate(std::span<const TruncatedEig> summaries, const BetaConfig& cfg, Eigen::Index r,
                               std::span<const double> weights = {});

// Projection averaging over the first r eigenvectors of each summary.
AggregateResult fan_aggregate(std::span<const TruncatedEig> summaries, Eigen::Index r);

}  // namespace bdpca

#endif  // BDPCA_AGGREGATION_HPP
