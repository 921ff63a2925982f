#ifndef BDPCA_DIVERGENCE_HPP
#define BDPCA_DIVERGENCE_HPP

#include "bdpca/aggregation.hpp"
#include "bdpca/linalg.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace bdpca {

// Member of the matrix beta-divergence family. The beta tag excludes 0 and -1,
// whose limits are the von Neumann and log-determinant divergences.
class DivergenceKind {
 public:
  enum class Tag { Beta, VonNeumann, LogDet };

  static DivergenceKind beta(double b);
  static DivergenceKind von_neumann() { return DivergenceKind(Tag::VonNeumann, 0.0); }
  static DivergenceKind log_det() { return DivergenceKind(Tag::LogDet, -1.0); }
  // Maps 0 and -1 onto their limits.
  static DivergenceKind for_beta(double b);

  Tag tag() const { return tag_; }
  double beta_value() const { return beta_; }

 private:
  DivergenceKind(Tag tag, double beta) : tag_(tag), beta_(beta) {}
  Tag tag_;
  double beta_;
};

// Bregman generating function Phi.
//   beta:        tr(M^{b+1} - (b+1) M + b I) / (b (b+1))
//   von Neumann: tr(M ln M - M) + p
//   log-det:     -ln det M + tr M - p
double generating_value(const SymMatrix& m, DivergenceKind kind, double floor = kEigenFloor);

// Derivative phi of the generating function: (M^b - I)/b, ln M, I - M^{-1}.
SymMatrix generating_gradient(const SymMatrix& m, DivergenceKind kind, double floor = kEigenFloor);

// D(M1, M2) with the model in the first slot. Slots that need ln or an inverse
// throw DomainError when an eigenvalue falls below `floor`; nothing is
// floored silently.
double divergence(const SymMatrix& m1, const SymMatrix& m2, DivergenceKind kind, double floor = kEigenFloor);

// (1/m) sum_l D(M, targets[l])
double mean_divergence(const SymMatrix& m, std::span<const SymMatrix> targets, DivergenceKind kind,
                       double floor = kEigenFloor);

struct MinimizerReport {
  SymMatrix center;                 // beta_mean(inputs)
  double objective_at_center = 0;   // J(center)
  std::vector<double> margins;      // J(center + E_t) - J(center), in-domain trials
  double min_margin = 0;
  std::size_t out_of_domain = 0;    // perturbations that left the PD cone

  bool holds() const { return !margins.empty() && min_margin >= 0.0; }
};

// Numerically checks that the beta-mean minimizes the mean beta-divergence
// by evaluating J at `trials` random symmetric perturbations of Frobenius
// norm `noise_scale`. For beta < 0 the targets are the delta-regularized
// inputs, matching beta_mean.
MinimizerReport verify_minimizer(std::span<const SymMatrix> inputs, const BetaConfig& cfg, int trials,
                                 double noise_scale, std::uint64_t seed = 0);

}  // namespace bdpca

#endif  // BDPCA_DIVERGENCE_HPP
