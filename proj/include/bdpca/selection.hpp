#ifndef BDPCA_SELECTION_HPP
#define BDPCA_SELECTION_HPP

#include "bdpca/aggregation.hpp"
#include "bdpca/local_pca.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace bdpca {

inline const std::vector<double> kDefaultCandidates = {-1.0, 0.0, 1.0};

// Partition of machine indices (0-based positions in the summary lists)
// into validation folds.
struct CvPlan {
  std::size_t m = 0;
  std::size_t k = 0;                         // effective fold count (m when m <= K)
  std::vector<std::vector<std::size_t>> folds;
  std::vector<double> candidates = kDefaultCandidates;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CvResult {
  std::vector<double> candidates;
  std::vector<double> scores;                // (1/K) sum_j d^(j)(beta), per candidate
  std::vector<std::vector<double>> per_fold; // [fold][candidate]
  double best_beta = 0;
  std::size_t best_index = 0;

  friend bool operator==(const CvResult&, const CvResult&) = default;
};

// Fisher-Yates shuffle of 0..m-1 driven by a seeded mt19937_64, then
// contiguous chunks; the first (m mod K) folds get one extra machine.
CvPlan make_folds(std::size_t m, std::size_t k, std::uint64_t seed);

// ||A A^T - B B^T||_F^2 over the eigenvector blocks, in [0, 2r].
double projection_discrepancy(const TruncatedEig& a, const TruncatedEig& b);

// For every fold and candidate: aggregate the training machines' rank-q
// summaries, then average the projection discrepancy against each
// validation machine's rank-r summary. Ties go to the earliest candidate.
CvResult select_beta(std::span<const TruncatedEig> summaries_q, std::span<const TruncatedEig> summaries_r,
                     const CvPlan& plan, const BetaConfig& cfg_template);

}  // namespace bdpca

#endif  // BDPCA_SELECTION_HPP
