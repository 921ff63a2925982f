#include "bdpca/selection.hpp"
#include "bdpca/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace bdpca {

namespace {

// Discrepancies lie in [0, 2r]; differences below this are round-off.
constexpr double kScoreTieTolerance = 1e-12;

}  // namespace

void CvPlan::validate() const {
  require(m >= 2, "CvPlan: need at least two machines");
  require(k == folds.size() && k >= 2, "CvPlan: fold count mismatch");
  require(!candidates.empty(), "CvPlan: empty candidate set");
  std::vector<int> seen(m, 0);
  for (const auto& f : folds) {
    require(!f.empty(), "CvPlan: empty fold");
    for (std::size_t i : f) {
      require(i < m, "CvPlan: machine index out of range");
      require(seen[i]++ == 0, "CvPlan: folds overlap");
    }
  }
}

CvPlan make_folds(std::size_t m, std::size_t k, std::uint64_t seed) {
  require(m >= 2, "make_folds: need at least two machines");
  require(k >= 2, "make_folds: need at least two folds");
  if (m <= k) k = m;

  std::vector<std::size_t> ids(m);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  for (std::size_t i = m - 1; i > 0; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
    std::swap(ids[i], ids[j]);
  }

  CvPlan plan;
  plan.m = m;
  plan.k = k;
  plan.seed = seed;
  const std::size_t base = m / k;
  const std::size_t extra = m % k;
  std::size_t pos = 0;
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    plan.folds.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(pos),
                            ids.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return plan;
}

double projection_discrepancy(const TruncatedEig& a, const TruncatedEig& b) {
  require(a.p() == b.p(), "projection_discrepancy: dimension mismatch");
  require(a.q() == b.q(), "projection_discrepancy: rank mismatch");
  // ||P_a - P_b||_F^2 = 2r - 2 ||A^T B||_F^2 loses accuracy near zero; form the difference.
  const Eigen::MatrixXd diff = a.vectors() * a.vectors().transpose() - b.vectors() * b.vectors().transpose();
  return diff.squaredNorm();
}

CvResult select_beta(std::span<const TruncatedEig> summaries_q, std::span<const TruncatedEig> summaries_r,
                     const CvPlan& plan, const BetaConfig& cfg_template) {
  plan.validate();
  require(summaries_q.size() == plan.m && summaries_r.size() == plan.m,
          "select_beta: summary lists must have one entry per machine");
  const Eigen::Index r = summaries_r.front().q();
  for (const auto& s : summaries_r) require(s.q() == r, "select_beta: rank-r summaries disagree on r");

  CvResult res;
  res.candidates = plan.candidates;
  const std::size_t nb = plan.candidates.size();
  res.per_fold.assign(plan.k, std::vector<double>(nb, 0.0));
  res.scores.assign(nb, 0.0);

  std::vector<char> in_fold(plan.m);
  for (std::size_t j = 0; j < plan.k; ++j) {
    std::fill(in_fold.begin(), in_fold.end(), 0);
    for (std::size_t i : plan.folds[j]) in_fold[i] = 1;
    std::vector<TruncatedEig> train;
    for (std::size_t i = 0; i < plan.m; ++i)
      if (!in_fold[i]) train.push_back(summaries_q[i]);

    for (std::size_t b = 0; b < nb; ++b) {
      BetaConfig cfg = cfg_template;
      cfg.beta = plan.candidates[b];
      const AggregateResult agg = beta_aggregate(train, cfg, r);
      double d = 0;
      for (std::size_t v : plan.folds[j]) d += projection_discrepancy(agg.leading, summaries_r[v]);
      res.per_fold[j][b] = d / static_cast<double>(plan.folds[j].size());
    }
  }

  for (std::size_t b = 0; b < nb; ++b) {
    double s = 0;
    for (std::size_t j = 0; j < plan.k; ++j) s += res.per_fold[j][b];
    res.scores[b] = s / static_cast<double>(plan.k);
  }
  // Scores within kScoreTieTolerance of the minimum tie; earliest candidate wins.
  const double best = *std::min_element(res.scores.begin(), res.scores.end());
  while (res.scores[res.best_index] > best + kScoreTieTolerance) ++res.best_index;
  res.best_beta = plan.candidates[res.best_index];
  return res;
}

}  // namespace bdpca
