#include "doctest.h"

#include "bdpca/divergence.hpp"
#include "bdpca/error.hpp"
#include "support.hpp"

#include <cmath>

using namespace bdpca;

namespace {

SymMatrix scalar(double v) { return SymMatrix::diagonal(Eigen::VectorXd::Constant(1, v)); }

std::vector<DivergenceKind> all_kinds() {
  return {DivergenceKind::beta(-2),  DivergenceKind::beta(-0.5), DivergenceKind::beta(0.5),
          DivergenceKind::beta(1),   DivergenceKind::beta(2),    DivergenceKind::von_neumann(),
          DivergenceKind::log_det()};
}

// Dense trace formulas evaluated with Schur-Pade matrix functions.
double dense_divergence(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double beta) {
  const Eigen::Index p = a.rows();
  if (beta == 0) return (a * (oracle::log(a) - oracle::log(b)) - a + b).trace();
  if (beta == -1) {
    const Eigen::MatrixXd r = a * b.inverse();
    return r.trace() - std::log(r.determinant()) - static_cast<double>(p);
  }
  return (oracle::power(a, beta + 1) + beta * oracle::power(b, beta + 1) - (beta + 1) * oracle::power(b, beta) * a)
             .trace() /
         (beta * (beta + 1));
}

BetaConfig cfg_for(double beta) {
  BetaConfig c;
  c.beta = beta;
  return c;
}

}  // namespace

TEST_CASE("DivergenceKind rejects the limit points as plain betas") {
  CHECK_THROWS_AS(DivergenceKind::beta(0), Error);
  CHECK_THROWS_AS(DivergenceKind::beta(-1), Error);
  CHECK(DivergenceKind::for_beta(0).tag() == DivergenceKind::Tag::VonNeumann);
  CHECK(DivergenceKind::for_beta(-1).tag() == DivergenceKind::Tag::LogDet);
  CHECK(DivergenceKind::for_beta(0.3).beta_value() == 0.3);
}

TEST_CASE("generating function examples") {
  for (const auto& k : all_kinds()) CHECK(std::abs(generating_value(SymMatrix::identity(4), k)) < 1e-14);
  CHECK(generating_value(scalar(std::exp(1.0)), DivergenceKind::von_neumann()) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(generating_value(scalar(2), DivergenceKind::beta(1)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(generating_value(scalar(2), DivergenceKind::log_det()) == doctest::Approx(-std::log(2.0) + 1).epsilon(1e-14));
}

TEST_CASE("divergence examples") {
  std::mt19937_64 rng(1);
  const SymMatrix m(oracle::random_pd(5, 0.3, 3, rng));
  for (const auto& k : all_kinds()) CHECK(std::abs(divergence(m, m, k)) <= 1e-10);

  const SymMatrix a = SymMatrix::diagonal(Eigen::Vector2d(1, 2));
  const SymMatrix b = SymMatrix::diagonal(Eigen::Vector2d(3, 6));
  CHECK(divergence(a, b, DivergenceKind::beta(1)) == doctest::Approx(10).epsilon(1e-14));
  CHECK(divergence(scalar(2), scalar(1), DivergenceKind::log_det()) == doctest::Approx(2 - std::log(2.0) - 1).epsilon(1e-14));
  CHECK(divergence(scalar(2), scalar(1), DivergenceKind::log_det()) == doctest::Approx(0.306853).epsilon(1e-6));
}

TEST_CASE("divergence agrees with the dense trace formulas") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 30; ++t) {
    const Eigen::MatrixXd a = oracle::random_pd(2 + t % 6, 0.2, 5, rng);
    const Eigen::MatrixXd b = oracle::random_pd(a.rows(), 0.2, 5, rng);
    for (double beta : {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0}) {
      const double want = dense_divergence(a, b, beta);
      const double got = divergence(SymMatrix(a), SymMatrix(b), DivergenceKind::for_beta(beta));
      CHECK(std::abs(got - want) <= 1e-9 * (1 + std::abs(want)));
    }
  }
}

TEST_CASE("non-negativity and the Bregman expansion") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index p = 1 + t % 10;
    const SymMatrix a(oracle::random_pd(p, 0.2, 5, rng));
    const SymMatrix b(oracle::random_pd(p, 0.2, 5, rng));
    for (const auto& k : all_kinds()) {
      const double d = divergence(a, b, k);
      CHECK(d >= -1e-10);
      const double bregman = generating_value(a, k) - generating_value(b, k) -
                             (generating_gradient(b, k).matrix() * (a.matrix() - b.matrix())).trace();
      CHECK(std::abs(d - bregman) <= 1e-8 * std::max(1.0, std::abs(d)));
    }
  }
}

TEST_CASE("the beta family tends to its named limits") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    const SymMatrix a(oracle::random_pd(5, 0.2, 5, rng));
    const SymMatrix b(oracle::random_pd(5, 0.2, 5, rng));
    const double vn = divergence(a, b, DivergenceKind::von_neumann());
    const double ld = divergence(a, b, DivergenceKind::log_det());
    CHECK(std::abs(divergence(a, b, DivergenceKind::beta(1e-4)) - vn) <= 1e-3 * (1 + vn));
    CHECK(std::abs(divergence(a, b, DivergenceKind::beta(-1 + 1e-4)) - ld) <= 1e-3 * (1 + ld));
  }
}

TEST_CASE("midpoint convexity of the generating function") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index p = 2 + t % 8;
    const SymMatrix a(oracle::random_pd(p, 0.2, 5, rng));
    const SymMatrix b(oracle::random_pd(p, 0.2, 5, rng));
    const SymMatrix mid((a.matrix() + b.matrix()) / 2);
    for (double beta : {-0.5, 0.5, 1.0, 2.0}) {
      const auto k = DivergenceKind::beta(beta);
      CHECK(generating_value(mid, k) <= 0.5 * generating_value(a, k) + 0.5 * generating_value(b, k) - 1e-12);
    }
  }
}

TEST_CASE("domain guard refuses to floor silently") {
  const SymMatrix singular = SymMatrix::diagonal(Eigen::Vector2d(1, 0));
  const SymMatrix pd = SymMatrix::identity(2);
  CHECK_THROWS_AS(divergence(pd, singular, DivergenceKind::log_det()), Error);
  CHECK_THROWS_AS(divergence(singular, pd, DivergenceKind::von_neumann()), Error);
  CHECK_THROWS_AS(divergence(pd, singular, DivergenceKind::beta(-0.5)), Error);
  CHECK_THROWS_AS(divergence(pd, SymMatrix::identity(3), DivergenceKind::beta(1)), Error);
  try {
    divergence(pd, singular, DivergenceKind::log_det());
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DomainError);
  }
  // positive powers tolerate a singular argument
  CHECK(divergence(singular, pd, DivergenceKind::beta(1)) == doctest::Approx(0.5));
}

TEST_CASE("minimizer examples") {
  std::mt19937_64 rng(6);
  const SymMatrix m(oracle::random_pd(4, 0.5, 2, rng));
  const std::vector<SymMatrix> twice{m, m};
  const MinimizerReport same = verify_minimizer(twice, cfg_for(1), 20, 0.05, 1);
  CHECK(std::abs(same.objective_at_center) < 1e-12);
  CHECK(same.holds());
  CHECK(same.min_margin > 0);

  const std::vector<SymMatrix> scalars{scalar(1), scalar(3)};
  const auto k = DivergenceKind::beta(1);
  CHECK(mean_divergence(scalar(2), scalars, k) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mean_divergence(scalar(2.1), scalars, k) == doctest::Approx(0.505).epsilon(1e-12));
  CHECK(mean_divergence(scalar(1.9), scalars, k) == doctest::Approx(0.505).epsilon(1e-12));
  const MinimizerReport lin = verify_minimizer(scalars, cfg_for(1), 10, 0.1, 2);
  CHECK(lin.center(0, 0) == doctest::Approx(2));
  for (double margin : lin.margins) CHECK(margin == doctest::Approx(0.005).epsilon(1e-9));

  const double e2 = std::exp(2.0);
  const std::vector<SymMatrix> vn{scalar(1), scalar(e2)};
  const MinimizerReport g = verify_minimizer(vn, cfg_for(0), 10, 0.1, 3);
  CHECK(g.center(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-13));
  // d/dm sum (m ln(m/l) - m + l) = sum ln(m/l) vanishes at m = e
  CHECK(std::log(g.center(0, 0) / 1) + std::log(g.center(0, 0) / e2) == doctest::Approx(0).scale(1));
  CHECK(g.holds());
}

TEST_CASE("minimizer property on random inputs") {
  std::mt19937_64 rng(7);
  for (double beta : {-1.0, 0.0, 0.5, 1.0}) {
    for (double noise : {1e-2, 1e-1}) {
      std::vector<SymMatrix> in;
      for (int i = 0; i < 5; ++i) in.emplace_back(oracle::random_pd(6, 0.3, 4, rng));
      const MinimizerReport rep = verify_minimizer(in, cfg_for(beta), 40, noise, 11);
      CHECK(rep.holds());
      CHECK(rep.margins.size() + rep.out_of_domain == 40);
    }
  }
}

TEST_CASE("verify_minimizer argument checks") {
  const std::vector<SymMatrix> in{SymMatrix::identity(2)};
  CHECK_THROWS_AS(verify_minimizer(in, cfg_for(1), 0, 0.1), Error);
  CHECK_THROWS_AS(verify_minimizer(in, cfg_for(1), 5, 0.0), Error);
  CHECK_THROWS_AS(verify_minimizer(std::vector<SymMatrix>{}, cfg_for(1), 5, 0.1), Error);
}
