#include "bdpca/linalg.hpp"
#include "bdpca/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace bdpca {

namespace {

// Eigenvalues closer than this (relative to the spectrum scale) are treated
// as one degenerate group when ordering columns.
constexpr double kTieTolerance = 1e-12;

double spectrum_scale(const Eigen::VectorXd& values) {
  return values.size() == 0 ? 1.0 : std::max(1.0, values.cwiseAbs().maxCoeff());
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  if (v[best] < 0) v = -v;
}

bool lex_greater(const Eigen::MatrixXd& vecs, Eigen::Index a, Eigen::Index b) {
  for (Eigen::Index i = 0; i < vecs.rows(); ++i) {
    if (vecs(i, a) != vecs(i, b)) return vecs(i, a) > vecs(i, b);
  }
  return false;
}

}  // namespace

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  require(m.rows() == m.cols(), "SymMatrix: matrix must be square");
  if (!m.allFinite()) fail(ErrorCode::InvalidInput, "SymMatrix: non-finite entry");
  m_ = (m + m.transpose()) * 0.5;
}

SymMatrix SymMatrix::identity(Eigen::Index p) {
  return SymMatrix(Eigen::MatrixXd::Identity(p, p));
}

SymMatrix SymMatrix::zero(Eigen::Index p) {
  return SymMatrix(Eigen::MatrixXd::Zero(p, p));
}

SymMatrix SymMatrix::diagonal(std::span<const double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return diagonal(v);
}

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& values) {
  return SymMatrix(Eigen::MatrixXd(values.asDiagonal()));
}

double max_abs(const Eigen::MatrixXd& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

EigenSystem eig_sym(const SymMatrix& m) {
  const Eigen::Index p = m.dim();
  require(p > 0, "eig_sym: empty matrix");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.matrix(), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success)
    fail(ErrorCode::ConvergenceError, "eig_sym: symmetric eigensolver did not converge");

  // Solver output is ascending.
  const Eigen::VectorXd raw_values = solver.eigenvalues().reverse();
  Eigen::MatrixXd raw_vectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index j = 0; j < p; ++j) fix_sign(raw_vectors.col(j));

  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const double tol = kTieTolerance * spectrum_scale(raw_values);
  std::size_t start = 0;
  while (start < order.size()) {
    std::size_t end = start + 1;
    while (end < order.size() &&
           raw_values[static_cast<Eigen::Index>(start)] - raw_values[static_cast<Eigen::Index>(end)] <= tol)
      ++end;
    if (end - start > 1) {
      std::sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                order.begin() + static_cast<std::ptrdiff_t>(end),
                [&](Eigen::Index a, Eigen::Index b) { return lex_greater(raw_vectors, a, b); });
    }
    start = end;
  }

  EigenSystem es;
  es.values.resize(p);
  es.vectors.resize(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    // Values inside a tie group stay in descending order; only vectors move.
    es.values[j] = raw_values[j];
    es.vectors.col(j) = raw_vectors.col(src);
  }
  return es;
}

SymMatrix matrix_function(const EigenSystem& es, const ScalarMap& f) {
  Eigen::VectorXd mapped(es.values.size());
  for (Eigen::Index j = 0; j < es.values.size(); ++j) {
    const double y = f(es.values[j]);
    if (!std::isfinite(y)) {
      std::ostringstream os;
      os << "matrix_function: map undefined at eigenvalue " << es.values[j];
      fail(ErrorCode::DomainError, os.str());
    }
    mapped[j] = y;
  }
  return SymMatrix(es.vectors * mapped.asDiagonal() * es.vectors.transpose());
}

SymMatrix matrix_function(const SymMatrix& m, const ScalarMap& f) {
  return matrix_function(eig_sym(m), f);
}

double floor_eigenvalue(double lambda, double scale, double floor) {
  if (lambda >= floor) return lambda;
  if (lambda > -kPsdSlack * scale) return floor;
  std::ostringstream os;
  os << "eigenvalue " << lambda << " is below the positive-semidefinite tolerance";
  fail(ErrorCode::DomainError, os.str());
}

SymMatrix matrix_power(const EigenSystem& es, double beta, double floor) {
  require(beta != 0.0, "matrix_power: beta = 0 is the logarithmic limit; use matrix_log");
  require(floor > 0.0, "matrix_power: floor must be positive");
  const double scale = spectrum_scale(es.values);
  // eigenvalues this small are solver noise; fractional powers would inflate them
  const double noise = static_cast<double>(es.values.size()) * std::numeric_limits<double>::epsilon() * scale;
  EigenSystem adjusted = es;
  for (Eigen::Index j = 0; j < adjusted.values.size(); ++j) {
    double& v = adjusted.values[j];
    if (beta < 0) {
      v = floor_eigenvalue(v, scale, floor);
      continue;
    }
    if (v <= -kPsdSlack * scale) {
      std::ostringstream os;
      os << "matrix_power: eigenvalue " << v << " is negative";
      fail(ErrorCode::DomainError, os.str());
    }
    if (v <= noise) v = 0.0;
  }
  return matrix_function(adjusted, [beta](double t) { return std::pow(t, beta); });
}

SymMatrix matrix_power(const SymMatrix& m, double beta, double floor) {
  if (beta == 1.0) return m;
  return matrix_power(eig_sym(m), beta, floor);
}

SymMatrix matrix_log(const SymMatrix& m, double floor) {
  EigenSystem es = eig_sym(m);
  const double scale = spectrum_scale(es.values);
  for (Eigen::Index j = 0; j < es.values.size(); ++j)
    es.values[j] = floor_eigenvalue(es.values[j], scale, floor);
  return matrix_function(es, [](double t) { return std::log(t); });
}

SymMatrix matrix_exp(const SymMatrix& m) {
  return matrix_function(m, [](double t) { return std::exp(t); });
}

Eigen::MatrixXd sqrt_factor(const SymMatrix& m) {
  EigenSystem es = eig_sym(m);
  const double scale = spectrum_scale(es.values);
  for (Eigen::Index j = 0; j < es.values.size(); ++j) {
    double& v = es.values[j];
    if (v < -kPsdSlack * scale) {
      std::ostringstream os;
      os << "sqrt_factor: eigenvalue " << v << " makes the matrix indefinite";
      fail(ErrorCode::NotPsd, os.str());
    }
    v = std::max(v, 0.0);
  }
  return matrix_function(es, [](double t) { return std::sqrt(t); }).matrix();
}

}  // namespace bdpca
