#ifndef BDPCA_LINALG_HPP
#define BDPCA_LINALG_HPP

#include <Eigen/Dense>

#include <functional>
#include <span>

namespace bdpca {

// Floor applied to round-off eigenvalues before ln or negative powers.
inline constexpr double kEigenFloor = 1e-12;
// Eigenvalues down to -kPsdSlack * max(1, |lambda_max|) are treated as round-off.
inline constexpr double kPsdSlack = 1e-10;

using ScalarMap = std::function<double(double)>;

// Dense symmetric matrix. Construction symmetrizes (A + A^T) / 2 and rejects
// non-finite entries, so every instance is exactly symmetric.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(Eigen::Index p);
  static SymMatrix zero(Eigen::Index p);
  static SymMatrix diagonal(std::span<const double> values);
  static SymMatrix diagonal(const Eigen::VectorXd& values);

  Eigen::Index dim() const { return m_.rows(); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }

  friend bool operator==(const SymMatrix& a, const SymMatrix& b) {
    return a.m_.rows() == b.m_.rows() && a.m_ == b.m_;
  }

 private:
  Eigen::MatrixXd m_;
};

// values are non-increasing; column j of vectors pairs with values[j].
struct EigenSystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

// Deterministic symmetric eigendecomposition. Each eigenvector has its
// largest-magnitude entry positive (lowest row index wins ties). Within a
// group of equal eigenvalues, columns are ordered lexicographically
// descending.
EigenSystem eig_sym(const SymMatrix& m);

// vectors * diag(f(values)) * vectors^T. Throws DomainError if f is not
// finite at an eigenvalue.
SymMatrix matrix_function(const EigenSystem& es, const ScalarMap& f);
SymMatrix matrix_function(const SymMatrix& m, const ScalarMap& f);

// Spectral power for beta != 0. For beta < 0 eigenvalues in the round-off
// band are raised to `floor`; for beta > 0 they are clamped to zero.
SymMatrix matrix_power(const SymMatrix& m, double beta, double floor = kEigenFloor);
SymMatrix matrix_power(const EigenSystem& es, double beta, double floor = kEigenFloor);

SymMatrix matrix_log(const SymMatrix& m, double floor = kEigenFloor);
SymMatrix matrix_exp(const SymMatrix& m);

// Symmetric square root L with L * L^T = M. Throws NotPsd for eigenvalues
// below -kPsdSlack.
Eigen::MatrixXd sqrt_factor(const SymMatrix& m);

// Applies the round-off floor used by ln and negative powers. Eigenvalues
// below the PSD slack throw DomainError.
double floor_eigenvalue(double lambda, double scale, double floor);

double max_abs(const Eigen::MatrixXd& m);

}  // namespace bdpca

#endif  // BDPCA_LINALG_HPP
