#ifndef BDPCA_TESTS_SUPPORT_HPP
#define BDPCA_TESTS_SUPPORT_HPP

// Reference computations that do not go through the library's own
// eigensolver: cyclic Jacobi, Eigen's Schur-Pade matrix functions, and
// closed forms.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

struct Eig {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;
};

// Cyclic Jacobi rotations until the off-diagonal mass is negligible.
inline Eig jacobi(Eigen::MatrixXd a) {
  const Eigen::Index n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = std::max(1.0, a.norm());
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-15 * scale) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });
  Eig out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values[j] = a(idx[j], idx[j]);
    out.vectors.col(j) = v.col(idx[j]);
  }
  return out;
}

// Characteristic-polynomial roots of a symmetric 2x2 matrix, larger first.
inline std::pair<double, double> eig2(double a, double b, double d) {
  const double tr = a + d, det = a * d - b * b;
  const double disc = std::sqrt(tr * tr / 4 - det);
  return {tr / 2 + disc, tr / 2 - disc};
}

inline Eigen::MatrixXd power(const Eigen::MatrixXd& m, double beta) { return m.pow(beta); }
inline Eigen::MatrixXd log(const Eigen::MatrixXd& m) { return m.log(); }
inline Eigen::MatrixXd exp(const Eigen::MatrixXd& m) { return m.exp(); }

inline double rel_err(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

inline Eigen::MatrixXd haar(Eigen::Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(p, p);
  for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  return qr.householderQ() * Eigen::MatrixXd::Identity(p, p);
}

// Q diag(u) Q^T with u ~ U(lo, hi) and Haar-ish Q.
inline Eigen::MatrixXd random_pd(Eigen::Index p, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(lo, hi);
  Eigen::VectorXd d(p);
  for (Eigen::Index i = 0; i < p; ++i) d[i] = unif(rng);
  const Eigen::MatrixXd q = haar(p, rng);
  Eigen::MatrixXd m = q * d.asDiagonal() * q.transpose();
  return (m + m.transpose()) / 2;
}

inline Eigen::MatrixXd random_symmetric(Eigen::Index p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1, 1);
  Eigen::MatrixXd m(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) m(i, j) = m(j, i) = unif(rng);
  return m;
}

// Principal-angle cosines between two orthonormal blocks via SVD.
inline double subspace_rho(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose() * b);
  return svd.singularValues().head(b.cols()).mean();
}

}  // namespace oracle

#endif  // BDPCA_TESTS_SUPPORT_HPP
