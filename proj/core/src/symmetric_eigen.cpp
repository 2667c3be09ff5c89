#include "mlr/symmetric_eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mlr/error.hpp"

namespace mlr::linalg {

namespace {

// Reduces V (holding the symmetric input) to tridiagonal form in place,
// leaving the orthogonal transform in V, the diagonal in d and the
// subdiagonal in e[1..n-1].
void tridiagonalize(Eigen::MatrixXd& V, Eigen::VectorXd& d, Eigen::VectorXd& e) {
  const Eigen::Index n = V.rows();
  for (Eigen::Index j = 0; j < n; ++j) d(j) = V(n - 1, j);

  for (Eigen::Index i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) scale += std::abs(d(k));

    if (scale == 0.0) {
      e(i) = d(i - 1);
      for (Eigen::Index j = 0; j < i; ++j) {
        d(j) = V(i - 1, j);
        V(i, j) = 0.0;
        V(j, i) = 0.0;
      }
    } else {
      for (Eigen::Index k = 0; k < i; ++k) {
        d(k) /= scale;
        h += d(k) * d(k);
      }
      double f = d(i - 1);
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e(i) = scale * g;
      h -= f * g;
      d(i - 1) = f - g;
      for (Eigen::Index j = 0; j < i; ++j) e(j) = 0.0;

      for (Eigen::Index j = 0; j < i; ++j) {
        f = d(j);
        V(j, i) = f;
        g = e(j) + V(j, j) * f;
        for (Eigen::Index k = j + 1; k <= i - 1; ++k) {
          g += V(k, j) * d(k);
          e(k) += V(k, j) * f;
        }
        e(j) = g;
      }
      f = 0.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        e(j) /= h;
        f += e(j) * d(j);
      }
      const double hh = f / (h + h);
      for (Eigen::Index j = 0; j < i; ++j) e(j) -= hh * d(j);
      for (Eigen::Index j = 0; j < i; ++j) {
        f = d(j);
        g = e(j);
        for (Eigen::Index k = j; k <= i - 1; ++k) V(k, j) -= (f * e(k) + g * d(k));
        d(j) = V(i - 1, j);
        V(i, j) = 0.0;
      }
    }
    d(i) = h;
  }

  // Accumulate the Householder reflections.
  for (Eigen::Index i = 0; i < n - 1; ++i) {
    V(n - 1, i) = V(i, i);
    V(i, i) = 1.0;
    const double h = d(i + 1);
    if (h != 0.0) {
      for (Eigen::Index k = 0; k <= i; ++k) d(k) = V(k, i + 1) / h;
      for (Eigen::Index j = 0; j <= i; ++j) {
        double g = 0.0;
        for (Eigen::Index k = 0; k <= i; ++k) g += V(k, i + 1) * V(k, j);
        for (Eigen::Index k = 0; k <= i; ++k) V(k, j) -= g * d(k);
      }
    }
    for (Eigen::Index k = 0; k <= i; ++k) V(k, i + 1) = 0.0;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j) = V(n - 1, j);
    V(n - 1, j) = 0.0;
  }
  V(n - 1, n - 1) = 1.0;
  e(0) = 0.0;
}

// Implicit QL on the tridiagonal (d, e), rotating the columns of V.
void diagonalize(Eigen::MatrixXd& V, Eigen::VectorXd& d, Eigen::VectorXd& e) {
  const Eigen::Index n = V.rows();
  for (Eigen::Index i = 1; i < n; ++i) e(i - 1) = e(i);
  e(n - 1) = 0.0;

  const double eps = std::numeric_limits<double>::epsilon();
  const int max_iterations = 60;
  double f = 0.0;
  double tst1 = 0.0;

  for (Eigen::Index l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d(l)) + std::abs(e(l)));
    Eigen::Index m = l;
    while (m < n - 1 && std::abs(e(m)) > eps * tst1) ++m;

    if (m > l) {
      int iteration = 0;
      do {
        if (++iteration > max_iterations) {
          throw Error(Errc::NumericalError, "symmetric eigensolver did not converge");
        }
        double g = d(l);
        double p = (d(l + 1) - g) / (2.0 * e(l));
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d(l) = e(l) / (p + r);
        d(l + 1) = e(l) * (p + r);
        const double dl1 = d(l + 1);
        double h = g - d(l);
        for (Eigen::Index i = l + 2; i < n; ++i) d(i) -= h;
        f += h;

        p = d(m);
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e(l + 1);
        double s = 0.0;
        double s2 = 0.0;
        for (Eigen::Index i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e(i);
          h = c * p;
          r = std::hypot(p, e(i));
          e(i + 1) = s * r;
          s = e(i) / r;
          c = p / r;
          p = c * d(i) - s * g;
          d(i + 1) = h + s * (c * g + s * d(i));
          for (Eigen::Index k = 0; k < n; ++k) {
            h = V(k, i + 1);
            V(k, i + 1) = s * V(k, i) + c * h;
            V(k, i) = c * V(k, i) - s * h;
          }
        }
        p = -s * s2 * c3 * el1 * e(l) / dl1;
        e(l) = s * p;
        d(l) = c * p;
      } while (std::abs(e(l)) > eps * tst1);
    }
    d(l) += f;
    e(l) = 0.0;
  }
}

}  // namespace

SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error(Errc::ShapeError, "eigensolver needs a square matrix");
  const Eigen::Index n = a.rows();
  SymmetricEigen result;
  if (n == 0) return result;

  Eigen::MatrixXd V = a.selfadjointView<Eigen::Lower>();
  if (!V.allFinite()) throw Error(Errc::NumericalError, "eigensolver input is not finite");
  Eigen::VectorXd d(n);
  Eigen::VectorXd e(n);
  if (n == 1) {
    result.values = V.diagonal();
    result.vectors = Eigen::MatrixXd::Identity(1, 1);
    return result;
  }
  tridiagonalize(V, d, e);
  diagonalize(V, d, e);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return d(i) > d(j); });

  result.values.resize(n);
  result.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    result.values(k) = d(order[static_cast<std::size_t>(k)]);
    result.vectors.col(k) = V.col(order[static_cast<std::size_t>(k)]);
  }
  return result;
}

}  // namespace mlr::linalg
