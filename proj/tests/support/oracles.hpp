// Independent reference computations used only by the tests. Nothing here
// calls into the library's solvers; the point is to check them from outside.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline Mat random_matrix(std::mt19937& rng, int d) {
  std::normal_distribution<double> n(0.0, 1.0);
  Mat m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) m(i, j) = cplx(n(rng), n(rng));
  }
  return m;
}

inline Mat random_density(std::mt19937& rng, int d) {
  Mat g = random_matrix(rng, d);
  Mat r = g * g.adjoint();
  return r / r.trace();
}

inline Mat dissipate(const Mat& a, const Mat& b, const Mat& rho) {
  return a * rho * b - 0.5 * (b * a * rho + rho * b * a);
}

struct Term {
  double rate;
  Mat a;
  Mat b;
};

// Dense generator, built column by column from its action on matrix units.
inline Mat dense_liouvillian(const Mat& h, const std::vector<Term>& terms) {
  const int d = static_cast<int>(h.rows());
  Mat out(d * d, d * d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      Mat e = Mat::Zero(d, d);
      e(i, j) = 1.0;
      Mat img = cplx(0.0, -1.0) * (h * e - e * h);
      for (const auto& t : terms) img += t.rate * dissipate(t.a, t.b, e);
      out.col(i + d * j) = Eigen::Map<Vec>(img.data(), d * d);
    }
  }
  return out;
}

// Null vector with unit trace via the dense SVD.
inline Mat dense_steady_state(const Mat& l) {
  const int d2 = static_cast<int>(l.rows());
  const int d = static_cast<int>(std::lround(std::sqrt(d2)));
  Eigen::JacobiSVD<Mat> svd(l, Eigen::ComputeFullV);
  Vec v = svd.matrixV().col(d2 - 1);
  Mat rho = Eigen::Map<Mat>(v.data(), d, d);
  return rho / rho.trace();
}

inline Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  }
  return out;
}

inline Mat destroy(int n) {
  Mat a = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  return a;
}

// Composite Gauss-Legendre on [a, b] with `panels` panels of 10 nodes.
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b, int panels) {
  static const double x[5] = {0.1488743389816312, 0.4333953941292472, 0.6794095682990244,
                              0.8650633666889845, 0.9739065285171717};
  static const double w[5] = {0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
                              0.1494513491505806, 0.0666713443086881};
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h, r = 0.5 * h;
    for (int k = 0; k < 5; ++k) sum += w[k] * r * (f(c - r * x[k]) + f(c + r * x[k]));
  }
  return sum;
}

// Drift matrix of v = (a1, a2^dag, a2, a1^dag), transcribed independently.
inline Eigen::Matrix4cd drift(double k1, double k2, double d1, double d2, double eps) {
  const double g = eps * std::sqrt(k1 * k2) / 2.0;
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(0, 0) = cplx(-k1 / 2, -d1);
  m(1, 1) = cplx(-k2 / 2, d2);
  m(2, 2) = cplx(-k2 / 2, -d2);
  m(3, 3) = cplx(-k1 / 2, d1);
  m(0, 1) = m(1, 0) = m(2, 3) = m(3, 2) = g;
  return m;
}

// V0 = int_0^inf exp(M s) R exp(M^dag s) ds by Gauss-Legendre on s = u/(1-u).
inline Eigen::Matrix4cd covariance_by_integral(const Eigen::Matrix4cd& m, const Eigen::Matrix4cd& r) {
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      for (int part = 0; part < 2; ++part) {
        auto f = [&](double u) {
          const double s = u / (1.0 - u);
          const Eigen::Matrix4cd e = (m * s).exp();
          const cplx v = (e * r * e.adjoint())(i, j) / ((1.0 - u) * (1.0 - u));
          return part == 0 ? v.real() : v.imag();
        };
        const double val = gauss_legendre(f, 0.0, 1.0 - 1e-12, 400);
        out(i, j) += part == 0 ? cplx(val, 0.0) : cplx(0.0, val);
      }
    }
  }
  return out;
}

// Concurrence from the spin-flipped state, via the Hermitian form
// sqrt(sqrt(rho) rho~ sqrt(rho)).
inline double concurrence(const Mat& rho) {
  Mat sy(2, 2);
  sy << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
  const Mat yy = kron(sy, sy);
  const Mat tilde = yy * rho.conjugate() * yy;
  Eigen::SelfAdjointEigenSolver<Mat> es(rho);
  Vec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().cast<cplx>();
  const Mat sq = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  Eigen::SelfAdjointEigenSolver<Mat> es2(sq * tilde * sq);
  std::vector<double> lam;
  for (int i = 0; i < 4; ++i) lam.push_back(std::sqrt(std::max(0.0, es2.eigenvalues()[i])));
  std::sort(lam.rbegin(), lam.rend());
  return std::max(0.0, lam[0] - lam[1] - lam[2] - lam[3]);
}

}  // namespace oracle
