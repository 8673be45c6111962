#include "lsysinfer/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lsysinfer {

double dot(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

static void check_finite(const Vector& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
  if (!std::isfinite(fill)) throw std::invalid_argument("DenseMatrix: non-finite fill");
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, Vector entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows_ * cols_)
    throw std::invalid_argument("DenseMatrix: entries.length != rows*cols");
  check_finite(data_, "DenseMatrix");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Vector DenseMatrix::apply(const Vector& x) const {
  if (x.size() != cols_) throw std::invalid_argument("apply: dimension mismatch");
  Vector y(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    double s = 0.0;
    const double* row = data_.data() + i * cols_;
    for (std::size_t j = 0; j < cols_; ++j) s += row[j] * x[j];
    y[i] = s;
  }
  return y;
}

Vector DenseMatrix::apply_transpose(const Vector& y) const {
  if (y.size() != rows_) throw std::invalid_argument("apply_transpose: dimension mismatch");
  Vector x(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* row = data_.data() + i * cols_;
    const double yi = y[i];
    for (std::size_t j = 0; j < cols_; ++j) x[j] += row[j] * yi;
  }
  return x;
}

DenseMatrix DenseMatrix::multiply(const DenseMatrix& other) const {
  if (cols_ != other.rows_) throw std::invalid_argument("multiply: dimension mismatch");
  DenseMatrix out(rows_, other.cols_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t k = 0; k < cols_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < other.cols_; ++j) out(i, j) += a * other(k, j);
    }
  return out;
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double x : data_) m = std::max(m, std::fabs(x));
  return m;
}

bool DenseMatrix::is_symmetric(double tol) const {
  if (rows_ != cols_) return false;
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = i + 1; j < cols_; ++j)
      if (std::fabs((*this)(i, j) - (*this)(j, i)) > tol) return false;
  return true;
}

void DenseMatrix::append_row(const Vector& row) {
  if (rows_ == 0 && cols_ == 0) cols_ = row.size();
  if (row.size() != cols_) throw std::invalid_argument("append_row: dimension mismatch");
  check_finite(row, "append_row");
  data_.insert(data_.end(), row.begin(), row.end());
  ++rows_;
}

SpectralFactorization eig_sym(const DenseMatrix& m) {
  const std::size_t n = m.rows();
  if (m.rows() != m.cols()) throw std::invalid_argument("eig_sym: matrix not square");
  if (!m.is_symmetric(1e-8 * (1.0 + m.max_abs())))
    throw std::invalid_argument("eig_sym: matrix not symmetric");

  DenseMatrix a = m;
  // Symmetrize exactly so rotations stay consistent.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = v;
      a(j, i) = v;
    }
  DenseMatrix v = DenseMatrix::identity(n);

  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-14 * (1.0 + a.max_abs())) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) <= 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SpectralFactorization f;
  f.eigenvalues.resize(n);
  f.eigenvectors = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    f.eigenvalues[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) f.eigenvectors(i, j) = v(i, order[j]);
  }
  double lead = n ? std::fabs(f.eigenvalues.front()) : 0.0;
  for (double ev : f.eigenvalues) lead = std::max(lead, std::fabs(ev));
  f.tolerance = kRankTolerance * lead;
  return f;
}

SvdResult svd(const DenseMatrix& m) {
  if (m.rows() < m.cols()) {
    SvdResult r = svd(m.transpose());
    std::swap(r.u, r.v);
    return r;
  }
  const std::size_t rows = m.rows(), cols = m.cols();
  DenseMatrix a = m;
  DenseMatrix v = DenseMatrix::identity(cols);

  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool converged = true;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < rows; ++i) {
          alpha += a(i, p) * a(i, p);
          beta += a(i, q) * a(i, q);
          gamma += a(i, p) * a(i, q);
        }
        if (std::fabs(gamma) <= 1e-15 * std::sqrt(alpha * beta) || gamma == 0.0) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const double aip = a(i, p), aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < cols; ++i) {
          const double vip = v(i, p), viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
    if (converged) break;
  }

  Vector sigma(cols, 0.0);
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += a(i, j) * a(i, j);
    sigma[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

  SvdResult r;
  r.sigma.resize(cols);
  r.u = DenseMatrix(rows, cols);
  r.v = DenseMatrix(cols, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    const std::size_t src = order[j];
    r.sigma[j] = sigma[src];
    const double inv = sigma[src] > 0.0 ? 1.0 / sigma[src] : 0.0;
    for (std::size_t i = 0; i < rows; ++i) r.u(i, j) = a(i, src) * inv;
    for (std::size_t i = 0; i < cols; ++i) r.v(i, j) = v(i, src);
  }
  return r;
}

Vector pseudoinverse_apply(const DenseMatrix& m, const Vector& b) {
  if (b.size() != m.rows()) throw std::invalid_argument("pseudoinverse_apply: dimension mismatch");
  if (m.rows() == 0 || m.cols() == 0) return Vector(m.cols(), 0.0);
  const SvdResult f = svd(m);
  const double cutoff = kRankTolerance * (f.sigma.empty() ? 0.0 : f.sigma.front());
  Vector x(m.cols(), 0.0);
  for (std::size_t k = 0; k < f.sigma.size(); ++k) {
    if (f.sigma[k] <= cutoff || f.sigma[k] == 0.0) break;
    double uk_b = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) uk_b += f.u(i, k) * b[i];
    const double coef = uk_b / f.sigma[k];
    for (std::size_t j = 0; j < m.cols(); ++j) x[j] += f.v(j, k) * coef;
  }
  return x;
}

DenseMatrix psd_sqrt(const DenseMatrix& m) {
  const SpectralFactorization f = eig_sym(m);
  const std::size_t n = m.rows();
  double lead = 0.0;
  for (double ev : f.eigenvalues) lead = std::max(lead, std::fabs(ev));
  Vector root(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double ev = f.eigenvalues[i];
    if (ev < -1e-8 * std::max(1.0, lead))
      throw std::invalid_argument("psd_sqrt: eigenvalue below -1e-8*|M|, covariance estimate broken");
    if (ev <= f.tolerance) ev = 0.0;
    root[i] = std::sqrt(std::max(0.0, ev));
  }
  DenseMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        acc += f.eigenvectors(i, k) * root[k] * f.eigenvectors(j, k);
      s(i, j) = acc;
      s(j, i) = acc;
    }
  return s;
}

DenseMatrix psd_pinv(const DenseMatrix& m) {
  const SpectralFactorization f = eig_sym(m);
  const std::size_t n = m.rows();
  DenseMatrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double ev = f.eigenvalues[k];
        if (ev > f.tolerance)
          acc += f.eigenvectors(i, k) * (1.0 / ev) * f.eigenvectors(j, k);
      }
      s(i, j) = acc;
      s(j, i) = acc;
    }
  return s;
}

Vector kkt_solve(const DenseMatrix& q, const Vector& c, const DenseMatrix& e,
                 const Vector& f) {
  const std::size_t n = q.rows();
  const std::size_t m = e.rows();
  if (q.cols() != n || c.size() != n) throw std::invalid_argument("kkt_solve: Q/c dimension mismatch");
  if (m > 0 && e.cols() != n) throw std::invalid_argument("kkt_solve: E dimension mismatch");
  if (f.size() != m) throw std::invalid_argument("kkt_solve: f dimension mismatch");

  DenseMatrix k(n + m, n + m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) k(i, j) = 2.0 * q(i, j);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      k(n + i, j) = e(i, j);
      k(j, n + i) = e(i, j);
    }
  Vector rhs(n + m);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = 2.0 * c[i];
  for (std::size_t i = 0; i < m; ++i) rhs[n + i] = f[i];

  const Vector z = pseudoinverse_apply(k, rhs);
  Vector x(z.begin(), z.begin() + static_cast<long>(n));
  if (m > 0) {
    const Vector ex = e.apply(x);
    double res = 0.0;
    for (std::size_t i = 0; i < m; ++i) res = std::max(res, std::fabs(ex[i] - f[i]));
    if (res > 1e-6) throw std::runtime_error("kkt_solve: inconsistent constraints");
  }
  return x;
}

std::size_t matrix_rank(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  const SvdResult f = svd(m);
  const double cutoff = kRankTolerance * (f.sigma.empty() ? 0.0 : f.sigma.front());
  std::size_t r = 0;
  for (double s : f.sigma)
    if (s > cutoff && s > 0.0) ++r;
  return r;
}

}  // namespace lsysinfer
