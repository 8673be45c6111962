#ifndef LSYSINFER_MATRIX_HPP
#define LSYSINFER_MATRIX_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace lsysinfer {

using Vector = std::vector<double>;

double dot(const Vector& a, const Vector& b);
double inf_norm(const Vector& v);

// Dense real matrix, row-major. Constructors reject non-finite entries.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, Vector entries);

  static DenseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  const Vector& data() const { return data_; }

  DenseMatrix transpose() const;
  Vector apply(const Vector& x) const;            // M x
  Vector apply_transpose(const Vector& y) const;  // M' y
  DenseMatrix multiply(const DenseMatrix& other) const;

  double max_abs() const;
  bool is_symmetric(double tol) const;

  void append_row(const Vector& row);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  Vector data_;
};

// Symmetric eigendecomposition M = V diag(eigenvalues) V'.
// Eigenvalues sorted descending; values below tolerance are treated as zero
// by the derived operations (psd_sqrt, psd_pinv, ...).
struct SpectralFactorization {
  Vector eigenvalues;
  DenseMatrix eigenvectors;  // columns
  double tolerance = 0.0;
};

struct SvdResult {
  DenseMatrix u;  // m x r columns
  Vector sigma;   // descending
  DenseMatrix v;  // n x r columns
};

inline constexpr double kRankTolerance = 1e-10;

// Cyclic Jacobi on a symmetric matrix. Throws on asymmetric input.
SpectralFactorization eig_sym(const DenseMatrix& m);

// One-sided Jacobi SVD.
SvdResult svd(const DenseMatrix& m);

// Minimum-norm least-squares solution M^+ b. Singular values below
// kRankTolerance * sigma_max are treated as zero.
Vector pseudoinverse_apply(const DenseMatrix& m, const Vector& b);

// Symmetric PSD square root. Eigenvalues in [-1e-8*|M|, 0) are clamped to
// zero; anything more negative signals a broken covariance estimate.
DenseMatrix psd_sqrt(const DenseMatrix& m);

// Moore-Penrose pseudoinverse of a symmetric PSD matrix.
DenseMatrix psd_pinv(const DenseMatrix& m);

// Minimizer of x'Qx - 2c'x subject to Ex = f, obtained from the KKT block
// system via pseudoinverse_apply. E may have zero rows (unconstrained).
// Throws if the constraints are inconsistent (residual > 1e-6).
Vector kkt_solve(const DenseMatrix& q, const Vector& c, const DenseMatrix& e,
                 const Vector& f);

std::size_t matrix_rank(const DenseMatrix& m);

}  // namespace lsysinfer

#endif
