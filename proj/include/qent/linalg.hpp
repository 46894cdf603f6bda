#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "qent/error.hpp"

namespace qent {

using cplx = std::complex<double>;

/// Dense row-major complex matrix in double precision.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  ComplexMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data);

  static ComplexMatrix identity(std::size_t n);
  static ComplexMatrix diagonal(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool is_square() const noexcept { return rows_ == cols_; }

  cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<cplx> data() noexcept { return data_; }
  std::span<const cplx> data() const noexcept { return data_; }

  ComplexMatrix adjoint() const;
  ComplexMatrix transpose() const;
  cplx trace() const;
  bool all_finite() const;

  ComplexMatrix& operator+=(const ComplexMatrix& other);
  ComplexMatrix& operator-=(const ComplexMatrix& other);
  ComplexMatrix& operator*=(cplx s);

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cplx> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(ComplexMatrix a, cplx s);
ComplexMatrix operator*(cplx s, ComplexMatrix a);
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);

/// (m + m^dagger) / 2.
ComplexMatrix hermitian_part(const ComplexMatrix& m);
/// max |(U^dagger U - I)_ij|.
double unitarity_error(const ComplexMatrix& u);

/// Largest absolute entry of a - b.
double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b);
double frobenius_norm(const ComplexMatrix& m);

/// Bipartite density operator on C^dimA ⊗ C^dimB. Construction validates
/// hermiticity, unit trace and positivity at the given tolerance.
class DensityMatrix {
 public:
  static constexpr double kValidityTol = 1e-10;

  DensityMatrix(std::size_t dim_a, std::size_t dim_b, ComplexMatrix mat, double tol = kValidityTol);

  /// Skips validation. For states that are valid by construction.
  static DensityMatrix trusted(std::size_t dim_a, std::size_t dim_b, ComplexMatrix mat);

  std::size_t dim_a() const noexcept { return dim_a_; }
  std::size_t dim_b() const noexcept { return dim_b_; }
  std::size_t dim() const noexcept { return dim_a_ * dim_b_; }
  const ComplexMatrix& mat() const noexcept { return mat_; }

  friend bool operator==(const DensityMatrix&, const DensityMatrix&) = default;

 private:
  DensityMatrix() = default;

  std::size_t dim_a_ = 0;
  std::size_t dim_b_ = 0;
  ComplexMatrix mat_;
};

/// Eigenvalues sorted ascending.
struct Spectrum {
  std::vector<double> eigenvalues;

  double min() const { return eigenvalues.front(); }
  double max() const { return eigenvalues.back(); }
  std::size_t size() const noexcept { return eigenvalues.size(); }
};

struct EigenDecomposition {
  Spectrum values;
  ComplexMatrix vectors;  // column k pairs with values.eigenvalues[k]
};

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

Spectrum hermitian_eigenvalues(const ComplexMatrix& m);
EigenDecomposition hermitian_eigen(const ComplexMatrix& m);

/// Singular values (descending) by one-sided Jacobi rotations.
std::vector<double> singular_values(const ComplexMatrix& m);

struct QrResult {
  ComplexMatrix q;
  ComplexMatrix r;
};
/// Householder QR of a square matrix.
QrResult qr_decompose(const ComplexMatrix& m);

ComplexMatrix partial_transpose(const DensityMatrix& rho);
ComplexMatrix partial_transpose(const ComplexMatrix& m, std::size_t dim_a, std::size_t dim_b);

struct PptResult {
  bool ppt;
  double min_pt_eigenvalue;
};
PptResult is_ppt(const DensityMatrix& rho, double tol = 1e-10);

/// R(ρ)_{(i,j),(k,l)} = ρ_{(i,k),(j,l)}.
ComplexMatrix realign(const DensityMatrix& rho);
/// Trace norm of the realigned matrix; values above 1 certify entanglement.
double realignment_ccnr(const DensityMatrix& rho);

/// Natural-log entropy; eigenvalues are clipped at zero.
double von_neumann_entropy(const DensityMatrix& rho);

/// Mean absolute difference over the (Re, Im) two-channel representation.
double elementwise_l1(const ComplexMatrix& a, const ComplexMatrix& b);

ComplexMatrix partial_trace_a(const DensityMatrix& rho);
ComplexMatrix partial_trace_b(const DensityMatrix& rho);

struct ValidityReport {
  double hermiticity_error;
  double trace_error;
  double min_eigenvalue;
  bool valid;
};
ValidityReport check_density_matrix(const ComplexMatrix& m, double tol = DensityMatrix::kValidityTol);

}  // namespace qent
