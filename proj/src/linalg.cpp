#include "qent/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace qent {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSquare: return "NonSquare";
    case ErrorCode::NotHermitian: return "NotHermitian";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::DegenerateDraw: return "DegenerateDraw";
    case ErrorCode::RejectionBudgetExceeded: return "RejectionBudgetExceeded";
    case ErrorCode::ParamOutOfRange: return "ParamOutOfRange";
    case ErrorCode::NotUnitary: return "NotUnitary";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::UninitializedParameters: return "UninitializedParameters";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::DegenerateBranch: return "DegenerateBranch";
    case ErrorCode::NoFeasibleState: return "NoFeasibleState";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Format: return "Format";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// ComplexMatrix

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::ShapeMismatch, "entry count does not match rows*cols");
  }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

ComplexMatrix ComplexMatrix::diagonal(std::span<const double> values) {
  ComplexMatrix m(values.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
  return m;
}

ComplexMatrix ComplexMatrix::adjoint() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = std::conj((*this)(r, c));
  return out;
}

ComplexMatrix ComplexMatrix::transpose() const {
  ComplexMatrix out(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out(c, r) = (*this)(r, c);
  return out;
}

cplx ComplexMatrix::trace() const {
  if (!is_square()) throw Error(ErrorCode::NonSquare, "trace of a non-square matrix");
  cplx t = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
  return t;
}

bool ComplexMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw Error(ErrorCode::ShapeMismatch, "matrix addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) throw Error(ErrorCode::ShapeMismatch, "matrix subtraction");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) {
  for (auto& z : data_) z *= s;
  return *this;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(ComplexMatrix a, cplx s) { return a *= s; }
ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::ShapeMismatch, "matmul inner dimensions differ");
  ComplexMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cplx aik = a(i, k);
      if (aik == cplx(0.0)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorCode::ShapeMismatch, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

ComplexMatrix hermitian_part(const ComplexMatrix& m) {
  if (!m.is_square()) throw Error(ErrorCode::NonSquare, "hermitian_part");
  ComplexMatrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) s(i, j) = 0.5 * (m(i, j) + std::conj(m(j, i)));
  return s;
}

double unitarity_error(const ComplexMatrix& u) {
  if (!u.is_square()) throw Error(ErrorCode::NonSquare, "unitarity_error");
  return max_abs_diff(matmul(u.adjoint(), u), ComplexMatrix::identity(u.rows()));
}

double frobenius_norm(const ComplexMatrix& m) {
  double s = 0.0;
  for (const auto& z : m.data()) s += std::norm(z);
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// DensityMatrix

DensityMatrix::DensityMatrix(std::size_t dim_a, std::size_t dim_b, ComplexMatrix mat, double tol)
    : dim_a_(dim_a), dim_b_(dim_b), mat_(std::move(mat)) {
  if (!mat_.is_square() || mat_.rows() != dim_a * dim_b) {
    throw Error(ErrorCode::DimensionMismatch, "matrix side must equal dimA*dimB");
  }
  if (!mat_.all_finite()) throw Error(ErrorCode::InvalidState, "non-finite entries");
  const auto report = check_density_matrix(mat_, tol);
  if (!report.valid) {
    throw Error(ErrorCode::InvalidState,
                "hermiticity error " + std::to_string(report.hermiticity_error) + ", trace error " +
                    std::to_string(report.trace_error) + ", min eigenvalue " + std::to_string(report.min_eigenvalue));
  }
}

DensityMatrix DensityMatrix::trusted(std::size_t dim_a, std::size_t dim_b, ComplexMatrix mat) {
  if (!mat.is_square() || mat.rows() != dim_a * dim_b) {
    throw Error(ErrorCode::DimensionMismatch, "matrix side must equal dimA*dimB");
  }
  DensityMatrix rho;
  rho.dim_a_ = dim_a;
  rho.dim_b_ = dim_b;
  rho.mat_ = std::move(mat);
  return rho;
}

ValidityReport check_density_matrix(const ComplexMatrix& m, double tol) {
  ValidityReport report{};
  if (!m.is_square()) throw Error(ErrorCode::NonSquare, "density matrix must be square");
  report.hermiticity_error = max_abs_diff(m, m.adjoint());
  report.trace_error = std::abs(m.trace() - cplx(1.0));
  if (report.hermiticity_error > 1e-8) {
    report.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    report.valid = false;
    return report;
  }
  report.min_eigenvalue = hermitian_eigenvalues(m).min();
  report.valid = report.hermiticity_error <= tol && report.trace_error <= tol && report.min_eigenvalue >= -tol;
  return report;
}

// ---------------------------------------------------------------------------
// kron

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const cplx aij = a(i, j);
      for (std::size_t k = 0; k < b.rows(); ++k)
        for (std::size_t l = 0; l < b.cols(); ++l) out(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Hermitian eigensolver: Householder reduction to real tridiagonal form, then
// implicit-shift QL.

namespace {

constexpr int kMaxQlIterations = 60;

struct Tridiagonal {
  std::vector<double> diag;
  std::vector<double> sub;  // sub[i] couples i and i+1; sub[n-1] = 0
  ComplexMatrix basis;      // A = basis * T * basis^dagger (only when requested)
};

ComplexMatrix symmetrized(const ComplexMatrix& m) {
  if (!m.is_square()) throw Error(ErrorCode::NonSquare, "eigenproblem needs a square matrix");
  if (!m.all_finite()) throw Error(ErrorCode::InvalidState, "non-finite matrix entries");
  const double herm = max_abs_diff(m, m.adjoint());
  if (herm > 1e-8) throw Error(ErrorCode::NotHermitian, "deviation " + std::to_string(herm));
  return hermitian_part(m);
}

Tridiagonal tridiagonalize(ComplexMatrix a, bool want_basis) {
  const std::size_t n = a.rows();
  ComplexMatrix q = want_basis ? ComplexMatrix::identity(n) : ComplexMatrix();
  std::vector<cplx> v(n), p(n), w(n);

  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t m = n - k - 1;
    double xnorm2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) xnorm2 += std::norm(a(k + 1 + i, k));
    const double xnorm = std::sqrt(xnorm2);
    if (xnorm == 0.0) continue;
    const cplx x0 = a(k + 1, k);
    const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx(1.0);
    const cplx alpha = -phase * xnorm;

    for (std::size_t i = 0; i < m; ++i) v[i] = a(k + 1 + i, k);
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) vnorm2 += std::norm(v[i]);
    if (vnorm2 == 0.0) continue;
    const double inv = 1.0 / std::sqrt(vnorm2);
    for (std::size_t i = 0; i < m; ++i) v[i] *= inv;

    // Trailing block update B <- H B H with H = I - 2 v v^dagger.
    for (std::size_t i = 0; i < m; ++i) {
      cplx s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += a(k + 1 + i, k + 1 + j) * v[j];
      p[i] = s;
    }
    cplx kappa = 0.0;
    for (std::size_t i = 0; i < m; ++i) kappa += std::conj(v[i]) * p[i];
    const double kr = kappa.real();
    for (std::size_t i = 0; i < m; ++i) w[i] = p[i] - kr * v[i];
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        a(k + 1 + i, k + 1 + j) -= 2.0 * (v[i] * std::conj(w[j]) + w[i] * std::conj(v[j]));

    a(k + 1, k) = alpha;
    a(k, k + 1) = std::conj(alpha);
    for (std::size_t i = 1; i < m; ++i) {
      a(k + 1 + i, k) = 0.0;
      a(k, k + 1 + i) = 0.0;
    }

    if (want_basis) {
      for (std::size_t r = 0; r < n; ++r) {
        cplx s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += q(r, k + 1 + j) * v[j];
        for (std::size_t j = 0; j < m; ++j) q(r, k + 1 + j) -= 2.0 * s * std::conj(v[j]);
      }
    }
  }

  Tridiagonal t;
  t.diag.resize(n);
  t.sub.assign(n, 0.0);
  std::vector<cplx> phase(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) t.diag[i] = a(i, i).real();
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const cplx e = a(k + 1, k);
    const double mag = std::abs(e);
    t.sub[k] = mag;
    phase[k + 1] = mag > 0.0 ? phase[k] * (e / mag) : phase[k];
  }
  if (want_basis) {
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) q(r, c) *= phase[c];
    t.basis = std::move(q);
  }
  return t;
}

// Implicit QL on a real symmetric tridiagonal matrix. z (n x n, row-major,
// possibly empty) accumulates the rotations.
void tridiagonal_ql(std::vector<double>& d, std::vector<double>& e, std::vector<double>* z) {
  const int n = static_cast<int>(d.size());
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= std::numeric_limits<double>::epsilon() * dd) break;
      }
      if (m != l) {
        if (iter++ == kMaxQlIterations) throw Error(ErrorCode::NoConvergence, "tridiagonal QL iteration cap");
        double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
        double r = std::hypot(g, 1.0);
        g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
        double s = 1.0, c = 1.0, p = 0.0;
        int i;
        for (i = m - 1; i >= l; --i) {
          double f = s * e[i];
          const double b = c * e[i];
          r = std::hypot(f, g);
          e[i + 1] = r;
          if (r == 0.0) {
            d[i + 1] -= p;
            e[m] = 0.0;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + 2.0 * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          if (z) {
            for (int k = 0; k < n; ++k) {
              double& zk1 = (*z)[static_cast<std::size_t>(k * n + i + 1)];
              double& zk0 = (*z)[static_cast<std::size_t>(k * n + i)];
              f = zk1;
              zk1 = s * zk0 + c * f;
              zk0 = c * zk0 - s * f;
            }
          }
        }
        if (r == 0.0 && i >= l) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = 0.0;
      }
    } while (m != l);
  }
}

}  // namespace

Spectrum hermitian_eigenvalues(const ComplexMatrix& m) {
  auto t = tridiagonalize(symmetrized(m), false);
  tridiagonal_ql(t.diag, t.sub, nullptr);
  std::sort(t.diag.begin(), t.diag.end());
  return Spectrum{std::move(t.diag)};
}

EigenDecomposition hermitian_eigen(const ComplexMatrix& m) {
  const std::size_t n = m.rows();
  auto t = tridiagonalize(symmetrized(m), true);
  std::vector<double> z(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) z[i * n + i] = 1.0;
  tridiagonal_ql(t.diag, t.sub, &z);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return t.diag[x] < t.diag[y]; });

  EigenDecomposition out;
  out.values.eigenvalues.resize(n);
  out.vectors = ComplexMatrix(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    const std::size_t src = order[c];
    out.values.eigenvalues[c] = t.diag[src];
    for (std::size_t r = 0; r < n; ++r) {
      cplx s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += t.basis(r, k) * z[k * n + src];
      out.vectors(r, c) = s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SVD (singular values only), one-sided Jacobi.

std::vector<double> singular_values(const ComplexMatrix& input) {
  ComplexMatrix a = input.rows() >= input.cols() ? input : input.adjoint();
  if (!a.all_finite()) throw Error(ErrorCode::InvalidState, "non-finite matrix entries");
  const std::size_t rows = a.rows();
  const std::size_t cols = a.cols();
  constexpr int kMaxSweeps = 80;
  const double eps = std::numeric_limits<double>::epsilon();
  double fro2 = 0.0;
  for (const auto& z : a.data()) fro2 += std::norm(z);
  // Columns at roundoff level relative to the whole matrix count as zero.
  const double negligible = fro2 * std::pow(64.0 * eps, 2) * static_cast<double>(cols);

  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        double alpha = 0.0, beta = 0.0;
        cplx gamma = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
          alpha += std::norm(a(r, p));
          beta += std::norm(a(r, q));
          gamma += std::conj(a(r, p)) * a(r, q);
        }
        const double g = std::abs(gamma);
        if (g == 0.0 || g <= eps * std::sqrt(alpha * beta)) continue;
        if (alpha <= negligible || beta <= negligible) continue;
        converged = false;
        const cplx phase = gamma / g;
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < rows; ++r) {
          const cplx ap = a(r, p);
          const cplx aq = a(r, q) * std::conj(phase);
          a(r, p) = c * ap - s * aq;
          a(r, q) = s * ap + c * aq;
        }
      }
    }
  }
  if (!converged) throw Error(ErrorCode::NoConvergence, "one-sided Jacobi SVD sweep cap");

  std::vector<double> sv(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < rows; ++r) s += std::norm(a(r, c));
    sv[c] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

// ---------------------------------------------------------------------------
// QR

QrResult qr_decompose(const ComplexMatrix& m) {
  if (!m.is_square()) throw Error(ErrorCode::NonSquare, "qr_decompose expects a square matrix");
  const std::size_t n = m.rows();
  ComplexMatrix r = m;
  ComplexMatrix q = ComplexMatrix::identity(n);
  std::vector<cplx> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t len = n - k;
    double xnorm2 = 0.0;
    for (std::size_t i = 0; i < len; ++i) xnorm2 += std::norm(r(k + i, k));
    const double xnorm = std::sqrt(xnorm2);
    if (xnorm == 0.0) continue;
    const cplx x0 = r(k, k);
    const cplx phase = std::abs(x0) > 0.0 ? x0 / std::abs(x0) : cplx(1.0);
    const cplx alpha = -phase * xnorm;
    for (std::size_t i = 0; i < len; ++i) v[i] = r(k + i, k);
    v[0] -= alpha;
    double vnorm2 = 0.0;
    for (std::size_t i = 0; i < len; ++i) vnorm2 += std::norm(v[i]);
    if (vnorm2 == 0.0) continue;
    const double inv = 1.0 / std::sqrt(vnorm2);
    for (std::size_t i = 0; i < len; ++i) v[i] *= inv;

    for (std::size_t c = k; c < n; ++c) {
      cplx s = 0.0;
      for (std::size_t i = 0; i < len; ++i) s += std::conj(v[i]) * r(k + i, c);
      for (std::size_t i = 0; i < len; ++i) r(k + i, c) -= 2.0 * v[i] * s;
    }
    for (std::size_t i = 1; i < len; ++i) r(k + i, k) = 0.0;
    for (std::size_t row = 0; row < n; ++row) {
      cplx s = 0.0;
      for (std::size_t i = 0; i < len; ++i) s += q(row, k + i) * v[i];
      for (std::size_t i = 0; i < len; ++i) q(row, k + i) -= 2.0 * s * std::conj(v[i]);
    }
  }
  return {std::move(q), std::move(r)};
}

// ---------------------------------------------------------------------------
// Entanglement criteria

ComplexMatrix partial_transpose(const ComplexMatrix& m, std::size_t dim_a, std::size_t dim_b) {
  if (!m.is_square() || m.rows() != dim_a * dim_b) throw Error(ErrorCode::DimensionMismatch, "partial_transpose");
  ComplexMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < dim_a; ++i)
    for (std::size_t j = 0; j < dim_a; ++j)
      for (std::size_t k = 0; k < dim_b; ++k)
        for (std::size_t l = 0; l < dim_b; ++l) out(i * dim_b + k, j * dim_b + l) = m(j * dim_b + k, i * dim_b + l);
  return out;
}

ComplexMatrix partial_transpose(const DensityMatrix& rho) {
  return partial_transpose(rho.mat(), rho.dim_a(), rho.dim_b());
}

PptResult is_ppt(const DensityMatrix& rho, double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::ParamOutOfRange, "PPT tolerance must be positive");
  const double min_eig = hermitian_eigenvalues(partial_transpose(rho)).min();
  return {min_eig >= -tol, min_eig};
}

ComplexMatrix realign(const DensityMatrix& rho) {
  const std::size_t da = rho.dim_a();
  const std::size_t db = rho.dim_b();
  const auto& m = rho.mat();
  ComplexMatrix out(da * da, db * db);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < da; ++j)
      for (std::size_t k = 0; k < db; ++k)
        for (std::size_t l = 0; l < db; ++l) out(i * da + j, k * db + l) = m(i * db + k, j * db + l);
  return out;
}

double realignment_ccnr(const DensityMatrix& rho) {
  if (rho.dim_a() != rho.dim_b()) throw Error(ErrorCode::DimensionMismatch, "CCNR expects equal local dimensions");
  const auto sv = singular_values(realign(rho));
  return std::accumulate(sv.begin(), sv.end(), 0.0);
}

double von_neumann_entropy(const DensityMatrix& rho) {
  const auto spec = hermitian_eigenvalues(rho.mat());
  double s = 0.0;
  for (double lambda : spec.eigenvalues) {
    if (lambda > 0.0) s -= lambda * std::log(lambda);
  }
  return std::max(s, 0.0);
}

double elementwise_l1(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorCode::ShapeMismatch, "elementwise_l1");
  if (a.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const cplx diff = a.data()[i] - b.data()[i];
    s += std::abs(diff.real()) + std::abs(diff.imag());
  }
  return s / (2.0 * static_cast<double>(a.size()));
}

ComplexMatrix partial_trace_a(const DensityMatrix& rho) {
  const std::size_t da = rho.dim_a(), db = rho.dim_b();
  ComplexMatrix out(db, db);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t k = 0; k < db; ++k)
      for (std::size_t l = 0; l < db; ++l) out(k, l) += rho.mat()(i * db + k, i * db + l);
  return out;
}

ComplexMatrix partial_trace_b(const DensityMatrix& rho) {
  const std::size_t da = rho.dim_a(), db = rho.dim_b();
  ComplexMatrix out(da, da);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < da; ++j)
      for (std::size_t k = 0; k < db; ++k) out(i, j) += rho.mat()(i * db + k, j * db + k);
  return out;
}

}  // namespace qent
