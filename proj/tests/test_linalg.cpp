#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "qent/linalg.hpp"
#include "qent/states.hpp"

using namespace qent;

namespace {

ComplexMatrix random_hermitian(std::size_t n, Rng& rng) { return hermitian_part(ginibre(n, n, rng)); }

Eigen::MatrixXcd to_eigen(const ComplexMatrix& m) {
  Eigen::MatrixXcd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

double svd_trace_norm(const ComplexMatrix& m) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(m));
  return svd.singularValues().sum();
}

}  // namespace

TEST_CASE("kron of identities and of a swap") {
  CHECK(kron(ComplexMatrix::identity(2), ComplexMatrix::identity(2)) == ComplexMatrix::identity(4));
  ComplexMatrix x(2, 2);
  x(0, 1) = x(1, 0) = 1.0;
  const auto k = kron(x, ComplexMatrix::identity(2));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const bool anti = (i / 2 != j / 2) && (i % 2 == j % 2);
      CHECK(k(i, j) == cplx(anti ? 1.0 : 0.0));
    }
}

TEST_CASE("kron matches a quadruple loop") {
  Rng rng(11);
  const auto a = ginibre(3, 3, rng), b = ginibre(3, 3, rng);
  const auto k = kron(a, b);
  REQUIRE(k.rows() == 9);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t q = 0; q < 3; ++q) CHECK(k(i * 3 + p, j * 3 + q) == a(i, j) * b(p, q));
}

TEST_CASE("eigenvalues of simple matrices") {
  const double diag[] = {3.0, 1.0, 2.0};
  const auto s = hermitian_eigenvalues(ComplexMatrix::diagonal(diag));
  CHECK(s.eigenvalues == std::vector<double>{1.0, 2.0, 3.0});
  for (double v : hermitian_eigenvalues(ComplexMatrix::identity(5)).eigenvalues) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("eigenvalues respect trace identities and residuals") {
  Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    const auto m = random_hermitian(6, rng);
    const auto e = hermitian_eigen(m);
    double s1 = 0.0, s2 = 0.0;
    for (double v : e.values.eigenvalues) s1 += v, s2 += v * v;
    CHECK(std::is_sorted(e.values.eigenvalues.begin(), e.values.eigenvalues.end()));
    const double tr2 = matmul(m, m).trace().real();
    CHECK(std::abs(s1 - m.trace().real()) <= 1e-10 * std::max(1.0, std::abs(m.trace().real())));
    CHECK(std::abs(s2 - tr2) <= 1e-10 * tr2);
    const double norm = frobenius_norm(m);
    for (std::size_t k = 0; k < 6; ++k) {
      double res = 0.0;
      for (std::size_t i = 0; i < 6; ++i) {
        cplx r = -e.values.eigenvalues[k] * e.vectors(i, k);
        for (std::size_t j = 0; j < 6; ++j) r += m(i, j) * e.vectors(j, k);
        res += std::norm(r);
      }
      CHECK(std::sqrt(res) <= 1e-9 * norm);
    }
  }
}

TEST_CASE("eigensolver error cases") {
  CHECK_THROWS_AS(hermitian_eigenvalues(ComplexMatrix(2, 3)), Error);
  ComplexMatrix m(2, 2);
  m(0, 1) = 1.0;
  try {
    hermitian_eigenvalues(m);
    FAIL("expected NotHermitian");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotHermitian);
  }
}

TEST_CASE("partial transpose") {
  const auto mm = maximally_mixed(2);
  CHECK(max_abs_diff(partial_transpose(mm), mm.mat()) == 0.0);

  const auto bell = bell_phi_minus();
  const auto r = is_ppt(bell);
  CHECK_FALSE(r.ppt);
  CHECK(r.min_pt_eigenvalue == doctest::Approx(-0.5).epsilon(1e-12));

  Rng rng(13);
  for (int t = 0; t < 100; ++t) {
    const auto rho = hs_random_state(3, 3, rng);
    const auto pt = partial_transpose(rho);
    CHECK(max_abs_diff(partial_transpose(pt, 3, 3), rho.mat()) == 0.0);
    CHECK(std::abs(pt.trace().real() - 1.0) < 1e-12);
    CHECK(max_abs_diff(pt, pt.adjoint()) < 1e-15);
    // Block (i, j) of the output is block (j, i) of the input.
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 3; ++k)
          for (std::size_t l = 0; l < 3; ++l) CHECK(pt(i * 3 + k, j * 3 + l) == rho.mat()(j * 3 + k, i * 3 + l));
  }
}

TEST_CASE("maximally mixed state is PPT with eigenvalue 1/d^2") {
  for (std::size_t d : {2, 3, 4}) {
    const auto r = is_ppt(maximally_mixed(d));
    CHECK(r.ppt);
    CHECK(r.min_pt_eigenvalue == doctest::Approx(1.0 / double(d * d)).epsilon(1e-12));
  }
}

TEST_CASE("PT spectrum is invariant under local unitaries") {
  Rng rng(14);
  for (int t = 0; t < 100; ++t) {
    const auto rho = hs_random_state(3, 3, rng);
    const auto ua = haar_unitary(3, rng), ub = haar_unitary(3, rng);
    const auto rot = local_unitary_conjugate(rho, ua, ub);
    const auto a = hermitian_eigenvalues(partial_transpose(rho)).eigenvalues;
    const auto b = hermitian_eigenvalues(partial_transpose(rot)).eigenvalues;
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) < 1e-9);
  }
}

TEST_CASE("CCNR against an SVD oracle") {
  ComplexMatrix zero(4, 4);
  zero(0, 0) = 1.0;
  const DensityMatrix product(2, 2, zero);
  CHECK(realignment_ccnr(product) == doctest::Approx(svd_trace_norm(realign(product))).epsilon(1e-12));
  CHECK(realignment_ccnr(product) == doctest::Approx(1.0).epsilon(1e-12));

  const auto bell = bell_phi_minus();
  CHECK(svd_trace_norm(realign(bell)) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(realignment_ccnr(bell) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(realignment_ccnr(maximally_mixed(2)) == doctest::Approx(0.5).epsilon(1e-12));

  Rng rng(15);
  for (int t = 0; t < 20; ++t) {
    const auto rho = hs_random_state(3, 3, rng);
    CHECK(realignment_ccnr(rho) == doctest::Approx(svd_trace_norm(realign(rho))).epsilon(1e-10));
    // Realignment entries follow the index rule directly.
    const auto r = realign(rho);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 3; ++k)
          for (std::size_t l = 0; l < 3; ++l) CHECK(r(i * 3 + j, k * 3 + l) == rho.mat()(i * 3 + k, j * 3 + l));
  }
}

TEST_CASE("von Neumann entropy") {
  ComplexMatrix pure(4, 4);
  pure(2, 2) = 1.0;
  CHECK(std::abs(von_neumann_entropy(DensityMatrix(2, 2, pure))) < 1e-12);
  CHECK(von_neumann_entropy(maximally_mixed(3)) == doctest::Approx(std::log(9.0)).epsilon(1e-12));
  const double half[] = {0.5, 0.5, 0.0, 0.0};
  CHECK(von_neumann_entropy(DensityMatrix(2, 2, ComplexMatrix::diagonal(half))) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("elementwise L1") {
  ComplexMatrix a(1, 1), b(1, 1);
  a(0, 0) = 1.0;
  CHECK(elementwise_l1(a, b) == 0.5);
  CHECK(elementwise_l1(a, a) == 0.0);
  CHECK_THROWS_AS(elementwise_l1(ComplexMatrix(2, 2), ComplexMatrix(3, 3)), Error);

  Rng rng(16);
  for (int t = 0; t < 10; ++t) {
    const auto x = ginibre(9, 9, rng), y = ginibre(9, 9, rng);
    double s = 0.0;
    for (std::size_t i = 0; i < 9; ++i)
      for (std::size_t j = 0; j < 9; ++j)
        s += std::abs(x(i, j).real() - y(i, j).real()) + std::abs(x(i, j).imag() - y(i, j).imag());
    CHECK(std::abs(elementwise_l1(x, y) - s / 162.0) < 1e-15);
    CHECK(elementwise_l1(x, y) == elementwise_l1(y, x));
  }
}

TEST_CASE("density matrix validation") {
  ComplexMatrix m = ComplexMatrix::identity(4);
  CHECK_THROWS_AS(DensityMatrix(2, 2, m), Error);  // trace 4
  m *= cplx(0.25);
  CHECK_NOTHROW(DensityMatrix(2, 2, m));
  const double neg[] = {1.5, -0.5, 0.0, 0.0};
  CHECK_FALSE(check_density_matrix(ComplexMatrix::diagonal(neg)).valid);
}

TEST_CASE("partial traces of a product state") {
  Rng rng(17);
  const auto a = hs_random_state(3, rng), b = hs_random_state(3, rng);
  const DensityMatrix prod(3, 3, kron(a.mat(), b.mat()));
  CHECK(max_abs_diff(partial_trace_b(prod), a.mat()) < 1e-14);
  CHECK(max_abs_diff(partial_trace_a(prod), b.mat()) < 1e-14);
}

TEST_CASE("singular values against Eigen, including rank-deficient inputs") {
  Rng rng(18);
  auto compare = [](const ComplexMatrix& m) {
    const auto ours = singular_values(m);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(to_eigen(m));
    const auto ref = svd.singularValues();
    REQUIRE(ours.size() == std::size_t(ref.size()));
    for (std::size_t k = 0; k < ours.size(); ++k) CHECK(std::abs(ours[k] - ref(k)) < 1e-12 * std::max(1.0, ref(0)));
  };
  for (int t = 0; t < 20; ++t) compare(ginibre(7, 7, rng));
  compare(ginibre(5, 8, rng));
  compare(ginibre(8, 5, rng));
  // Rank one with duplicated columns.
  const auto v = ginibre(6, 1, rng);
  compare(matmul(v, v.adjoint()));
  for (double a : {0.1, 0.5, 0.9}) compare(realign(horodecki_3x3(a)));
  compare(realign(tiles_upb_state()));
}

TEST_CASE("QR reconstructs its input") {
  Rng rng(19);
  const auto m = ginibre(6, 6, rng);
  const auto [q, r] = qr_decompose(m);
  CHECK(unitarity_error(q) < 1e-13);
  CHECK(max_abs_diff(matmul(q, r), m) < 1e-12);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(r(i, j)) < 1e-13);
}
