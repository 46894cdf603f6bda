#include <doctest.h>

#include <cmath>

#include "qent/states.hpp"

using namespace qent;

namespace {

double purity(const DensityMatrix& rho) { return matmul(rho.mat(), rho.mat()).trace().real(); }

bool is_diagonal_in(const ComplexMatrix& m, const ComplexMatrix& u, double tol) {
  const auto rot = matmul(matmul(u.adjoint(), m), u);
  for (std::size_t i = 0; i < rot.rows(); ++i)
    for (std::size_t j = 0; j < rot.cols(); ++j)
      if (i != j && std::abs(rot(i, j)) > tol) return false;
  return true;
}

}  // namespace

TEST_CASE("family names round-trip") {
  for (auto f : {StateFamily::MixSep, StateFamily::Npt, StateFamily::CC, StateFamily::CQ, StateFamily::QC,
                 StateFamily::BoundCandidate, StateFamily::Named})
    CHECK(parse_family(family_name(f)) == f);
  CHECK_FALSE(parse_family("bogus").has_value());
}

TEST_CASE("Hilbert-Schmidt states are valid with the expected moments") {
  Rng rng(21);
  constexpr int kDraws = 2000;
  const std::size_t n = 9;
  ComplexMatrix mean(n, n);
  double purity_sum = 0.0;
  for (int t = 0; t < kDraws; ++t) {
    const auto rho = hs_random_state(3, 3, rng);
    const auto v = check_density_matrix(rho.mat(), 1e-12);
    REQUIRE(v.valid);
    mean += rho.mat();
    purity_sum += purity(rho);
  }
  mean *= cplx(1.0 / kDraws);
  CHECK(max_abs_diff(mean, maximally_mixed(3).mat()) < 1e-2);
  // E[Tr rho^2] = 2N / (N^2 + 1) for square Ginibre factors.
  CHECK(purity_sum / kDraws == doctest::Approx(18.0 / 82.0).epsilon(0.02));
}

TEST_CASE("Haar unitaries are unitary with uniform column weights") {
  Rng rng(22);
  constexpr int kDraws = 3000;
  double weight = 0.0, trace2 = 0.0;
  for (int t = 0; t < kDraws; ++t) {
    const auto u = haar_unitary(4, rng);
    REQUIRE(unitarity_error(u) < 1e-12);
    weight += std::norm(u(0, 0));
    trace2 += std::norm(u.trace());
  }
  CHECK(weight / kDraws == doctest::Approx(0.25).epsilon(0.05));
  // E|Tr U|^2 = 1 under the Haar measure.
  CHECK(trace2 / kDraws == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("flat Dirichlet probability vectors") {
  Rng rng(23);
  constexpr int kDraws = 20000;
  double first = 0.0, first2 = 0.0;
  for (int t = 0; t < kDraws; ++t) {
    const auto p = random_prob_vector(4, rng);
    double s = 0.0;
    for (double x : p) {
      CHECK(x >= 0.0);
      s += x;
    }
    CHECK(std::abs(s - 1.0) < 1e-14);
    first += p[0];
    first2 += p[0] * p[0];
  }
  // Dirichlet(1,1,1,1): mean 1/4, second moment 2/20.
  CHECK(first / kDraws == doctest::Approx(0.25).epsilon(0.02));
  CHECK(first2 / kDraws == doctest::Approx(0.1).epsilon(0.03));
  CHECK(random_prob_vector(1, rng) == std::vector<double>{1.0});
  CHECK_THROWS_AS(random_prob_vector(0, rng), Error);
}

TEST_CASE("separable samples are PPT and satisfy CCNR") {
  Rng rng(24);
  for (std::size_t d : {2, 3}) {
    for (int t = 0; t < 300; ++t) {
      const auto rho = separable_sample({d, 3, 0}, rng);
      CHECK(check_density_matrix(rho.mat(), 1e-12).valid);
      CHECK(is_ppt(rho).ppt);
      CHECK(realignment_ccnr(rho) <= 1.0 + 1e-9);
    }
  }
  CHECK_THROWS_AS(separable_sample({3, 0, 0}, rng), Error);
}

TEST_CASE("separable sampler with m_max = 1 gives product states") {
  Rng rng(25);
  for (int t = 0; t < 20; ++t) {
    const auto rho = separable_sample({3, 1, 0}, rng);
    const DensityMatrix a(3, 1, partial_trace_b(rho));
    const DensityMatrix b(3, 1, partial_trace_a(rho));
    CHECK(max_abs_diff(kron(a.mat(), b.mat()), rho.mat()) < 1e-14);
  }
}

TEST_CASE("NPT sampler") {
  Rng rng(26);
  for (int t = 0; t < 200; ++t) CHECK_FALSE(is_ppt(npt_sample(3, rng)).ppt);
  CHECK_THROWS_AS(npt_sample(1, rng), Error);
}

TEST_CASE("classical-classical states are diagonal in a product basis") {
  Rng rng(27);
  for (int t = 0; t < 20; ++t) {
    // Replaying the generator recovers the bases drawn by the sampler.
    Rng replay = rng;
    const auto rho = cc_sample(3, rng);
    const auto ua = haar_unitary(3, replay);
    const auto ub = haar_unitary(3, replay);
    CHECK(is_diagonal_in(rho.mat(), kron(ua, ub), 1e-13));
    CHECK(is_ppt(rho).ppt);
  }
}

TEST_CASE("CQ and QC states have a classical marginal") {
  Rng rng(28);
  for (int t = 0; t < 20; ++t) {
    Rng replay = rng;
    const auto cq = cq_sample(3, rng);
    const auto ua = haar_unitary(3, replay);
    CHECK(is_diagonal_in(partial_trace_b(cq), ua, 1e-13));
    CHECK(is_ppt(cq).ppt);

    replay = rng;
    const auto qc = qc_sample(3, rng);
    const auto ub = haar_unitary(3, replay);
    CHECK(is_diagonal_in(partial_trace_a(qc), ub, 1e-13));
    CHECK(is_ppt(qc).ppt);
  }
}

TEST_CASE("local unitary conjugation preserves the spectrum") {
  Rng rng(29);
  const auto rho = hs_random_state(3, 3, rng);
  const auto rot = local_unitary_conjugate(rho, haar_unitary(3, rng), haar_unitary(3, rng));
  const auto a = hermitian_eigenvalues(rho.mat()).eigenvalues;
  const auto b = hermitian_eigenvalues(rot.mat()).eigenvalues;
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::abs(a[k] - b[k]) < 1e-12);
  CHECK(realignment_ccnr(rot) == doctest::Approx(realignment_ccnr(rho)).epsilon(1e-10));
  CHECK_THROWS_AS(local_unitary_conjugate(rho, haar_unitary(2, rng), haar_unitary(3, rng)), Error);
  ComplexMatrix not_unitary = ComplexMatrix::identity(3);
  not_unitary(0, 0) = 2.0;
  CHECK_THROWS_AS(local_unitary_conjugate(rho, not_unitary, haar_unitary(3, rng)), Error);
}

TEST_CASE("Horodecki family is PPT and entangled by realignment") {
  for (int k = 1; k <= 9; ++k) {
    const auto h = horodecki_3x3(0.1 * k);
    CHECK(std::abs(h.mat().trace().real() - 1.0) < 1e-14);
    CHECK(is_ppt(h, 1e-12).ppt);
    CHECK(realignment_ccnr(h) > 1.0);
  }
  CHECK_THROWS_AS(horodecki_3x3(0.0), Error);
  CHECK_THROWS_AS(horodecki_3x3(1.0), Error);
}

TEST_CASE("Tiles UPB state") {
  const auto t = tiles_upb_state();
  const auto spec = hermitian_eigenvalues(t.mat()).eigenvalues;
  // Projector of rank 4 scaled by 1/4.
  for (std::size_t k = 0; k < 5; ++k) CHECK(std::abs(spec[k]) < 1e-14);
  for (std::size_t k = 5; k < 9; ++k) CHECK(spec[k] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(is_ppt(t, 1e-12).ppt);
  CHECK(realignment_ccnr(t) == doctest::Approx(1.0874).epsilon(1e-4));
}

TEST_CASE("generate_set is per-item deterministic and thread independent") {
  const auto a = generate_set(StateFamily::MixSep, 3, 40, 2, 77, streams::kTrainData, 1);
  const auto b = generate_set(StateFamily::MixSep, 3, 40, 2, 77, streams::kTrainData, 4);
  const auto prefix = generate_set(StateFamily::MixSep, 3, 10, 2, 77, streams::kTrainData, 1);
  REQUIRE(a.states.size() == 40);
  CHECK(a.states == b.states);
  for (std::size_t i = 0; i < 10; ++i) CHECK(a.states[i] == prefix.states[i]);
  const auto other = generate_set(StateFamily::MixSep, 3, 10, 2, 77, streams::kCalibration, 1);
  CHECK_FALSE(other.states[0] == a.states[0]);
  CHECK_THROWS_AS(generate_set(StateFamily::Named, 3, 1, 2, 0, 0, 1), Error);
}
