#include "qent/states.hpp"

#include <cmath>
#include <mutex>
#include <string>

#include "qent/parallel.hpp"

namespace qent {

std::string_view family_name(StateFamily f) {
  switch (f) {
    case StateFamily::MixSep: return "mix_sep";
    case StateFamily::Npt: return "npt";
    case StateFamily::CC: return "cc";
    case StateFamily::CQ: return "cq";
    case StateFamily::QC: return "qc";
    case StateFamily::BoundCandidate: return "bound_candidate";
    case StateFamily::Named: return "named";
  }
  return "unknown";
}

std::optional<StateFamily> parse_family(std::string_view name) {
  for (auto f : {StateFamily::MixSep, StateFamily::Npt, StateFamily::CC, StateFamily::CQ, StateFamily::QC,
                 StateFamily::BoundCandidate, StateFamily::Named}) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

ComplexMatrix ginibre(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  ComplexMatrix g(rows, cols);
  for (auto& z : g.data()) {
    const double re = normal(rng);
    const double im = normal(rng);
    z = cplx(re, im);
  }
  return g;
}

DensityMatrix hs_random_state(std::size_t dim_a, std::size_t dim_b, Rng& rng) {
  const std::size_t n = dim_a * dim_b;
  if (n == 0) throw Error(ErrorCode::ParamOutOfRange, "hs_random_state needs dim >= 1");
  constexpr int kMaxDraws = 100;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    const auto g = ginibre(n, n, rng);
    auto m = matmul(g, g.adjoint());
    const double tr = m.trace().real();
    if (!(tr >= 1e-300)) continue;
    m *= 1.0 / tr;
    return DensityMatrix::trusted(dim_a, dim_b, hermitian_part(m));
  }
  throw Error(ErrorCode::DegenerateDraw, "Tr(GG^dagger) vanished repeatedly");
}

ComplexMatrix haar_unitary(std::size_t dim, Rng& rng) {
  if (dim == 0) throw Error(ErrorCode::ParamOutOfRange, "haar_unitary needs dim >= 1");
  auto [q, r] = qr_decompose(ginibre(dim, dim, rng));
  for (std::size_t c = 0; c < dim; ++c) {
    const cplx rc = r(c, c);
    const cplx phase = std::abs(rc) > 0.0 ? rc / std::abs(rc) : cplx(1.0);
    for (std::size_t row = 0; row < dim; ++row) q(row, c) *= phase;
  }
  return q;
}

std::vector<double> random_prob_vector(std::size_t m, Rng& rng) {
  if (m == 0) throw Error(ErrorCode::ParamOutOfRange, "random_prob_vector needs m >= 1");
  if (m == 1) return {1.0};
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> p(m);
  double total = 0.0;
  for (auto& x : p) {
    x = expo(rng);
    total += x;
  }
  for (auto& x : p) x /= total;
  return p;
}

DensityMatrix separable_sample(const SeparableSamplerConfig& cfg, Rng& rng) {
  if (cfg.d < 2 || cfg.m_max < 1) throw Error(ErrorCode::InvalidConfig, "separable sampler needs d >= 2, m_max >= 1");
  std::uniform_int_distribution<std::size_t> pick(1, cfg.m_max);
  const std::size_t m = pick(rng);
  const auto p = random_prob_vector(m, rng);
  const std::size_t n = cfg.d * cfg.d;
  ComplexMatrix rho(n, n);
  for (std::size_t i = 0; i < m; ++i) {
    const auto a = hs_random_state(cfg.d, rng);
    const auto b = hs_random_state(cfg.d, rng);
    rho += kron(a.mat(), b.mat()) * cplx(p[i]);
  }
  return DensityMatrix::trusted(cfg.d, cfg.d, hermitian_part(rho));
}

DensityMatrix npt_sample(std::size_t d, Rng& rng) {
  if (d < 2) throw Error(ErrorCode::ParamOutOfRange, "npt_sample needs d >= 2");
  for (std::size_t attempt = 0; attempt < kNptRejectionBudget; ++attempt) {
    auto rho = hs_random_state(d, d, rng);
    if (!is_ppt(rho).ppt) return rho;
  }
  throw Error(ErrorCode::RejectionBudgetExceeded, "no NPT state in " + std::to_string(kNptRejectionBudget) + " draws");
}

namespace {

ComplexMatrix projector_on_column(const ComplexMatrix& u, std::size_t col) {
  const std::size_t n = u.rows();
  ComplexMatrix p(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) p(r, c) = u(r, col) * std::conj(u(c, col));
  return p;
}

}  // namespace

DensityMatrix cc_sample(std::size_t d, Rng& rng) {
  if (d < 2) throw Error(ErrorCode::ParamOutOfRange, "cc_sample needs d >= 2");
  const auto ua = haar_unitary(d, rng);
  const auto ub = haar_unitary(d, rng);
  const auto p = random_prob_vector(d * d, rng);
  const auto u = kron(ua, ub);
  const auto rho = matmul(matmul(u, ComplexMatrix::diagonal(p)), u.adjoint());
  return DensityMatrix::trusted(d, d, hermitian_part(rho));
}

DensityMatrix cq_sample(std::size_t d, Rng& rng) {
  if (d < 2) throw Error(ErrorCode::ParamOutOfRange, "cq_sample needs d >= 2");
  const auto ua = haar_unitary(d, rng);
  const auto p = random_prob_vector(d, rng);
  ComplexMatrix rho(d * d, d * d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto rb = hs_random_state(d, rng);
    rho += kron(projector_on_column(ua, i), rb.mat()) * cplx(p[i]);
  }
  return DensityMatrix::trusted(d, d, hermitian_part(rho));
}

DensityMatrix qc_sample(std::size_t d, Rng& rng) {
  if (d < 2) throw Error(ErrorCode::ParamOutOfRange, "qc_sample needs d >= 2");
  const auto ub = haar_unitary(d, rng);
  const auto p = random_prob_vector(d, rng);
  ComplexMatrix rho(d * d, d * d);
  for (std::size_t j = 0; j < d; ++j) {
    const auto ra = hs_random_state(d, rng);
    rho += kron(ra.mat(), projector_on_column(ub, j)) * cplx(p[j]);
  }
  return DensityMatrix::trusted(d, d, hermitian_part(rho));
}

DensityMatrix local_unitary_conjugate(const DensityMatrix& rho, const ComplexMatrix& u_a, const ComplexMatrix& u_b) {
  if (u_a.rows() != rho.dim_a() || u_b.rows() != rho.dim_b() || !u_a.is_square() || !u_b.is_square()) {
    throw Error(ErrorCode::DimensionMismatch, "local unitary dimensions do not match the state");
  }
  if (unitarity_error(u_a) > 1e-10 || unitarity_error(u_b) > 1e-10) {
    throw Error(ErrorCode::NotUnitary, "local_unitary_conjugate");
  }
  const auto u = kron(u_a, u_b);
  const auto out = matmul(matmul(u, rho.mat()), u.adjoint());
  return DensityMatrix::trusted(rho.dim_a(), rho.dim_b(), hermitian_part(out));
}

DensityMatrix horodecki_3x3(double a) {
  if (!(a > 0.0 && a < 1.0)) throw Error(ErrorCode::ParamOutOfRange, "horodecki_3x3 needs a in (0, 1)");
  ComplexMatrix m(9, 9);
  for (std::size_t i : {0, 4, 8})
    for (std::size_t j : {0, 4, 8}) m(i, j) = a;
  for (std::size_t i : {1, 2, 3, 5, 7}) m(i, i) = a;
  m(6, 6) = (1.0 + a) / 2.0;
  m(8, 8) = (1.0 + a) / 2.0;
  m(6, 8) = std::sqrt(1.0 - a * a) / 2.0;
  m(8, 6) = m(6, 8);
  m *= 1.0 / (8.0 * a + 1.0);
  return DensityMatrix(3, 3, std::move(m));
}

DensityMatrix tiles_upb_state() {
  const double s = 1.0 / std::sqrt(2.0);
  using Vec = std::vector<double>;
  auto product = [](const Vec& x, const Vec& y) {
    Vec v(9);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) v[i * 3 + j] = x[i] * y[j];
    return v;
  };
  const Vec e0{1, 0, 0}, e2{0, 0, 1};
  const Vec m01{s, -s, 0}, m12{0, s, -s};
  const Vec uniform{1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)};
  const std::vector<Vec> upb{product(e0, m01), product(m01, e2), product(e2, m12), product(m12, e0),
                             product(uniform, uniform)};
  ComplexMatrix m = ComplexMatrix::identity(9);
  for (const auto& v : upb)
    for (std::size_t r = 0; r < 9; ++r)
      for (std::size_t c = 0; c < 9; ++c) m(r, c) -= v[r] * v[c];
  m *= 1.0 / 4.0;
  return DensityMatrix(3, 3, std::move(m));
}

DensityMatrix bell_phi_minus() {
  ComplexMatrix m(4, 4);
  m(1, 1) = 0.5;
  m(2, 2) = 0.5;
  m(1, 2) = -0.5;
  m(2, 1) = -0.5;
  return DensityMatrix(2, 2, std::move(m));
}

DensityMatrix maximally_mixed(std::size_t d) {
  auto m = ComplexMatrix::identity(d * d);
  m *= 1.0 / static_cast<double>(d * d);
  return DensityMatrix(d, d, std::move(m));
}

DensityMatrix sample_family(StateFamily family, std::size_t d, std::size_t m_max, Rng& rng) {
  switch (family) {
    case StateFamily::MixSep: return separable_sample({d, m_max, 0}, rng);
    case StateFamily::Npt: return npt_sample(d, rng);
    case StateFamily::CC: return cc_sample(d, rng);
    case StateFamily::CQ: return cq_sample(d, rng);
    case StateFamily::QC: return qc_sample(d, rng);
    default: break;
  }
  throw Error(ErrorCode::InvalidConfig, "family " + std::string(family_name(family)) + " has no random sampler");
}

LabeledStateSet generate_set(StateFamily family, std::size_t d, std::size_t n, std::size_t m_max, std::uint64_t seed,
                             std::uint64_t stream, std::size_t threads) {
  std::vector<std::optional<DensityMatrix>> slots(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        Rng rng(derive_seed(seed, stream, i));
        slots[i] = sample_family(family, d, m_max, rng);
      },
      threads);
  LabeledStateSet set{family, d, m_max, seed, {}};
  set.states.reserve(n);
  for (auto& s : slots) set.states.push_back(std::move(*s));
  return set;
}

}  // namespace qent
