#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "qent/linalg.hpp"
#include "qent/rng.hpp"

namespace qent {

enum class StateFamily : std::uint32_t {
  MixSep = 0,
  Npt = 1,
  CC = 2,
  CQ = 3,
  QC = 4,
  BoundCandidate = 5,
  Named = 6,
};

std::string_view family_name(StateFamily f);
std::optional<StateFamily> parse_family(std::string_view name);

struct SeparableSamplerConfig {
  std::size_t d = 3;
  std::size_t m_max = 2;
  std::uint64_t seed = 0;
};

struct LabeledStateSet {
  StateFamily label = StateFamily::MixSep;
  std::size_t d = 0;
  std::size_t m_max = 0;
  std::uint64_t seed = 0;
  std::vector<DensityMatrix> states;
};

/// i.i.d. entries with real and imaginary parts N(0, 1).
ComplexMatrix ginibre(std::size_t rows, std::size_t cols, Rng& rng);

/// GG^dagger / Tr(GG^dagger) for square Ginibre G of side dim_a*dim_b.
DensityMatrix hs_random_state(std::size_t dim_a, std::size_t dim_b, Rng& rng);
inline DensityMatrix hs_random_state(std::size_t dim, Rng& rng) { return hs_random_state(dim, 1, rng); }

/// QR of a Ginibre matrix with the phases of diag(R) divided out.
ComplexMatrix haar_unitary(std::size_t dim, Rng& rng);

/// Flat Dirichlet sample: normalized i.i.d. exponentials.
std::vector<double> random_prob_vector(std::size_t m, Rng& rng);

DensityMatrix separable_sample(const SeparableSamplerConfig& cfg, Rng& rng);

inline constexpr std::size_t kNptRejectionBudget = 100000;
DensityMatrix npt_sample(std::size_t d, Rng& rng);

DensityMatrix cc_sample(std::size_t d, Rng& rng);
DensityMatrix cq_sample(std::size_t d, Rng& rng);
DensityMatrix qc_sample(std::size_t d, Rng& rng);

/// (uA ⊗ uB) ρ (uA ⊗ uB)^dagger.
DensityMatrix local_unitary_conjugate(const DensityMatrix& rho, const ComplexMatrix& u_a, const ComplexMatrix& u_b);

/// Two-qutrit Horodecki bound entangled family, a in (0, 1).
DensityMatrix horodecki_3x3(double a);
/// Normalized projector onto the complement of the 3x3 Tiles UPB.
DensityMatrix tiles_upb_state();
/// (|01> - |10>)/sqrt(2) projector.
DensityMatrix bell_phi_minus();
DensityMatrix maximally_mixed(std::size_t d);

/// One sample of `family` (MixSep, Npt, CC, CQ, QC).
DensityMatrix sample_family(StateFamily family, std::size_t d, std::size_t m_max, Rng& rng);

/// n samples; item i is drawn from its own generator seeded with
/// derive_seed(seed, stream, i), so output does not depend on `threads`.
LabeledStateSet generate_set(StateFamily family, std::size_t d, std::size_t n, std::size_t m_max, std::uint64_t seed,
                             std::uint64_t stream, std::size_t threads);

}  // namespace qent
