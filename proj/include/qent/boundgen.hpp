#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qent/cae.hpp"
#include "qent/pipeline.hpp"

namespace qent {

/// Mixture rho = sum_j softmax(z)_j H_j H_j^dagger / Tr(H_j H_j^dagger) with
/// H_j = R_j + i I_j, all matrices of the global side dim_a * dim_b.
struct GeneratorParams {
  std::size_t dim_a = 0;
  std::size_t dim_b = 0;
  std::vector<nn::Tensor<double>> real;  // R_j
  std::vector<nn::Tensor<double>> imag;  // I_j
  nn::Tensor<double> logits;             // z, length kappa

  std::size_t kappa() const { return real.size(); }
  std::size_t side() const { return dim_a * dim_b; }
  std::vector<nn::Tensor<double>> tensors() const;

  /// R_j = I + N(0, sigma^2), I_j = N(0, sigma^2), z = 0.
  static GeneratorParams random(std::size_t dim_a, std::size_t dim_b, std::size_t kappa, Rng& rng,
                                double sigma = 0.05);
  /// R_j = I, I_j = 0, z = 0.
  static GeneratorParams identity(std::size_t dim_a, std::size_t dim_b, std::size_t kappa);
  /// Redraws branch j as in random().
  void reset_branch(std::size_t j, Rng& rng, double sigma = 0.05);
};

/// Differentiable (1, 2, n, n) encoding of rho_phi. Throws DegenerateBranch
/// when some Tr(H_j H_j^dagger) < 1e-12.
nn::Tensor<double> build_state_tensor(const GeneratorParams& params);
/// Value of rho_phi as a density matrix.
DensityMatrix build_state(const GeneratorParams& params);

/// Index map of the partial transpose on A for a (1, 2, n, n) tensor.
std::vector<std::size_t> partial_transpose_index(std::size_t dim_a, std::size_t dim_b);

struct ObjectiveTerms {
  nn::Tensor<double> loss;  // pt_term - gate * err, minimized by the optimizer
  double value = 0.0;       // gate * (err - eps) - pt_term
  double err = 0.0;
  double pt_term = 0.0;
  bool gate = false;
};

/// Objective against a frozen model (parameters must not require grad).
ObjectiveTerms objective(const GeneratorParams& params, CaeModel<double>& model, double epsilon);
/// Same value by plain complex arithmetic, without the autodiff graph.
double objective_reference(const GeneratorParams& params, CaeModel<double>& model, double epsilon);

struct GenerationConfig {
  std::size_t kappa = 3;
  std::size_t steps = 10000;
  double learning_rate = 2e-4;
  double ppt_tol = 1e-8;
  double init_sigma = 0.05;
  bool project = true;  // also try (rho + rho^T_A) / 2 as a candidate
  std::uint64_t seed = 0;
};

struct GenerationResult {
  DensityMatrix state = maximally_mixed(1);
  double reconstruction_error = 0.0;
  double min_pt_eigenvalue = 0.0;
  double ccnr = 0.0;
  bool feasible = false;   // min PT eigenvalue >= -ppt_tol
  bool success = false;    // feasible and error > epsilon
  bool projected = false;  // state is the PT-symmetrized iterate
  std::size_t best_step = 0;
  std::size_t restart = 0;
  std::uint64_t seed = 0;
  std::vector<double> objective_trace;
  std::vector<double> error_trace;
  std::vector<unsigned char> gate_trace;
};

/// Adam ascent on the objective. Each step's iterate (and its projection
/// when enabled) is scored with the float classifier; the best candidate by
/// (feasible, error) is returned. success == false reports that no feasible
/// state above epsilon was found.
GenerationResult optimize(GeneratorParams& params, CaeModel<float>& classifier, double epsilon,
                          const GenerationConfig& cfg);

/// Restarts seeded by derive_seed(cfg.seed, kGenerator, r). Stops after the
/// first successful restart when stop_on_success is set.
std::vector<GenerationResult> generate_bound(CaeModel<float>& classifier, const ThresholdRecord& threshold,
                                             const GenerationConfig& cfg, std::size_t restarts,
                                             bool stop_on_success = false, std::size_t threads = 1);

struct CertificationReport {
  bool ppt = false;
  double min_pt_eigenvalue = 0.0;
  double ccnr = 0.0;
  double reconstruction_error = 0.0;
  Verdict raw_verdict = Verdict::InClass;
  Verdict unitary_verdict = Verdict::InClass;
  double median_rotated_error = 0.0;
  std::size_t unitaries = 0;
  std::string label;
};

inline constexpr double kCertifyPptTol = 1e-8;

/// PPT at 1e-8, CCNR, raw error and the K-unitary classifier verdict.
CertificationReport certify(const DensityMatrix& state, CaeModel<float>& classifier, const ThresholdRecord& threshold,
                            std::size_t unitaries, Rng& rng, std::size_t threads = 1);

}  // namespace qent
