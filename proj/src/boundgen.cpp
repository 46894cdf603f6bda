#include "qent/boundgen.hpp"

#include <algorithm>
#include <cmath>

#include "qent/nn/adam.hpp"
#include "qent/parallel.hpp"

namespace qent {

std::vector<nn::Tensor<double>> GeneratorParams::tensors() const {
  std::vector<nn::Tensor<double>> out;
  for (std::size_t j = 0; j < kappa(); ++j) {
    out.push_back(real[j]);
    out.push_back(imag[j]);
  }
  out.push_back(logits);
  return out;
}

GeneratorParams GeneratorParams::identity(std::size_t dim_a, std::size_t dim_b, std::size_t kappa) {
  if (kappa < 1) throw Error(ErrorCode::ParamOutOfRange, "mixture size must be >= 1");
  GeneratorParams p;
  p.dim_a = dim_a;
  p.dim_b = dim_b;
  const std::size_t n = p.side();
  for (std::size_t j = 0; j < kappa; ++j) {
    std::vector<double> eye(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) eye[i * n + i] = 1.0;
    p.real.push_back(nn::Tensor<double>::from({n, n}, std::move(eye), true));
    p.imag.push_back(nn::Tensor<double>::zeros({n, n}, true));
  }
  p.logits = nn::Tensor<double>::zeros({kappa}, true);
  return p;
}

GeneratorParams GeneratorParams::random(std::size_t dim_a, std::size_t dim_b, std::size_t kappa, Rng& rng,
                                        double sigma) {
  GeneratorParams p = identity(dim_a, dim_b, kappa);
  for (std::size_t j = 0; j < kappa; ++j) p.reset_branch(j, rng, sigma);
  return p;
}

void GeneratorParams::reset_branch(std::size_t j, Rng& rng, double sigma) {
  std::normal_distribution<double> noise(0.0, sigma);
  const std::size_t n = side();
  auto r = real.at(j).values();
  auto im = imag.at(j).values();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) r[a * n + b] = (a == b ? 1.0 : 0.0) + noise(rng);
  for (auto& v : im) v = noise(rng);
}

std::vector<std::size_t> partial_transpose_index(std::size_t dim_a, std::size_t dim_b) {
  const std::size_t n = dim_a * dim_b;
  std::vector<std::size_t> idx(2 * n * n);
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t i = 0; i < dim_a; ++i)
      for (std::size_t k = 0; k < dim_b; ++k)
        for (std::size_t j = 0; j < dim_a; ++j)
          for (std::size_t l = 0; l < dim_b; ++l)
            idx[c * n * n + (i * dim_b + k) * n + (j * dim_b + l)] = c * n * n + (j * dim_b + k) * n + (i * dim_b + l);
  return idx;
}

namespace {

double branch_trace(const GeneratorParams& p, std::size_t j) {
  double t = 0.0;
  for (double v : p.real[j].values()) t += v * v;
  for (double v : p.imag[j].values()) t += v * v;
  return t;
}

void check_branches(const GeneratorParams& p) {
  for (std::size_t j = 0; j < p.kappa(); ++j)
    if (!(branch_trace(p, j) >= 1e-12))
      throw Error(ErrorCode::DegenerateBranch, "branch " + std::to_string(j) + " has vanishing trace");
}

// rho_phi by complex matrix arithmetic.
ComplexMatrix mixture_value(const GeneratorParams& p) {
  const std::size_t n = p.side();
  const auto z = p.logits.values();
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> w(p.kappa());
  double total = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) total += (w[j] = std::exp(z[j] - zmax));
  ComplexMatrix rho(n, n);
  for (std::size_t j = 0; j < p.kappa(); ++j) {
    ComplexMatrix h(n, n);
    const auto r = p.real[j].values();
    const auto im = p.imag[j].values();
    for (std::size_t i = 0; i < n * n; ++i) h.data()[i] = cplx(r[i], im[i]);
    ComplexMatrix term = matmul(h, h.adjoint());
    term *= cplx(w[j] / total / term.trace().real());
    rho += term;
  }
  return hermitian_part(rho);
}

}  // namespace

nn::Tensor<double> build_state_tensor(const GeneratorParams& p) {
  check_branches(p);
  const std::size_t n = p.side();
  const auto w = nn::softmax(p.logits);
  nn::Tensor<double> re, im;
  for (std::size_t j = 0; j < p.kappa(); ++j) {
    const auto& r = p.real[j];
    const auto& i = p.imag[j];
    const auto rt = nn::transpose(r);
    const auto it = nn::transpose(i);
    const auto re_j = nn::add(nn::matmul(r, rt), nn::matmul(i, it));
    const auto im_j = nn::sub(nn::matmul(i, rt), nn::matmul(r, it));
    const auto trace = nn::add(nn::sum(nn::mul(r, r)), nn::sum(nn::mul(i, i)));
    const auto w_j = nn::gather(w, {j}, {1});
    const auto scale = nn::div_scalar(w_j, trace);
    const auto re_term = nn::mul_scalar(re_j, scale);
    const auto im_term = nn::mul_scalar(im_j, scale);
    re = j == 0 ? re_term : nn::add(re, re_term);
    im = j == 0 ? im_term : nn::add(im, im_term);
  }
  return nn::concat<double>({re, im}, {1, 2, n, n});
}

DensityMatrix build_state(const GeneratorParams& p) {
  check_branches(p);
  return DensityMatrix::trusted(p.dim_a, p.dim_b, mixture_value(p));
}

ObjectiveTerms objective(const GeneratorParams& params, CaeModel<double>& model, double epsilon) {
  if (model.side() != params.side())
    throw Error(ErrorCode::DimensionMismatch, "generator side " + std::to_string(params.side()) +
                                                  " does not match model side " + std::to_string(model.side()));
  const std::size_t n = params.side();
  const auto x = build_state_tensor(params);
  const auto x_pt = nn::gather(x, partial_transpose_index(params.dim_a, params.dim_b), {1, 2, n, n});
  const auto recon = model.forward(x, false);
  const auto err = nn::l1_loss(recon, x);
  const auto pt = nn::l1_loss(x, x_pt);

  ObjectiveTerms t;
  t.err = err.item();
  t.pt_term = pt.item();
  t.gate = t.err < epsilon;
  // The gate is a constant of each step: no gradient flows through it.
  t.loss = t.gate ? nn::sub(pt, err) : pt;
  t.value = (t.gate ? t.err - epsilon : 0.0) - t.pt_term;
  return t;
}

double objective_reference(const GeneratorParams& params, CaeModel<double>& model, double epsilon) {
  check_branches(params);
  const ComplexMatrix rho = mixture_value(params);
  const double err = reconstruction_error(model, rho);
  const double pt = elementwise_l1(rho, partial_transpose(rho, params.dim_a, params.dim_b));
  return (err < epsilon ? err - epsilon : 0.0) - pt;
}

namespace {

struct Candidate {
  bool valid = false;
  bool feasible = false;
  double err = 0.0;
  double min_pt = 0.0;
  bool projected = false;
  ComplexMatrix mat;
};

bool better(const Candidate& a, const Candidate& b) {
  if (!b.valid) return a.valid;
  if (a.feasible != b.feasible) return a.feasible;
  return a.err > b.err;
}

}  // namespace

GenerationResult optimize(GeneratorParams& params, CaeModel<float>& classifier, double epsilon,
                          const GenerationConfig& cfg) {
  if (cfg.steps < 1) throw Error(ErrorCode::ParamOutOfRange, "step budget must be >= 1");
  if (classifier.side() != params.side())
    throw Error(ErrorCode::DimensionMismatch, "generator and classifier dimensions differ");
  CaeModel<double> frozen = classifier.cast<double>();
  frozen.set_requires_grad(false);
  Rng rng(derive_seed(cfg.seed, streams::kGenerator));

  auto tensors = params.tensors();
  nn::AdamState<double> adam;
  adam.lr = cfg.learning_rate;

  GenerationResult result;
  result.seed = cfg.seed;
  Candidate best;
  const std::size_t da = params.dim_a, db = params.dim_b;

  auto consider = [&](ComplexMatrix mat, bool projected, std::size_t step) {
    Candidate c;
    c.projected = projected;
    if (projected) {
      // Equal to its own partial transpose, so PPT iff PSD.
      const double lo = hermitian_eigenvalues(mat).min();
      c.min_pt = lo;
      if (lo < -DensityMatrix::kValidityTol) return;
    } else {
      c.min_pt = hermitian_eigenvalues(partial_transpose(mat, da, db)).min();
    }
    c.valid = true;
    c.feasible = c.min_pt >= -cfg.ppt_tol;
    c.err = reconstruction_error(classifier, mat);
    c.mat = std::move(mat);
    if (better(c, best)) {
      best = std::move(c);
      result.best_step = step;
    }
  };

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    for (std::size_t j = 0; j < params.kappa(); ++j)
      if (branch_trace(params, j) < 1e-12) params.reset_branch(j, rng, cfg.init_sigma);

    for (auto& t : tensors) t.zero_grad();
    const auto terms = objective(params, frozen, epsilon);
    if (!std::isfinite(terms.value)) throw Error(ErrorCode::DivergedLoss, "non-finite generator objective");
    result.objective_trace.push_back(terms.value);
    result.error_trace.push_back(terms.err);
    result.gate_trace.push_back(terms.gate ? 1 : 0);

    const ComplexMatrix rho = mixture_value(params);
    if (cfg.project) {
      ComplexMatrix sym = rho + partial_transpose(rho, da, db);
      sym *= cplx(0.5);
      consider(std::move(sym), true, step);
    }
    consider(rho, false, step);

    nn::backward(terms.loss);
    nn::adam_step(tensors, adam);
  }

  if (!best.valid) {
    best.mat = mixture_value(params);
    best.min_pt = hermitian_eigenvalues(partial_transpose(best.mat, da, db)).min();
    best.err = reconstruction_error(classifier, best.mat);
    best.feasible = best.min_pt >= -cfg.ppt_tol;
  }
  result.state = DensityMatrix::trusted(da, db, hermitian_part(best.mat));
  result.reconstruction_error = best.err;
  result.min_pt_eigenvalue = best.min_pt;
  result.feasible = best.feasible;
  result.projected = best.projected;
  result.success = best.feasible && best.err > epsilon;
  result.ccnr = realignment_ccnr(result.state);
  return result;
}

std::vector<GenerationResult> generate_bound(CaeModel<float>& classifier, const ThresholdRecord& threshold,
                                             const GenerationConfig& cfg, std::size_t restarts,
                                             bool stop_on_success, std::size_t threads) {
  if (restarts < 1) throw Error(ErrorCode::ParamOutOfRange, "restarts must be >= 1");
  const std::size_t d = threshold.d;
  if (d * d != classifier.side()) throw Error(ErrorCode::DimensionMismatch, "threshold and model dimensions differ");
  std::vector<GenerationResult> out;
  const std::size_t chunk = std::max<std::size_t>(1, threads);
  for (std::size_t first = 0; first < restarts; first += chunk) {
    const std::size_t count = std::min(chunk, restarts - first);
    std::vector<GenerationResult> batch(count);
    parallel_for(
        count,
        [&](std::size_t k) {
          const std::size_t r = first + k;
          GenerationConfig run = cfg;
          run.seed = derive_seed(cfg.seed, streams::kGenerator, r);
          Rng init_rng(run.seed);
          auto params = GeneratorParams::random(d, d, cfg.kappa, init_rng, cfg.init_sigma);
          batch[k] = optimize(params, classifier, threshold.epsilon, run);
          batch[k].restart = r;
        },
        count);
    bool any = false;
    for (auto& res : batch) {
      any = any || res.success;
      out.push_back(std::move(res));
    }
    if (stop_on_success && any) break;
  }
  return out;
}

CertificationReport certify(const DensityMatrix& state, CaeModel<float>& classifier, const ThresholdRecord& threshold,
                            std::size_t unitaries, Rng& rng, std::size_t threads) {
  CertificationReport rep;
  const auto ppt = is_ppt(state, kCertifyPptTol);
  rep.ppt = ppt.ppt;
  rep.min_pt_eigenvalue = ppt.min_pt_eigenvalue;
  rep.ccnr = realignment_ccnr(state);
  const auto raw = classify(classifier, threshold, state);
  rep.reconstruction_error = raw.error;
  rep.raw_verdict = raw.label;
  rep.unitaries = unitaries;
  rep.unitary_verdict = raw.label;
  rep.median_rotated_error = raw.error;
  if (unitaries > 0) {
    const auto rotated = classify_with_unitaries(classifier, threshold, state, unitaries, rng, threads);
    rep.unitary_verdict = rotated.label;
    rep.median_rotated_error = rotated.median_error;
  }
  const bool flagged = rep.unitary_verdict == Verdict::OutOfClass || rep.raw_verdict == Verdict::OutOfClass;
  if (!rep.ppt)
    rep.label = "npt (not bound entangled)";
  else if (rep.ccnr > 1.0)
    rep.label = "certified bound entangled";
  else if (flagged)
    rep.label = "candidate (classifier evidence only)";
  else
    rep.label = "not certified";
  return rep;
}

}  // namespace qent
