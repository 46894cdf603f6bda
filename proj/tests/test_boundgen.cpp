#include <doctest.h>

#include <cmath>

#include "check_util.hpp"
#include "qent/boundgen.hpp"

using namespace qent;
using namespace qent::testing;

namespace {

CaeModel<float> float_model(std::size_t d, std::uint64_t seed) {
  CaeModel<float> m(builtin_spec(d));
  m.init(seed);
  return m;
}

ThresholdRecord threshold_for(std::size_t d, double eps) {
  ThresholdRecord t;
  t.d = d;
  t.epsilon = eps;
  return t;
}

}  // namespace

TEST_CASE("generator builds a valid mixture") {
  Rng rng(51);
  const auto p = GeneratorParams::random(3, 3, 3, rng, 0.3);
  CHECK(p.kappa() == 3);
  CHECK(p.tensors().size() == 7);
  const auto rho = build_state(p);
  CHECK(check_density_matrix(rho.mat(), 1e-12).valid);
  const auto t = build_state_tensor(p);
  CHECK(t.shape() == nn::Shape{1, 2, 9, 9});
  CHECK(max_abs_diff(decode_output(t), rho.mat()) < 1e-15);

  const auto id = GeneratorParams::identity(2, 2, 2);
  CHECK(max_abs_diff(build_state(id).mat(), maximally_mixed(2).mat()) < 1e-15);
}

TEST_CASE("mixture weights follow the softmax of the logits") {
  auto p = GeneratorParams::identity(2, 2, 2);
  // Branch 1 becomes |0><0| (x) |0><0|.
  auto r1 = p.real[1].values();
  std::fill(r1.begin(), r1.end(), 0.0);
  r1[0] = 2.0;
  p.logits.values()[0] = std::log(3.0);
  const auto rho = build_state(p).mat();
  // Weights 3/4 on I/4 and 1/4 on the projector.
  CHECK(rho(0, 0).real() == doctest::Approx(0.75 / 4.0 + 0.25).epsilon(1e-14));
  CHECK(rho(1, 1).real() == doctest::Approx(0.75 / 4.0).epsilon(1e-14));
}

TEST_CASE("degenerate branches are rejected") {
  auto p = GeneratorParams::identity(2, 2, 2);
  auto r = p.real[0].values();
  std::fill(r.begin(), r.end(), 0.0);
  try {
    build_state_tensor(p);
    FAIL("expected DegenerateBranch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateBranch);
  }
  CHECK_THROWS_AS(GeneratorParams::identity(2, 2, 0), Error);
}

TEST_CASE("partial transpose index agrees with the matrix partial transpose") {
  Rng rng(52);
  for (auto [da, db] : {std::pair<std::size_t, std::size_t>{2, 2}, {3, 3}, {2, 3}}) {
    const auto rho = hs_random_state(da, db, rng);
    const auto t = encode_state<double>(rho);
    const std::size_t n = da * db;
    const auto g = nn::gather(t, partial_transpose_index(da, db), {1, 2, n, n});
    CHECK(max_abs_diff(decode_output(g), partial_transpose(rho.mat(), da, db)) == 0.0);
  }
}

TEST_CASE("state construction gradient") {
  Rng rng(53);
  auto p = GeneratorParams::random(2, 2, 3, rng, 0.4);
  p.logits.values()[1] = 0.7;
  const auto pw = random_tensor({1, 2, 4, 4}, rng);
  const auto r = grad_check([&] { return probe(build_state_tensor(p), pw); }, p.tensors(), 99, rng);
  CHECK(r.coordinates == 99);
  CHECK(r.max_rel_error < kFdRelTol);
}

TEST_CASE("objective matches the reference and its gradient") {
  CaeModel<double> m(builtin_spec(2));
  m.init(54);
  m.set_requires_grad(false);
  Rng rng(55);
  auto p = GeneratorParams::random(2, 2, 3, rng, 0.4);
  for (double eps : {0.0, 10.0}) {
    CAPTURE(eps);
    const auto terms = objective(p, m, eps);
    CHECK(terms.gate == (eps > 0.0));
    CHECK(terms.value == doctest::Approx(objective_reference(p, m, eps)).epsilon(1e-12));
    const double expect_loss = terms.pt_term - (terms.gate ? terms.err : 0.0);
    CHECK(terms.loss.item() == doctest::Approx(expect_loss).epsilon(1e-14));
    const auto r = grad_check([&] { return objective(p, m, eps).loss; }, p.tensors(), 60, rng);
    CHECK(r.max_rel_error < kFdRelTol);
  }
  CaeModel<double> other(builtin_spec(3));
  other.init(1);
  CHECK_THROWS_AS(objective(p, other, 1.0), Error);
}

TEST_CASE("optimizer candidates respect the feasibility contract") {
  auto model = float_model(2, 56);
  GenerationConfig cfg;
  cfg.steps = 40;
  cfg.learning_rate = 1e-2;
  cfg.seed = 57;
  Rng rng(58);
  auto p = GeneratorParams::random(2, 2, 3, rng);
  auto fresh_leaf = [](const nn::Tensor<double>& t) {
    return nn::Tensor<double>::from(t.shape(), {t.values().begin(), t.values().end()}, true);
  };
  auto p2 = p;
  for (std::size_t k = 0; k < p.kappa(); ++k) {
    p2.real[k] = fresh_leaf(p.real[k]);
    p2.imag[k] = fresh_leaf(p.imag[k]);
  }
  p2.logits = fresh_leaf(p.logits);

  const auto res = optimize(p, model, 1e9, cfg);
  CHECK(res.objective_trace.size() == 40);
  CHECK(res.error_trace.size() == 40);
  CHECK(res.gate_trace.size() == 40);
  CHECK(check_density_matrix(res.state.mat(), 1e-9).valid);
  const double min_pt = hermitian_eigenvalues(partial_transpose(res.state)).min();
  CHECK(res.feasible == (res.min_pt_eigenvalue >= -cfg.ppt_tol));
  CHECK(std::abs(min_pt - res.min_pt_eigenvalue) < 1e-9);
  CHECK(res.reconstruction_error == doctest::Approx(reconstruction_error(model, res.state.mat())).epsilon(1e-9));
  CHECK_FALSE(res.success);  // nothing exceeds an enormous threshold
  CHECK(res.ccnr == doctest::Approx(realignment_ccnr(res.state)).epsilon(1e-12));

  const auto again = optimize(p2, model, 1e9, cfg);
  CHECK(again.objective_trace == res.objective_trace);
  CHECK(again.state == res.state);

  auto wrong = GeneratorParams::identity(3, 3, 1);
  CHECK_THROWS_AS(optimize(wrong, model, 1.0, cfg), Error);
}

TEST_CASE("a zero threshold makes any feasible state a success") {
  auto model = float_model(2, 59);
  GenerationConfig cfg;
  cfg.steps = 5;
  cfg.seed = 60;
  const auto runs = generate_bound(model, threshold_for(2, 0.0), cfg, 3, true);
  REQUIRE(runs.size() == 1);
  CHECK(runs[0].success);
  CHECK(runs[0].feasible);
  CHECK(runs[0].seed == derive_seed(60, streams::kGenerator, 0));

  const auto all = generate_bound(model, threshold_for(2, 1e9), cfg, 3, true, 2);
  REQUIRE(all.size() == 3);
  for (std::size_t r = 0; r < 3; ++r) {
    CHECK(all[r].restart == r);
    CHECK_FALSE(all[r].success);
  }
  const auto serial = generate_bound(model, threshold_for(2, 1e9), cfg, 3, false, 1);
  for (std::size_t r = 0; r < 3; ++r) CHECK(serial[r].state == all[r].state);
  CHECK_THROWS_AS(generate_bound(model, threshold_for(3, 1.0), cfg, 1), Error);
  CHECK_THROWS_AS(generate_bound(model, threshold_for(2, 1.0), cfg, 0), Error);
}

TEST_CASE("certification labels") {
  auto m2 = float_model(2, 61);
  auto m3 = float_model(3, 62);
  Rng rng(63);
  const auto npt = certify(bell_phi_minus(), m2, threshold_for(2, 1e9), 3, rng);
  CHECK_FALSE(npt.ppt);
  CHECK(npt.min_pt_eigenvalue == doctest::Approx(-0.5));
  CHECK(npt.label == "npt (not bound entangled)");

  const auto tiles = certify(tiles_upb_state(), m3, threshold_for(3, 1e9), 3, rng);
  CHECK(tiles.ppt);
  CHECK(tiles.ccnr > 1.0);
  CHECK(tiles.label == "certified bound entangled");

  const auto quiet = certify(maximally_mixed(3), m3, threshold_for(3, 1e9), 3, rng);
  CHECK(quiet.label == "not certified");
  CHECK(quiet.unitaries == 3);
  const auto flagged = certify(maximally_mixed(3), m3, threshold_for(3, 0.0), 0, rng);
  CHECK(flagged.raw_verdict == Verdict::OutOfClass);
  CHECK(flagged.label == "candidate (classifier evidence only)");
}
