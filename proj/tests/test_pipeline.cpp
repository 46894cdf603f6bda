#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qent/pipeline.hpp"

using namespace qent;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.d = 2;
  cfg.n_samples = 97;
  cfg.m_max = 2;
  cfg.epochs = 6;
  cfg.batch_size = 8;
  cfg.learning_rate = 1e-3;
  cfg.threshold_set_size = 25;
  cfg.seed = 41;
  return cfg;
}

const TrainResult& small_model() {
  static const TrainResult r = train(small_config());
  return r;
}

double mean_error(CaeModel<float>& m, const std::vector<DensityMatrix>& states) {
  const auto e = reconstruction_errors(m, states);
  double s = 0.0;
  for (double x : e) s += x;
  return s / double(e.size());
}

}  // namespace

TEST_CASE("task names") {
  CHECK(parse_task("ent") == Task::Entanglement);
  CHECK(parse_task("discord") == Task::Discord);
  CHECK_FALSE(parse_task("other").has_value());
  CHECK(task_name(Task::Discord) == "discord");
  CHECK(training_family(Task::Entanglement) == StateFamily::MixSep);
  CHECK(training_family(Task::Discord) == StateFamily::CC);
}

TEST_CASE("config validation") {
  auto expect_invalid = [](TrainConfig cfg) {
    try {
      cfg.validate();
      FAIL("expected InvalidConfig");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidConfig);
    }
  };
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.batch_size = 0;
  expect_invalid(c);
  c = {};
  c.learning_rate = 0.0;
  expect_invalid(c);
  c = {};
  c.epochs = 0;
  expect_invalid(c);
  c = {};
  c.threshold_set_size = 0;
  expect_invalid(c);
  c = {};
  c.n_samples = 0;
  expect_invalid(c);
}

TEST_CASE("ground truth per task") {
  CHECK(expected_verdict(Task::Entanglement, StateFamily::MixSep) == Verdict::InClass);
  CHECK(expected_verdict(Task::Entanglement, StateFamily::CQ) == Verdict::InClass);
  CHECK(expected_verdict(Task::Entanglement, StateFamily::Npt) == Verdict::OutOfClass);
  CHECK(expected_verdict(Task::Entanglement, StateFamily::BoundCandidate) == Verdict::OutOfClass);
  CHECK(expected_verdict(Task::Discord, StateFamily::CC) == Verdict::InClass);
  CHECK(expected_verdict(Task::Discord, StateFamily::QC) == Verdict::OutOfClass);
  CHECK(expected_verdict(Task::Discord, StateFamily::MixSep) == Verdict::OutOfClass);
}

TEST_CASE("training lowers the held-out loss") {
  auto cfg = small_config();
  CaeModel<float> fresh(builtin_spec(2));
  fresh.init(derive_seed(cfg.seed, streams::kInit));
  const auto held_out = generate_set(StateFamily::MixSep, 2, 50, 2, 999, streams::kValidation, 1);
  auto trained = small_model().model;
  CHECK(mean_error(trained, held_out.states) < mean_error(fresh, held_out.states));
  CHECK(small_model().history.size() == 6);
}

TEST_CASE("training is deterministic and the threshold is reproducible") {
  const auto again = train(small_config());
  const auto& first = small_model();
  CHECK(again.threshold.epsilon == first.threshold.epsilon);
  const auto pa = again.model.parameters(), pb = first.model.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i)
    CHECK(std::equal(pa[i].values().begin(), pa[i].values().end(), pb[i].values().begin()));

  // Recomputing from the stored calibration seed gives epsilon exactly.
  const auto& t = first.threshold;
  CHECK(t.calibration_seed == derive_seed(small_config().seed, streams::kCalibration));
  auto model = first.model;
  const auto cal = generate_set(StateFamily::MixSep, 2, t.n_calibration, t.m_max, t.calibration_seed,
                                streams::kCalibration, 1);
  const auto errors = reconstruction_errors(model, cal.states);
  CHECK(*std::max_element(errors.begin(), errors.end()) == t.epsilon);
  for (double e : errors) CHECK(e <= t.epsilon);
  CHECK(t.epoch == 6);
  CHECK(t.d == 2);
}

TEST_CASE("single-sample calibration") {
  auto cfg = small_config();
  cfg.threshold_set_size = 1;
  auto model = small_model().model;
  const auto rec = compute_threshold(model, cfg, 0);
  const auto one = generate_set(StateFamily::MixSep, 2, 1, 2, rec.calibration_seed, streams::kCalibration, 1);
  CHECK(rec.epsilon == reconstruction_error(model, one.states[0].mat()));
  CHECK_THROWS_AS(max_error(model, {}), Error);
}

TEST_CASE("training data provenance") {
  auto cfg = small_config();
  const auto wrong = generate_set(StateFamily::CC, 2, 10, 2, 1, streams::kTrainData, 1);
  CHECK_THROWS_AS(train(cfg, &wrong), Error);
  const auto other_d = generate_set(StateFamily::MixSep, 3, 10, 2, 1, streams::kTrainData, 1);
  CHECK_THROWS_AS(train(cfg, &other_d), Error);

  // Explicit data equal to the generated set reproduces the default run.
  const auto same = generate_set(StateFamily::MixSep, 2, cfg.n_samples, cfg.m_max, cfg.seed, streams::kTrainData, 1);
  CHECK(train(cfg, &same).threshold.epsilon == small_model().threshold.epsilon);
}

TEST_CASE("divergence is reported") {
  auto cfg = small_config();
  cfg.learning_rate = 1e30;
  cfg.epochs = 3;
  try {
    train(cfg);
    FAIL("expected DivergedLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DivergedLoss);
  }
}

TEST_CASE("classify compares the error with epsilon") {
  auto model = small_model().model;
  const auto rho = maximally_mixed(2);
  const double err = reconstruction_error(model, rho.mat());
  ThresholdRecord t = small_model().threshold;
  t.epsilon = err * 1.01;
  CHECK(classify(model, t, rho).label == Verdict::InClass);
  CHECK(classify(model, t, rho).error == err);
  t.epsilon = err;
  CHECK(classify(model, t, rho).label == Verdict::OutOfClass);
  CHECK_THROWS_AS(classify(model, t, maximally_mixed(3)), Error);
}

TEST_CASE("unitary vote uses the median of the rotated errors") {
  auto model = small_model().model;
  const auto& t = small_model().threshold;
  Rng rng(5);
  const auto rho = hs_random_state(2, 2, rng);
  Rng a(77), replay(77);
  const auto c = classify_with_unitaries(model, t, rho, 5, a, 2);
  REQUIRE(c.errors.size() == 5);
  std::vector<double> expect;
  for (int i = 0; i < 5; ++i) {
    const auto ua = haar_unitary(2, replay);
    const auto ub = haar_unitary(2, replay);
    expect.push_back(reconstruction_error(model, local_unitary_conjugate(rho, ua, ub).mat()));
  }
  CHECK(c.errors == expect);
  std::sort(expect.begin(), expect.end());
  CHECK(c.median_error == expect[2]);
  CHECK((c.label == Verdict::OutOfClass) == (expect[2] > t.epsilon));

  Rng b(77);
  CHECK_THROWS_AS(classify_with_unitaries(model, t, rho, 0, b), Error);
}

TEST_CASE("evaluate aggregates per family") {
  auto model = small_model().model;
  ThresholdRecord t = small_model().threshold;
  const auto sep = generate_set(StateFamily::MixSep, 2, 12, 5, 3, streams::kValidation, 1);
  const auto npt = generate_set(StateFamily::Npt, 2, 8, 5, 4, streams::kValidation, 1);
  t.epsilon = 1e9;
  const auto all_in = evaluate(model, t, Task::Entanglement, {sep, npt});
  REQUIRE(all_in.rows.size() == 20);
  CHECK(all_in.find(StateFamily::MixSep)->accuracy() == 1.0);
  CHECK(all_in.find(StateFamily::Npt)->accuracy() == 0.0);
  CHECK(all_in.find(StateFamily::Npt)->total == 8);
  CHECK(all_in.find(StateFamily::CC) == nullptr);
  CHECK(all_in.rows[13].family == StateFamily::Npt);
  CHECK(all_in.rows[13].index == 13);

  t.epsilon = 0.0;
  const auto all_out = evaluate(model, t, Task::Entanglement, {sep, npt});
  CHECK(all_out.find(StateFamily::MixSep)->accuracy() == 0.0);
  CHECK(all_out.find(StateFamily::Npt)->accuracy() == 1.0);

  CHECK_THROWS_AS(evaluate(model, t, Task::Entanglement, {}), Error);
  LabeledStateSet empty{StateFamily::MixSep, 2, 2, 0, {}};
  CHECK_THROWS_AS(evaluate(model, t, Task::Entanglement, {empty}), Error);
  const auto big = generate_set(StateFamily::MixSep, 3, 1, 2, 1, streams::kValidation, 1);
  CHECK_THROWS_AS(evaluate(model, t, Task::Entanglement, {big}), Error);
}

TEST_CASE("evaluate with unitaries does not depend on thread count") {
  auto model = small_model().model;
  const auto& t = small_model().threshold;
  const auto sep = generate_set(StateFamily::MixSep, 2, 6, 5, 3, streams::kValidation, 1);
  const auto one = evaluate(model, t, Task::Entanglement, {sep}, 4, 9, 1);
  const auto many = evaluate(model, t, Task::Entanglement, {sep}, 4, 9, 3);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(one.rows[i].error == many.rows[i].error);
    CHECK(one.rows[i].label == many.rows[i].label);
  }
  CHECK(one.unitaries == 4);
  CHECK(one.vote_rule == "median");
}
