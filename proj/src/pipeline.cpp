#include "qent/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qent/nn/adam.hpp"

namespace qent {

std::string_view task_name(Task task) { return task == Task::Entanglement ? "ent" : "discord"; }

std::optional<Task> parse_task(std::string_view name) {
  if (name == "ent" || name == "entanglement") return Task::Entanglement;
  if (name == "discord") return Task::Discord;
  return std::nullopt;
}

StateFamily training_family(Task task) { return task == Task::Entanglement ? StateFamily::MixSep : StateFamily::CC; }

std::string_view verdict_name(Verdict v) { return v == Verdict::InClass ? "in_class" : "out_of_class"; }

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (d < 2) fail("d must be >= 2");
  if (n_samples < 1) fail("dataset size must be >= 1");
  if (m_max < 1) fail("m_max must be >= 1");
  if (epochs < 1) fail("epochs must be >= 1");
  if (batch_size < 1) fail("batch size must be >= 1");
  if (threshold_set_size < 1) fail("threshold set size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning rate must be > 0");
  if (!(regularization >= 0.0)) fail("regularization must be >= 0");
}

namespace {

// Dataset pre-encoded as (N, 2, n, n) floats.
struct EncodedSet {
  std::size_t count = 0;
  std::size_t side = 0;
  std::vector<float> values;

  nn::Tensor<float> batch(const std::vector<std::size_t>& order, std::size_t begin, std::size_t end) const {
    const std::size_t stride = 2 * side * side;
    std::vector<float> v((end - begin) * stride);
    for (std::size_t i = begin; i < end; ++i)
      std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(order[i] * stride), stride,
                  v.begin() + static_cast<std::ptrdiff_t>((i - begin) * stride));
    return nn::Tensor<float>::from({end - begin, 2, side, side}, std::move(v));
  }
};

EncodedSet encode_set(const std::vector<DensityMatrix>& states) {
  EncodedSet e;
  e.count = states.size();
  e.side = states.front().dim();
  const std::size_t plane = e.side * e.side;
  e.values.resize(e.count * 2 * plane);
  for (std::size_t s = 0; s < e.count; ++s) {
    const auto data = states[s].mat().data();
    float* re = e.values.data() + s * 2 * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      re[i] = static_cast<float>(data[i].real());
      re[plane + i] = static_cast<float>(data[i].imag());
    }
  }
  return e;
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const LabeledStateSet* data,
                  const std::function<void(const EpochStats&)>& on_epoch) {
  cfg.validate();
  const StateFamily family = training_family(cfg.task);
  LabeledStateSet generated;
  if (data) {
    if (data->label != family)
      throw Error(ErrorCode::InvalidConfig, "task " + std::string(task_name(cfg.task)) + " trains on " +
                                                std::string(family_name(family)) + " states, data holds " +
                                                std::string(family_name(data->label)));
    if (data->d != cfg.d) throw Error(ErrorCode::DimensionMismatch, "training data dimension differs from d");
    if (data->states.empty()) throw Error(ErrorCode::EmptySet, "training data is empty");
  } else {
    generated = generate_set(family, cfg.d, cfg.n_samples, cfg.m_max, cfg.seed, streams::kTrainData, cfg.threads);
    data = &generated;
  }
  const EncodedSet set = encode_set(data->states);

  TrainResult result{CaeModel<float>(builtin_spec(cfg.d)), {}, {}};
  auto& model = result.model;
  model.init(derive_seed(cfg.seed, streams::kInit));
  auto params = model.parameters();
  const auto penalized = model.conv_weights();
  nn::AdamState<float> adam;
  adam.lr = cfg.learning_rate;
  Rng dropout_rng(derive_seed(cfg.seed, streams::kDropout));

  std::vector<std::size_t> order(set.count);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, streams::kShuffle, epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    for (std::size_t begin = 0, end = 0; begin < set.count; begin = end) {
      end = std::min(set.count, begin + cfg.batch_size);
      // A lone trailing sample joins the previous batch; batchnorm needs two.
      if (set.count - end == 1 && end - begin > 1) end = set.count;
      const auto x = set.batch(order, begin, end);
      model.zero_grad();
      const auto y = model.forward(x, true, &dropout_rng);
      auto loss = nn::l1_loss(y, x);
      const double recon = loss.item();
      if (cfg.regularization > 0.0) {
        for (const auto& w : penalized) loss = nn::add(loss, nn::scale(nn::sum_abs(w), cfg.regularization));
      }
      if (!std::isfinite(loss.item()))
        throw Error(ErrorCode::DivergedLoss, "non-finite loss in epoch " + std::to_string(epoch + 1));
      nn::backward(loss);
      nn::adam_step(params, adam);
      loss_sum += recon * static_cast<double>(end - begin);
    }
    EpochStats stats{epoch + 1, loss_sum / static_cast<double>(set.count)};
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  result.threshold = compute_threshold(model, cfg, cfg.epochs);
  return result;
}

std::vector<double> reconstruction_errors(CaeModel<float>& model, const std::vector<DensityMatrix>& states,
                                          std::size_t threads) {
  std::vector<double> errors(states.size());
  parallel_for(
      states.size(), [&](std::size_t i) { errors[i] = reconstruction_error(model, states[i].mat()); }, threads);
  return errors;
}

double max_error(CaeModel<float>& model, const std::vector<DensityMatrix>& states, std::size_t threads) {
  if (states.empty()) throw Error(ErrorCode::EmptySet, "calibration set is empty");
  const auto errors = reconstruction_errors(model, states, threads);
  return *std::max_element(errors.begin(), errors.end());
}

ThresholdRecord compute_threshold(CaeModel<float>& model, const TrainConfig& cfg, std::size_t epoch) {
  ThresholdRecord rec;
  rec.d = cfg.d;
  rec.task = cfg.task;
  rec.n_calibration = cfg.threshold_set_size;
  rec.m_max = cfg.m_max;
  rec.calibration_seed = derive_seed(cfg.seed, streams::kCalibration);
  rec.epoch = epoch;
  const auto set = generate_set(training_family(cfg.task), cfg.d, cfg.threshold_set_size, cfg.m_max,
                                rec.calibration_seed, streams::kCalibration, cfg.threads);
  rec.epsilon = max_error(model, set.states, cfg.threads);
  return rec;
}

namespace {

void check_dimension(const CaeModel<float>& model, const DensityMatrix& rho) {
  if (rho.dim() != model.side())
    throw Error(ErrorCode::DimensionMismatch, "state dimension " + std::to_string(rho.dim()) +
                                                  " does not match model side " + std::to_string(model.side()));
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

Classification classify(CaeModel<float>& model, const ThresholdRecord& threshold, const DensityMatrix& rho) {
  check_dimension(model, rho);
  const double err = reconstruction_error(model, rho.mat());
  return {err < threshold.epsilon ? Verdict::InClass : Verdict::OutOfClass, err};
}

UnitaryClassification classify_with_unitaries(CaeModel<float>& model, const ThresholdRecord& threshold,
                                              const DensityMatrix& rho, std::size_t k, Rng& rng,
                                              std::size_t threads) {
  check_dimension(model, rho);
  if (k < 1) throw Error(ErrorCode::ParamOutOfRange, "number of local unitaries must be >= 1");
  std::vector<std::pair<ComplexMatrix, ComplexMatrix>> pairs;
  pairs.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    auto u_a = haar_unitary(rho.dim_a(), rng);
    auto u_b = haar_unitary(rho.dim_b(), rng);
    pairs.emplace_back(std::move(u_a), std::move(u_b));
  }
  UnitaryClassification out;
  out.errors.resize(k);
  parallel_for(
      k,
      [&](std::size_t i) {
        const auto rotated = local_unitary_conjugate(rho, pairs[i].first, pairs[i].second);
        out.errors[i] = reconstruction_error(model, rotated.mat());
      },
      threads);
  out.median_error = median(out.errors);
  out.label = out.median_error > threshold.epsilon ? Verdict::OutOfClass : Verdict::InClass;
  return out;
}

Verdict expected_verdict(Task task, StateFamily family) {
  if (task == Task::Discord) return family == StateFamily::CC ? Verdict::InClass : Verdict::OutOfClass;
  switch (family) {
    case StateFamily::MixSep:
    case StateFamily::CC:
    case StateFamily::CQ:
    case StateFamily::QC: return Verdict::InClass;
    default: return Verdict::OutOfClass;
  }
}

const FamilyAccuracy* ClassificationReport::find(StateFamily f) const {
  for (const auto& fa : families)
    if (fa.family == f) return &fa;
  return nullptr;
}

std::vector<FamilyAccuracy> aggregate(Task task, const std::vector<SampleRow>& rows) {
  std::vector<FamilyAccuracy> out;
  for (const auto& row : rows) {
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& f) { return f.family == row.family; });
    if (it == out.end()) {
      out.push_back({row.family, 0, 0});
      it = out.end() - 1;
    }
    ++it->total;
    if (row.label == expected_verdict(task, row.family)) ++it->correct;
  }
  return out;
}

ClassificationReport evaluate(CaeModel<float>& model, const ThresholdRecord& threshold, Task task,
                              const std::vector<LabeledStateSet>& sets, std::size_t unitaries, std::uint64_t seed,
                              std::size_t threads) {
  if (sets.empty()) throw Error(ErrorCode::EmptySet, "no state sets to evaluate");
  std::vector<std::pair<StateFamily, const DensityMatrix*>> items;
  for (const auto& set : sets) {
    if (set.states.empty()) throw Error(ErrorCode::EmptySet, std::string(family_name(set.label)) + " set is empty");
    for (const auto& rho : set.states) {
      check_dimension(model, rho);
      items.emplace_back(set.label, &rho);
    }
  }
  ClassificationReport report;
  report.task = task;
  report.threshold = threshold.epsilon;
  report.unitaries = unitaries;
  report.rows.resize(items.size());
  parallel_for(
      items.size(),
      [&](std::size_t i) {
        const auto& [family, rho] = items[i];
        SampleRow row{i, family, 0.0, Verdict::InClass};
        if (unitaries == 0) {
          const auto c = classify(model, threshold, *rho);
          row.error = c.error;
          row.label = c.label;
        } else {
          Rng rng(derive_seed(seed, streams::kUnitaries, i));
          const auto c = classify_with_unitaries(model, threshold, *rho, unitaries, rng, 1);
          row.error = c.median_error;
          row.label = c.label;
        }
        report.rows[i] = row;
      },
      threads);
  report.families = aggregate(task, report.rows);
  return report;
}

}  // namespace qent
