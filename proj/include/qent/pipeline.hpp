#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "qent/cae.hpp"
#include "qent/parallel.hpp"
#include "qent/states.hpp"

namespace qent {

enum class Task { Entanglement, Discord };

std::string_view task_name(Task task);
std::optional<Task> parse_task(std::string_view name);
/// Family the task trains and calibrates on: MixSep or CC.
StateFamily training_family(Task task);

struct TrainConfig {
  std::size_t d = 3;
  Task task = Task::Entanglement;
  std::size_t n_samples = 50000;
  std::size_t m_max = 2;
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double learning_rate = 1e-4;
  std::size_t threshold_set_size = 2000;
  std::uint64_t seed = 0;
  double regularization = 0.0;  // L1 penalty on conv weights
  std::size_t threads = 1;      // data generation and calibration only

  void validate() const;
};

struct ThresholdRecord {
  std::size_t d = 0;
  Task task = Task::Entanglement;
  double epsilon = 0.0;
  std::size_t n_calibration = 0;
  std::size_t m_max = 0;
  std::uint64_t calibration_seed = 0;
  std::size_t epoch = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
};

struct TrainResult {
  CaeModel<float> model;
  ThresholdRecord threshold;
  std::vector<EpochStats> history;
};

/// Trains on `data` when given, otherwise on a fresh in-class set drawn from
/// cfg.seed, then calibrates the threshold on the final model.
TrainResult train(const TrainConfig& cfg, const LabeledStateSet* data = nullptr,
                  const std::function<void(const EpochStats&)>& on_epoch = {});

/// Max reconstruction error over N_eps fresh in-class states drawn with the
/// training m_max.
ThresholdRecord compute_threshold(CaeModel<float>& model, const TrainConfig& cfg, std::size_t epoch);

/// Threshold from an explicit calibration set.
double max_error(CaeModel<float>& model, const std::vector<DensityMatrix>& states, std::size_t threads = 1);

std::vector<double> reconstruction_errors(CaeModel<float>& model, const std::vector<DensityMatrix>& states,
                                          std::size_t threads = 1);

enum class Verdict { InClass, OutOfClass };
std::string_view verdict_name(Verdict v);

struct Classification {
  Verdict label = Verdict::InClass;
  double error = 0.0;
};

Classification classify(CaeModel<float>& model, const ThresholdRecord& threshold, const DensityMatrix& rho);

struct UnitaryClassification {
  Verdict label = Verdict::InClass;
  double median_error = 0.0;
  std::vector<double> errors;  // one per local-unitary pair
};

/// Draws K Haar pairs (uA, uB) from rng and votes OutOfClass when the median
/// error of the conjugated states exceeds epsilon.
UnitaryClassification classify_with_unitaries(CaeModel<float>& model, const ThresholdRecord& threshold,
                                              const DensityMatrix& rho, std::size_t k, Rng& rng,
                                              std::size_t threads = 1);

/// Ground truth of a family under a task.
Verdict expected_verdict(Task task, StateFamily family);

struct SampleRow {
  std::size_t index = 0;
  StateFamily family = StateFamily::MixSep;
  double error = 0.0;
  Verdict label = Verdict::InClass;
};

struct FamilyAccuracy {
  StateFamily family = StateFamily::MixSep;
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy() const { return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0; }
};

struct ClassificationReport {
  Task task = Task::Entanglement;
  double threshold = 0.0;
  std::size_t unitaries = 0;
  std::string vote_rule = "median";
  std::vector<SampleRow> rows;
  std::vector<FamilyAccuracy> families;

  const FamilyAccuracy* find(StateFamily f) const;
};

/// Per-family accuracy from report rows.
std::vector<FamilyAccuracy> aggregate(Task task, const std::vector<SampleRow>& rows);

/// Classifies every state of every set. With unitaries > 0, sample i uses a
/// generator seeded by derive_seed(seed, kUnitaries, i).
ClassificationReport evaluate(CaeModel<float>& model, const ThresholdRecord& threshold, Task task,
                              const std::vector<LabeledStateSet>& sets, std::size_t unitaries = 0,
                              std::uint64_t seed = 0, std::size_t threads = 1);

}  // namespace qent
