// qent: data generation, training, classification and bound-state search.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qent/boundgen.hpp"
#include "qent/io.hpp"
#include "qent/parallel.hpp"
#include "qent/pipeline.hpp"
#include "qent/states.hpp"

using namespace qent;
using nlohmann::json;

namespace {

constexpr int kExitFlags = 2;
constexpr int kExitIo = 3;
constexpr int kExitDimension = 4;
constexpr int kExitDiverged = 5;
constexpr int kExitNoFeasible = 6;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::ParamOutOfRange:
    case ErrorCode::UnsupportedDimension: return kExitFlags;
    case ErrorCode::Io:
    case ErrorCode::Format: return kExitIo;
    case ErrorCode::DimensionMismatch: return kExitDimension;
    case ErrorCode::DivergedLoss: return kExitDiverged;
    case ErrorCode::NoFeasibleState: return kExitNoFeasible;
    default: return 1;
  }
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  const std::uint64_t s = entropy_seed();
  std::cerr << "seed drawn from entropy: " << s << '\n';
  return s;
}

void echo(const CLI::App* cmd, std::uint64_t seed, bool has_seed = true) {
  std::cerr << "[" << cmd->get_name() << "]\n" << cmd->config_to_str(true, false);
  if (has_seed) std::cerr << "resolved_seed=" << seed << '\n';
  std::cerr << "threads=" << worker_count() << '\n';
}

void print_accuracy(const std::vector<FamilyAccuracy>& families) {
  for (const auto& f : families)
    std::printf("%s: %zu/%zu accuracy %.4f\n", std::string(family_name(f.family)).c_str(), f.correct, f.total,
                f.accuracy());
}

// ------------------------------------------------------------- gen-data

struct GenDataOpts {
  std::size_t d = 3;
  std::string family = "mix_sep";
  std::size_t n = 1000;
  std::size_t m_max = 2;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void run_gen_data(const CLI::App* cmd, const GenDataOpts& o) {
  // Named states are deterministic; they record seed 0 unless one is given.
  const bool named = o.family == "bell" || o.family == "horodecki" || o.family == "tiles";
  const std::uint64_t seed = named ? o.seed.value_or(0) : resolve_seed(o.seed);
  echo(cmd, seed);
  if (o.n < 1) throw Error(ErrorCode::InvalidConfig, "--n must be >= 1");
  LabeledStateSet set;
  if (o.family == "bell") {
    set.label = StateFamily::Named;
    set.d = 2;
    set.states.assign(o.n, bell_phi_minus());
  } else if (o.family == "horodecki") {
    // Sweep of a over the open interval (0, 1).
    set.label = StateFamily::Named;
    set.d = 3;
    for (std::size_t i = 0; i < o.n; ++i)
      set.states.push_back(horodecki_3x3(static_cast<double>(i + 1) / static_cast<double>(o.n + 1)));
  } else if (o.family == "tiles") {
    set.label = StateFamily::Named;
    set.d = 3;
    set.states.assign(o.n, tiles_upb_state());
  } else {
    const auto fam = parse_family(o.family);
    if (!fam || *fam == StateFamily::BoundCandidate || *fam == StateFamily::Named)
      throw Error(ErrorCode::InvalidConfig, "unknown family " + o.family);
    if (o.d < 2) throw Error(ErrorCode::InvalidConfig, "--d must be >= 2");
    set = generate_set(*fam, o.d, o.n, o.m_max, seed, streams::kTrainData, worker_count());
  }
  set.seed = seed;
  io::write_state_set(o.out, set);
  std::printf("wrote %zu %s states to %s\n", set.states.size(), o.family.c_str(), o.out.c_str());
}

// ---------------------------------------------------------------- train

struct TrainOpts {
  std::size_t d = 3;
  std::string task = "ent";
  std::string data;
  std::size_t n = 50000;
  std::size_t m_max = 2;
  std::size_t epochs = 0;  // 0: task default
  std::size_t batch = 128;
  double lr = 1e-4;
  std::size_t threshold_n = 2000;
  double reg = 0.0;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void run_train(const CLI::App* cmd, const TrainOpts& o) {
  const std::uint64_t seed = resolve_seed(o.seed);
  echo(cmd, seed);
  TrainConfig cfg;
  const auto task = parse_task(o.task);
  if (!task) throw Error(ErrorCode::InvalidConfig, "unknown task " + o.task);
  cfg.task = *task;
  cfg.d = o.d;
  cfg.n_samples = o.n;
  cfg.m_max = o.m_max;
  cfg.epochs = o.epochs ? o.epochs : (cfg.task == Task::Discord ? 1 : 20);
  cfg.batch_size = o.batch;
  cfg.learning_rate = o.lr;
  cfg.threshold_set_size = o.threshold_n;
  cfg.regularization = o.reg;
  cfg.seed = seed;
  cfg.threads = worker_count();
  cfg.validate();

  json config = io::train_config_to_json(cfg);
  std::optional<LabeledStateSet> data;
  if (!o.data.empty()) {
    data = io::read_state_set(o.data);
    if (data->d != cfg.d)
      throw Error(ErrorCode::DimensionMismatch, "data file holds d = " + std::to_string(data->d) + ", --d is " +
                                                    std::to_string(cfg.d));
    cfg.n_samples = data->states.size();
    config["n_samples"] = cfg.n_samples;
    config["data"] = {{"family", family_name(data->label)}, {"seed", data->seed}, {"count", data->states.size()}};
  }
  std::cerr << "config " << config.dump() << '\n';
  auto result = train(cfg, data ? &*data : nullptr, [&](const EpochStats& s) {
    std::fprintf(stderr, "epoch %zu/%zu mean loss %.6g\n", s.epoch, cfg.epochs, s.mean_loss);
  });
  io::save_checkpoint(o.out, result.model, result.threshold, config, result.history);
  std::printf("epsilon %.17g\nwrote %s\n", result.threshold.epsilon, o.out.c_str());
}

// ------------------------------------------------------ classify / eval

struct ClassifyOpts {
  std::string model;
  std::vector<std::string> inputs;
  std::size_t unitaries = 0;
  std::string csv;
  std::optional<std::uint64_t> seed;
};

void run_classify(const CLI::App* cmd, const ClassifyOpts& o) {
  const std::uint64_t seed = o.unitaries ? resolve_seed(o.seed) : o.seed.value_or(0);
  echo(cmd, seed, o.unitaries > 0);
  auto ck = io::load_checkpoint(o.model);
  std::vector<LabeledStateSet> sets;
  for (const auto& path : o.inputs) {
    auto set = io::read_state_set(path);
    if (set.d * set.d != ck.model.side())
      throw Error(ErrorCode::DimensionMismatch, path + " holds d = " + std::to_string(set.d) +
                                                    ", the model expects d = " + std::to_string(ck.model.spec().d));
    sets.push_back(std::move(set));
  }
  const auto report =
      evaluate(ck.model, ck.threshold, ck.threshold.task, sets, o.unitaries, seed, worker_count());
  std::printf("task %s epsilon %.17g unitaries %zu vote %s\n", std::string(task_name(report.task)).c_str(),
              report.threshold, report.unitaries, report.vote_rule.c_str());
  print_accuracy(report.families);
  if (!o.csv.empty()) io::write_error_csv(o.csv, report.rows);
}

// ------------------------------------------------------------ gen-bound

struct GenBoundOpts {
  std::string model;
  std::size_t kappa = 3;
  std::size_t steps = 10000;
  double lr = 2e-4;
  std::size_t restarts = 10;
  bool stop_on_success = false;
  bool no_project = false;
  std::size_t certify_unitaries = 1000;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string report;
};

void run_gen_bound(const CLI::App* cmd, const GenBoundOpts& o) {
  const std::uint64_t seed = resolve_seed(o.seed);
  echo(cmd, seed);
  auto ck = io::load_checkpoint(o.model);
  if (ck.threshold.task != Task::Entanglement)
    throw Error(ErrorCode::InvalidConfig, "bound-state generation needs an entanglement model");
  GenerationConfig cfg;
  cfg.kappa = o.kappa;
  cfg.steps = o.steps;
  cfg.learning_rate = o.lr;
  cfg.project = !o.no_project;
  cfg.seed = seed;
  const auto results = generate_bound(ck.model, ck.threshold, cfg, o.restarts, o.stop_on_success, worker_count());

  LabeledStateSet set;
  set.label = StateFamily::BoundCandidate;
  set.d = ck.threshold.d;
  set.seed = seed;
  const std::string report_path = o.report.empty() ? o.out + ".jsonl" : o.report;
  io::AtomicFile report(report_path);
  bool any = false;
  for (const auto& r : results) {
    set.states.push_back(r.state);
    Rng rng(derive_seed(r.seed, streams::kUnitaries));
    const auto cert = certify(r.state, ck.model, ck.threshold, o.certify_unitaries, rng, worker_count());
    any = any || r.success;
    json line{{"restart", r.restart},
              {"seed", r.seed},
              {"success", r.success},
              {"feasible", r.feasible},
              {"projected", r.projected},
              {"best_step", r.best_step},
              {"steps", r.objective_trace.size()},
              {"epsilon", ck.threshold.epsilon},
              {"reconstruction_error", r.reconstruction_error},
              {"min_pt_eigenvalue", cert.min_pt_eigenvalue},
              {"ppt", cert.ppt},
              {"ccnr", cert.ccnr},
              {"final_objective", r.objective_trace.back()},
              {"unitaries", cert.unitaries},
              {"median_rotated_error", cert.median_rotated_error},
              {"raw_verdict", verdict_name(cert.raw_verdict)},
              {"unitary_verdict", verdict_name(cert.unitary_verdict)},
              {"label", cert.label}};
    report.stream() << line.dump() << '\n';
    std::printf("restart %zu: success %s error %.6g min_pt_eig %.3g ccnr %.6f label \"%s\"\n", r.restart,
                r.success ? "yes" : "no", r.reconstruction_error, cert.min_pt_eigenvalue, cert.ccnr,
                cert.label.c_str());
  }
  report.commit();
  io::write_state_set(o.out, set);
  if (!any) throw Error(ErrorCode::NoFeasibleState, "no PPT state above epsilon in " + std::to_string(o.restarts) +
                                                        " restarts; diagnostics written to " + report_path);
}

// --------------------------------------------------------------- verify

struct VerifyOpts {
  std::string in;
  std::string criteria = "ppt,ccnr";
};

void run_verify(const CLI::App* cmd, const VerifyOpts& o) {
  echo(cmd, 0, false);
  bool want_ppt = false, want_ccnr = false;
  std::stringstream ss(o.criteria);
  for (std::string c; std::getline(ss, c, ',');) {
    if (c == "ppt")
      want_ppt = true;
    else if (c == "ccnr")
      want_ccnr = true;
    else
      throw Error(ErrorCode::InvalidConfig, "unknown criterion " + c);
  }
  io::StateReader reader(o.in);
  std::optional<DensityMatrix> rho;
  for (std::size_t i = 0; reader.next(rho); ++i) {
    std::printf("state %zu:", i);
    if (want_ppt) {
      const auto r = is_ppt(*rho);
      std::printf(" ppt: %s, min_pt_eig: %.17g", r.ppt ? "true" : "false", r.min_pt_eigenvalue);
    }
    if (want_ccnr) {
      if (rho->dim_a() != rho->dim_b())
        std::printf("%s ccnr: n/a", want_ppt ? "," : "");
      else
        std::printf("%s ccnr: %.17g", want_ppt ? "," : "", realignment_ccnr(*rho));
    }
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entanglement and discord classification with convolutional autoencoders"};
  app.set_config("--config", "", "TOML/INI file with option defaults; flags take precedence");
  app.require_subcommand(1);

  GenDataOpts gd;
  auto* gen_data = app.add_subcommand("gen-data", "Sample a family of states into a QSD1 file");
  gen_data->add_option("--d", gd.d, "Local dimension")->capture_default_str();
  gen_data->add_option("--family", gd.family, "mix_sep, npt, cc, cq, qc, or named: bell, horodecki, tiles")
      ->capture_default_str();
  gen_data->add_option("--n", gd.n, "Number of states")->capture_default_str();
  gen_data->add_option("--mmax", gd.m_max, "Max mixture length for mix_sep")->capture_default_str();
  gen_data->add_option("--seed", gd.seed, "RNG seed (drawn from entropy when omitted)");
  gen_data->add_option("--out", gd.out, "Output file")->required();

  TrainOpts tr;
  auto* train_cmd = app.add_subcommand("train", "Train a CAE and calibrate its threshold");
  train_cmd->add_option("--d", tr.d, "Local dimension")->capture_default_str();
  train_cmd->add_option("--task", tr.task, "ent or discord")->capture_default_str();
  train_cmd->add_option("--data", tr.data, "QSD1 training set (generated from --n and --seed when omitted)");
  train_cmd->add_option("--n", tr.n, "Generated training set size")->capture_default_str();
  train_cmd->add_option("--mmax", tr.m_max, "Max mixture length of separable training states")->capture_default_str();
  train_cmd->add_option("--epochs", tr.epochs, "Epochs (default 20 for ent, 1 for discord)");
  train_cmd->add_option("--batch", tr.batch, "Batch size")->capture_default_str();
  train_cmd->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--threshold-n", tr.threshold_n, "Calibration set size")->capture_default_str();
  train_cmd->add_option("--reg", tr.reg, "L1 penalty on conv weights")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "RNG seed (drawn from entropy when omitted)");
  train_cmd->add_option("--out", tr.out, "Checkpoint path")->required();

  ClassifyOpts cl;
  auto* classify_cmd = app.add_subcommand("classify", "Classify the states of a QSD1 file");
  classify_cmd->add_option("--model", cl.model, "Checkpoint")->required();
  classify_cmd->add_option("--in", cl.inputs, "QSD1 state file")->required()->expected(1);
  classify_cmd->add_option("--unitaries", cl.unitaries, "Local-unitary pairs per state (0: raw)")
      ->capture_default_str();
  classify_cmd->add_option("--csv", cl.csv, "Per-sample error CSV");
  classify_cmd->add_option("--seed", cl.seed, "RNG seed for the unitaries");

  ClassifyOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "Per-family accuracy over several QSD1 files");
  eval_cmd->add_option("--model", ev.model, "Checkpoint")->required();
  eval_cmd->add_option("--sets", ev.inputs, "QSD1 state files")->required();
  eval_cmd->add_option("--unitaries", ev.unitaries, "Local-unitary pairs per state (0: raw)")->capture_default_str();
  eval_cmd->add_option("--csv", ev.csv, "Per-sample error CSV");
  eval_cmd->add_option("--seed", ev.seed, "RNG seed for the unitaries");

  GenBoundOpts gb;
  auto* gen_bound = app.add_subcommand("gen-bound", "Search for PPT states the classifier rejects");
  gen_bound->add_option("--model", gb.model, "Entanglement checkpoint")->required();
  gen_bound->add_option("--kappa", gb.kappa, "Mixture size")->capture_default_str();
  gen_bound->add_option("--steps", gb.steps, "Adam steps per restart")->capture_default_str();
  gen_bound->add_option("--lr", gb.lr, "Adam learning rate")->capture_default_str();
  gen_bound->add_option("--restarts", gb.restarts, "Independent restarts")->capture_default_str();
  gen_bound->add_flag("--stop-on-success", gb.stop_on_success, "Stop after the first successful restart");
  gen_bound->add_flag("--no-project", gb.no_project, "Do not try PT-symmetrized iterates");
  gen_bound->add_option("--certify-unitaries", gb.certify_unitaries, "Unitaries for the classifier verdict")
      ->capture_default_str();
  gen_bound->add_option("--seed", gb.seed, "RNG seed (drawn from entropy when omitted)");
  gen_bound->add_option("--out", gb.out, "QSD1 file of the best state per restart")->required();
  gen_bound->add_option("--report", gb.report, "JSON-lines certification (default: <out>.jsonl)");

  VerifyOpts vf;
  auto* verify_cmd = app.add_subcommand("verify", "Print PPT and CCNR values of stored states");
  verify_cmd->add_option("--in", vf.in, "QSD1 state file")->required();
  verify_cmd->add_option("--criteria", vf.criteria, "Comma list of ppt, ccnr")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitFlags;
  }

  try {
    if (*gen_data) run_gen_data(gen_data, gd);
    if (*train_cmd) run_train(train_cmd, tr);
    if (*classify_cmd) run_classify(classify_cmd, cl);
    if (*eval_cmd) run_classify(eval_cmd, ev);
    if (*gen_bound) run_gen_bound(gen_bound, gb);
    if (*verify_cmd) run_verify(verify_cmd, vf);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
