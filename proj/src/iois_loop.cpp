#include "iois/iois_loop.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "iois/error.hpp"
#include "iois/rng.hpp"

namespace iois {

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::ce_baseline: return "ce_baseline";
    case RunMode::offline: return "offline";
    case RunMode::ois_uniform: return "ois_uniform";
    case RunMode::ois_aas: return "ois_aas";
  }
  return "unknown";
}

RunMode parse_run_mode(std::string_view s) {
  for (RunMode m : {RunMode::ce_baseline, RunMode::offline, RunMode::ois_uniform, RunMode::ois_aas}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown run mode '" + std::string(s) +
                    "' (expected ce_baseline, offline, ois_uniform or ois_aas)");
}

std::int64_t resolve_budget(const LoopConfig& cfg, std::size_t real_train_size) {
  if (cfg.synthetic_budget >= 0) return cfg.synthetic_budget;
  return static_cast<std::int64_t>(std::llround(cfg.synthetic_fraction * static_cast<double>(real_train_size)));
}

LabeledDataset synthesize_batch(const AllocationPlan& allocation, const DenoiserModel& model,
                                const ClassifierModel& classifier, const GuidanceConfig& guidance,
                                const NoiseSchedule& sched, std::size_t epoch, std::uint64_t seed,
                                std::size_t workers) {
  std::int64_t sum = 0;
  for (auto k : allocation.k) sum += k;
  if (sum != allocation.total) throw SpecError("allocation does not sum to its budget");
  if (allocation.k.size() != classifier.num_classes) throw SpecError("allocation has the wrong class count");

  SampleRequest req;
  for (std::size_t c = 0; c < allocation.k.size(); ++c) {
    req.labels.insert(req.labels.end(), static_cast<std::size_t>(allocation.k[c]), static_cast<int>(c));
  }
  if (req.labels.empty()) return LabeledDataset::empty(model.data_dim(), classifier.num_classes);
  req.count = req.labels.size();
  req.data_dim = model.data_dim();
  req.classifier = &classifier;
  req.guidance = guidance;
  req.seed = seed;
  req.stream = epoch;
  req.workers = workers;
  NumArray x = sample(model, sched, req);
  std::vector<Provenance> prov(req.count, Provenance::synthetic);
  return LabeledDataset(std::move(x), std::move(req.labels), classifier.num_classes, std::move(prov));
}

std::size_t select_best_model(std::span<const EpochReport> reports) {
  if (reports.empty()) throw SpecError("select_best_model: no epochs were run");
  std::size_t best = 0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    if (reports[i].validation.macro_f1 > reports[best].validation.macro_f1) best = i;
  }
  return reports[best].epoch;
}

MetricSet evaluate_classifier(const ClassifierModel& model, const LabeledDataset& ds) {
  if (ds.empty()) return {};
  return evaluate(confusion(ds.labels(), model.predict(ds.features()), model.num_classes));
}

namespace {

void check_inputs(const LoopConfig& cfg, const LabeledDataset& real_train, const LabeledDataset& val,
                  const LabeledDataset& test, const DenoiserModel* model, const NoiseSchedule* sched) {
  if (real_train.empty()) throw SpecError("run_training: empty training set");
  if (cfg.epochs == 0) throw ConfigError("run_training: at least one epoch is required");
  for (const LabeledDataset* ds : {&val, &test}) {
    if (!ds->empty() && (ds->dim() != real_train.dim() || ds->num_classes() != real_train.num_classes())) {
      throw ConfigError("run_training: validation/test sets do not match the training set");
    }
  }
  if (cfg.mode == RunMode::ce_baseline) return;
  if (model == nullptr || sched == nullptr) {
    throw ConfigError(std::string("mode ") + std::string(to_string(cfg.mode)) + " needs a pretrained diffusion model");
  }
  if (model->data_dim() != real_train.dim()) {
    throw ConfigError("diffusion model was trained on " + std::to_string(model->data_dim()) +
                      "-dimensional data, but the dataset has dimension " + std::to_string(real_train.dim()));
  }
  if (model->steps() != sched->steps) throw ConfigError("diffusion model and schedule disagree on the step count");
}

}  // namespace

RunResult run_training(const LoopConfig& cfg, const LabeledDataset& real_train,
                       const LabeledDataset& val, const LabeledDataset& test,
                       const DenoiserModel* model, const NoiseSchedule* sched,
                       const SyntheticObserver& on_synthetic) {
  check_inputs(cfg, real_train, val, test, model, sched);
  const std::size_t c = real_train.num_classes();
  const std::int64_t budget = resolve_budget(cfg, real_train.size());
  if (budget < 0) throw ConfigError("synthetic budget must be non-negative");

  ClassifierModel clf = make_classifier(real_train.dim(), c, cfg.hidden, cfg.seed);
  SgdMomentum optimizer(clf.net, cfg.momentum);
  RunResult result;

  BatchTransform augment;
  Rng augment_rng = make_rng(cfg.seed, {kNoiseAugmentStream});
  if (cfg.noise_augment_prob > 0.0) {
    if (sched == nullptr) throw ConfigError("noise augmentation needs a diffusion schedule");
    augment = [&](NumArray& batch) {
      std::bernoulli_distribution coin(cfg.noise_augment_prob);
      std::uniform_int_distribution<std::size_t> step(1, sched->steps);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (std::size_t r = 0; r < batch.rows(); ++r) {
        if (!coin(augment_rng)) continue;
        const std::size_t t = step(augment_rng);
        const double a = std::sqrt(sched->alpha_bar_at(t));
        const double b = std::sqrt(1.0 - sched->alpha_bar_at(t));
        for (double& v : batch.row(r)) v = a * v + b * normal(augment_rng);
      }
    };
  }

  LabeledDataset synthetic = LabeledDataset::empty(real_train.dim(), c);
  if (cfg.mode == RunMode::offline) {
    AllocationPlan plan = uniform_allocation(c, budget);
    ClassifierModel guide = clf;
    if (cfg.offline_guide_epochs > 0) {
      SgdMomentum guide_opt(guide.net, cfg.momentum);
      for (std::size_t e = 0; e < cfg.offline_guide_epochs; ++e) {
        const ClassifierStep step{step_decay_lr(cfg.learning_rate, e, cfg.offline_guide_epochs), cfg.batch_size};
        train_epoch(guide, guide_opt, real_train, step, derive_seed(cfg.seed, {kShuffleStream, e, 1}));
      }
    }
    result.offline_accuracy = per_class_accuracy(guide, real_train);
    synthetic = synthesize_batch(plan, *model, guide, cfg.guidance, *sched, 0, cfg.seed, cfg.workers);
    if (on_synthetic) on_synthetic(0, synthetic);
    result.offline_allocation = std::move(plan);
  }

  double best_f1 = -1.0;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto started = std::chrono::steady_clock::now();
    EpochReport report;
    report.epoch = e + 1;
    const LabeledDataset trainset = synthetic.empty() ? real_train : merge(real_train, synthetic);
    report.train_size = trainset.size();
    const ClassifierStep step{step_decay_lr(cfg.learning_rate, e, cfg.epochs), cfg.batch_size};
    report.train_loss = train_epoch(clf, optimizer, trainset, step,
                                    derive_seed(cfg.seed, {kShuffleStream, e}), augment);
    report.class_accuracy = per_class_accuracy(clf, real_train);

    const bool refresh = (cfg.mode == RunMode::ois_uniform || cfg.mode == RunMode::ois_aas) &&
                         report.epoch >= cfg.synthesis_start_epoch;
    if (refresh) {
      AllocationPlan plan = cfg.mode == RunMode::ois_aas ? allocate(report.class_accuracy, budget)
                                                         : uniform_allocation(c, budget);
      // The batch produced after the last update would never be trained on.
      if (e + 1 < cfg.epochs) {
        synthetic = synthesize_batch(plan, *model, clf, cfg.guidance, *sched, report.epoch, cfg.seed,
                                     cfg.workers);
        if (on_synthetic) on_synthetic(report.epoch, synthetic);
      }
      report.allocation = std::move(plan);
    }

    report.validation = evaluate_classifier(clf, val);
    if (report.validation.macro_f1 > best_f1) {
      best_f1 = report.validation.macro_f1;
      result.best_model = clf;
    }
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.reports.push_back(std::move(report));
  }

  result.chosen_epoch = select_best_model(result.reports);
  result.last_model = clf;
  result.test = evaluate_classifier(result.best_model, test);
  return result;
}

}  // namespace iois
