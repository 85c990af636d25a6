#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "iois/aas.hpp"
#include "iois/classifier.hpp"
#include "iois/dataset.hpp"
#include "iois/diffusion.hpp"
#include "iois/metrics.hpp"

namespace iois {

// ce_baseline: real data only. offline: one uniform synthetic batch drawn with
// the initial classifier before training. ois_uniform / ois_aas: a fresh batch
// after every epoch, split uniformly or by per-class training accuracy.
enum class RunMode { ce_baseline, offline, ois_uniform, ois_aas };

std::string_view to_string(RunMode mode);
RunMode parse_run_mode(std::string_view s);

struct LoopConfig {
  RunMode mode = RunMode::ois_aas;
  std::size_t epochs = 60;
  std::vector<std::size_t> hidden{64, 64};
  double learning_rate = 0.05;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  // Synthetic budget K; negative means round(synthetic_fraction * |real_train|).
  std::int64_t synthetic_budget = -1;
  double synthetic_fraction = 0.2;
  // Epochs of classifier updates before the first refresh.
  std::size_t synthesis_start_epoch = 1;
  GuidanceConfig guidance{1.0, false};
  // Offline mode: epochs of real-data training given to the classifier that
  // guides the one-off synthetic batch (0 = the untrained initial classifier).
  std::size_t offline_guide_epochs = 0;
  // Probability of replacing a training row by a forward-corrupted copy.
  double noise_augment_prob = 0.0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

struct EpochReport {
  std::size_t epoch = 0;  // 1-based
  std::size_t train_size = 0;
  double train_loss = 0.0;
  std::vector<double> class_accuracy;       // on real training rows
  std::optional<AllocationPlan> allocation;  // computed after this epoch's update
  MetricSet validation;
  double seconds = 0.0;
};

struct RunResult {
  ClassifierModel best_model;
  ClassifierModel last_model;
  std::vector<EpochReport> reports;
  std::size_t chosen_epoch = 0;
  MetricSet test;
  std::optional<AllocationPlan> offline_allocation;
  std::vector<double> offline_accuracy;  // initial classifier on real training rows
};

// Called with (epoch, batch) whenever a synthetic batch is produced. The
// offline batch reports epoch 0.
using SyntheticObserver = std::function<void(std::size_t, const LabeledDataset&)>;

std::int64_t resolve_budget(const LoopConfig& cfg, std::size_t real_train_size);

// k_i guided chains per class i, labelled with their guidance class. Chains are
// seeded from (seed, epoch, chain index).
LabeledDataset synthesize_batch(const AllocationPlan& allocation, const DenoiserModel& model,
                                const ClassifierModel& classifier, const GuidanceConfig& guidance,
                                const NoiseSchedule& sched, std::size_t epoch, std::uint64_t seed,
                                std::size_t workers = 1);

// Epoch (1-based) with the highest validation Macro-F1; ties pick the earliest.
std::size_t select_best_model(std::span<const EpochReport> reports);

MetricSet evaluate_classifier(const ClassifierModel& model, const LabeledDataset& ds);

// Synthesis modes need both model and sched.
RunResult run_training(const LoopConfig& cfg, const LabeledDataset& real_train,
                       const LabeledDataset& val, const LabeledDataset& test,
                       const DenoiserModel* model, const NoiseSchedule* sched,
                       const SyntheticObserver& on_synthetic = {});

}  // namespace iois
