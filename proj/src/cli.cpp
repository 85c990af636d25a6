#include "iois/cli.hpp"

#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "iois/checkpoint.hpp"
#include "iois/config.hpp"
#include "iois/error.hpp"
#include "iois/text_io.hpp"

namespace iois {

namespace fs = std::filesystem;

std::string format_report_csv(const RunResult& result, std::size_t c) {
  std::string out = "epoch,train_size,train_loss";
  for (std::size_t i = 0; i < c; ++i) out += ",acc_" + std::to_string(i);
  for (std::size_t i = 0; i < c; ++i) out += ",k_" + std::to_string(i);
  out += ",val_macro_f1,val_bacc,val_mcc\n";
  for (const auto& r : result.reports) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.train_size) + "," + format_double(r.train_loss);
    for (double a : r.class_accuracy) out += "," + format_double(a);
    for (std::size_t i = 0; i < c; ++i) {
      out += ",";
      if (r.allocation) out += std::to_string(r.allocation->k[i]);
    }
    out += "," + format_metric(r.validation.macro_f1) + "," + format_metric(r.validation.balanced_accuracy) +
           "," + format_metric(r.validation.mcc) + "\n";
  }
  return out;
}

std::string format_allocations_csv(const RunResult& result, std::size_t c) {
  std::string out = "epoch";
  for (std::size_t i = 0; i < c; ++i) out += ",acc_" + std::to_string(i);
  for (std::size_t i = 0; i < c; ++i) out += ",k_" + std::to_string(i);
  out += "\n";
  auto row = [&](std::size_t epoch, const std::vector<double>& acc, const AllocationPlan& plan) {
    out += std::to_string(epoch);
    for (std::size_t i = 0; i < c; ++i) out += "," + (i < acc.size() ? format_double(acc[i]) : std::string());
    for (auto k : plan.k) out += "," + std::to_string(k);
    out += "\n";
  };
  if (result.offline_allocation) row(0, result.offline_accuracy, *result.offline_allocation);
  for (const auto& r : result.reports) {
    if (r.allocation) row(r.epoch, r.class_accuracy, *r.allocation);
  }
  return out;
}

std::string format_test_metrics_csv(const RunResult& result, RunMode mode, std::uint64_t seed) {
  return "mode,seed,chosen_epoch,macro_f1,bacc,mcc\n" + std::string(to_string(mode)) + "," +
         std::to_string(seed) + "," + std::to_string(result.chosen_epoch) + "," +
         format_metric(result.test.macro_f1) + "," + format_metric(result.test.balanced_accuracy) + "," +
         format_metric(result.test.mcc) + "\n";
}

std::string format_timing_csv(const RunResult& result) {
  std::string out = "epoch,seconds\n";
  for (const auto& r : result.reports) out += std::to_string(r.epoch) + "," + format_double(r.seconds) + "\n";
  return out;
}

std::string format_comparison_csv(const std::vector<RunSummary>& runs) {
  std::string out = "mode,seed,macro_f1,bacc,mcc\n";
  std::vector<std::string> order;
  std::map<std::string, std::pair<MetricSet, std::size_t>> sums;
  for (const auto& r : runs) {
    out += r.mode + "," + r.seed + "," + format_metric(r.metrics.macro_f1) + "," +
           format_metric(r.metrics.balanced_accuracy) + "," + format_metric(r.metrics.mcc) + "\n";
    auto [it, inserted] = sums.try_emplace(r.mode, MetricSet{}, 0);
    if (inserted) order.push_back(r.mode);
    it->second.first.macro_f1 += r.metrics.macro_f1;
    it->second.first.balanced_accuracy += r.metrics.balanced_accuracy;
    it->second.first.mcc += r.metrics.mcc;
    ++it->second.second;
  }
  for (const auto& mode : order) {
    const auto& [s, n] = sums.at(mode);
    const double k = static_cast<double>(n);
    out += mode + ",mean," + format_metric(s.macro_f1 / k) + "," + format_metric(s.balanced_accuracy / k) + "," +
           format_metric(s.mcc / k) + "\n";
  }
  return out;
}

RunSummary read_test_metrics(const fs::path& run_dir) {
  const fs::path file = run_dir / "test_metrics.csv";
  const std::string text = read_file(file);
  std::istringstream in(text);
  std::string header, row;
  std::getline(in, header);
  if (header != "mode,seed,chosen_epoch,macro_f1,bacc,mcc" || !std::getline(in, row)) {
    throw ParseError(file.string(), 1, 1, "not a test_metrics.csv file");
  }
  auto f = split_fields(row);
  RunSummary s;
  if (f.size() != 6 || !parse_double(f[3], s.metrics.macro_f1) ||
      !parse_double(f[4], s.metrics.balanced_accuracy) || !parse_double(f[5], s.metrics.mcc)) {
    throw ParseError(file.string(), 2, 1, "malformed metrics row");
  }
  s.mode = std::string(f[0]);
  s.seed = std::string(f[1]);
  return s;
}

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "INI config file")->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.overrides, "Override a config value: section.key=value");
  cmd->add_option("--seed", opts.seed, "Master seed (overrides run.seed)");
}

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig cfg = opts.config_path.empty() ? default_run_config() : load_config(opts.config_path);
  for (const auto& o : opts.overrides) apply_override(cfg, o);
  if (opts.seed) cfg.loop.seed = *opts.seed;
  cfg.validate();
  return cfg;
}

std::string loss_trace_csv(const std::vector<double>& trace) {
  std::string out = "epoch,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out += std::to_string(i + 1) + "," + format_double(trace[i]) + "\n";
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Iterative online synthesis with a classifier-guided diffusion model", "iois"};
  app.require_subcommand(1);

  // gen-data
  CommonOptions gen_opts;
  std::string gen_out;
  std::optional<std::size_t> gen_classes, gen_dim, gen_n_max;
  std::optional<double> gen_ratio;
  std::vector<std::size_t> gen_counts;
  auto* gen = app.add_subcommand("gen-data", "Generate an imbalanced Gaussian-mixture dataset");
  add_common(gen, gen_opts);
  gen->add_option("--out", gen_out, "Output dataset file")->required();
  gen->add_option("--classes", gen_classes, "Number of classes");
  gen->add_option("--dim", gen_dim, "Feature dimension");
  gen->add_option("--n-max", gen_n_max, "Size of the largest class");
  gen->add_option("--ratio", gen_ratio, "Imbalance ratio (largest / smallest class); clears explicit counts");
  gen->add_option("--counts", gen_counts, "Explicit class sizes")->delimiter(',');

  // pretrain-dm
  CommonOptions pre_opts;
  std::string pre_data, pre_out, pre_trace;
  auto* pre = app.add_subcommand("pretrain-dm", "Train the label-free denoiser on the training split");
  add_common(pre, pre_opts);
  pre->add_option("--data", pre_data, "Dataset file")->required()->check(CLI::ExistingFile);
  pre->add_option("--out", pre_out, "Checkpoint file")->required();
  pre->add_option("--trace", pre_trace, "Loss trace CSV (default: <out>.loss.csv)");

  // train
  CommonOptions train_opts;
  std::string train_data, train_dm, train_out, train_mode;
  std::size_t train_workers = 1;
  auto* train = app.add_subcommand("train", "Run the classifier training loop in one mode");
  add_common(train, train_opts);
  train->add_option("--data", train_data, "Dataset file")->required()->check(CLI::ExistingFile);
  train->add_option("--dm", train_dm, "Denoiser checkpoint (not needed for ce_baseline)");
  train->add_option("--mode", train_mode, "ce_baseline | offline | ois_uniform | ois_aas");
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--workers", train_workers, "Sampling threads (does not change results)")
      ->check(CLI::PositiveNumber);

  // report
  std::vector<std::string> report_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Tabulate test metrics of finished runs");
  report->add_option("runs", report_dirs, "Run output directories")->required();
  report->add_option("--out", report_out, "Comparison CSV (default: stdout)");

  // sample
  std::string sample_dm, sample_clf, sample_out;
  std::optional<int> sample_class;
  std::size_t sample_n = 100, sample_workers = 1;
  double sample_scale = 1.0;
  bool sample_noise_level = false;
  std::uint64_t sample_seed = 0;
  auto* smp = app.add_subcommand("sample", "Dump (optionally guided) samples from a denoiser");
  smp->add_option("--dm", sample_dm, "Denoiser checkpoint")->required()->check(CLI::ExistingFile);
  smp->add_option("--classifier", sample_clf, "Classifier checkpoint for guidance")->check(CLI::ExistingFile);
  smp->add_option("--class", sample_class, "Guidance class");
  smp->add_option("--scale", sample_scale, "Guidance scale s");
  smp->add_flag("--scale-by-noise-level", sample_noise_level, "Multiply the guidance term by sqrt(1 - abar_t)");
  smp->add_option("-n,--count", sample_n, "Number of chains");
  smp->add_option("--seed", sample_seed, "Seed");
  smp->add_option("--workers", sample_workers, "Sampling threads")->check(CLI::PositiveNumber);
  smp->add_option("--out", sample_out, "Output dataset file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      RunConfig cfg = resolve_config(gen_opts);
      if (gen_classes) cfg.data.classes = *gen_classes;
      if (gen_dim) cfg.data.dim = *gen_dim;
      if (gen_n_max) cfg.data.n_max = *gen_n_max;
      if (gen_ratio) {
        cfg.data.imbalance_ratio = *gen_ratio;
        cfg.data.counts.clear();
      }
      if (!gen_counts.empty()) cfg.data.counts = gen_counts;
      if ((gen_classes || gen_ratio || gen_n_max) && gen_counts.empty()) cfg.data.counts.clear();
      cfg.validate();
      const auto ds = make_imbalanced_mixture(cfg.mixture_spec(), cfg.loop.seed);
      save_dataset(ds, gen_out);
      std::string counts;
      for (auto n : ds.class_counts()) counts += (counts.empty() ? "" : ",") + std::to_string(n);
      out << "wrote " << ds.size() << " samples (class counts " << counts << ") to " << gen_out << "\n";
    } else if (*pre) {
      const RunConfig cfg = resolve_config(pre_opts);
      const auto ds = load_dataset(pre_data);
      const auto split = split_dataset(ds, cfg.data.split, cfg.loop.seed);
      const auto sched = cfg.schedule();
      const auto res = pretrain_dm(split.train.features(), sched, cfg.denoiser, cfg.loop.seed);
      save_denoiser(res.model, sched, pre_out);
      write_file(pre_trace.empty() ? pre_out + ".loss.csv" : pre_trace, loss_trace_csv(res.loss_trace));
      if (!res.loss_trace.empty()) {
        out << "denoiser loss " << format_double(res.loss_trace.front()) << " -> "
            << format_double(res.loss_trace.back()) << "\n";
      }
    } else if (*train) {
      RunConfig cfg = resolve_config(train_opts);
      if (!train_mode.empty()) cfg.loop.mode = parse_run_mode(train_mode);
      cfg.loop.workers = train_workers;
      const auto ds = load_dataset(train_data);
      const auto split = split_dataset(ds, cfg.data.split, cfg.loop.seed);
      std::optional<DenoiserCheckpoint> dm;
      if (cfg.loop.mode != RunMode::ce_baseline) {
        if (train_dm.empty()) throw ConfigError("mode " + std::string(to_string(cfg.loop.mode)) + " needs --dm");
        dm = load_denoiser(train_dm, ds.dim());
      }
      const fs::path dir = train_out;
      fs::create_directories(dir);
      write_file(dir / "config.ini", format_config(cfg));
      SyntheticObserver dump;
      if (cfg.dump_synthetic) {
        dump = [&](std::size_t epoch, const LabeledDataset& batch) {
          save_dataset(batch, dir / ("synthetic_epoch" + std::to_string(epoch) + ".csv"));
        };
      }
      const auto res = run_training(cfg.loop, split.train, split.val, split.test, dm ? &dm->model : nullptr,
                                    dm ? &dm->schedule : nullptr, dump);
      const std::size_t c = ds.num_classes();
      write_file(dir / "report.csv", format_report_csv(res, c));
      write_file(dir / "allocations.csv", format_allocations_csv(res, c));
      write_file(dir / "test_metrics.csv", format_test_metrics_csv(res, cfg.loop.mode, cfg.loop.seed));
      write_file(dir / "timing.csv", format_timing_csv(res));
      save_classifier(res.best_model, dir / "classifier_best.ckpt");
      save_classifier(res.last_model, dir / "classifier_last.ckpt");
      out << to_string(cfg.loop.mode) << " seed " << cfg.loop.seed << ": epoch " << res.chosen_epoch
          << " macro_f1 " << format_metric(res.test.macro_f1) << " bacc "
          << format_metric(res.test.balanced_accuracy) << " mcc " << format_metric(res.test.mcc) << "\n";
    } else if (*report) {
      std::vector<RunSummary> runs;
      for (const auto& d : report_dirs) {
        try {
          runs.push_back(read_test_metrics(d));
        } catch (const Error& e) {
          err << "warning: skipping " << d << ": " << e.what() << "\n";
        }
      }
      if (runs.empty()) throw ConfigError("no completed runs among the given directories");
      const std::string table = format_comparison_csv(runs);
      if (report_out.empty()) {
        out << table;
      } else {
        write_file(report_out, table);
      }
    } else if (*smp) {
      const auto dm = load_denoiser(sample_dm);
      SampleRequest req;
      req.count = sample_n;
      req.data_dim = dm.model.data_dim();
      req.seed = sample_seed;
      req.stream = kSampleCommandStream;
      req.workers = sample_workers;
      req.guidance = {sample_scale, sample_noise_level};
      std::optional<ClassifierModel> clf;
      std::size_t classes = 1;
      int label = 0;
      if (!sample_clf.empty()) {
        if (!sample_class) throw ConfigError("--classifier requires --class");
        clf = load_classifier(sample_clf);
        classes = clf->num_classes;
        label = *sample_class;
        if (label < 0 || static_cast<std::size_t>(label) >= classes) {
          throw ConfigError("--class must lie in [0, " + std::to_string(classes) + ")");
        }
        req.labels.assign(sample_n, label);
        req.classifier = &*clf;
      } else if (sample_class) {
        throw ConfigError("--class requires --classifier");
      }
      NumArray x = sample(dm.model, dm.schedule, req);
      LabeledDataset batch(std::move(x), std::vector<int>(sample_n, label), classes,
                           std::vector<Provenance>(sample_n, Provenance::synthetic));
      save_dataset(batch, sample_out);
      out << "wrote " << sample_n << " samples to " << sample_out << "\n";
    }
  } catch (const NumericError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace iois
