// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset, e.g. `iois_acceptance 5 6`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <fmt/format.h>

#include "iois/aas.hpp"
#include "iois/classifier.hpp"
#include "iois/cli.hpp"
#include "iois/dataset.hpp"
#include "iois/diffusion.hpp"
#include "iois/iois_loop.hpp"
#include "iois/metrics.hpp"
#include "iois/text_io.hpp"
#include "test_support.hpp"

namespace {

using namespace iois;

struct Outcome {
  bool pass = false;
  std::string detail;
};

// ---- 1. allocation exactness ------------------------------------------------

Outcome allocation_exactness() {
  // Frozen from tests/oracles/aas_oracle.py.
  const std::vector<std::int64_t> expected{24, 32, 44};
  const std::vector<double> expected_fractions{0.23969447920584977, 0.32355370388335947, 0.4367518169107908};
  const auto plan = allocate(std::vector<double>{0.9, 0.6, 0.3}, 100);
  bool ok = plan.k == expected;
  for (std::size_t i = 0; i < 3; ++i) ok = ok && std::abs(plan.fractions[i] - expected_fractions[i]) < 1e-12;

  std::mt19937_64 rng(20240101);
  std::uniform_int_distribution<int> classes(1, 12);
  std::uniform_int_distribution<std::int64_t> budget(0, 5000);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> acc(static_cast<std::size_t>(classes(rng)));
    for (double& a : acc) a = unit(rng);
    const std::int64_t k = budget(rng);
    const auto p = allocate(acc, k);
    std::int64_t sum = 0;
    for (auto v : p.k) {
      sum += v;
      if (v < 0) ++violations;
    }
    if (sum != k) ++violations;
  }
  return {ok && violations == 0,
          fmt::format("k=[{},{},{}], sum violations over 10000 trials: {}", plan.k[0], plan.k[1], plan.k[2],
                      violations)};
}

// ---- 2. gradient fidelity ---------------------------------------------------

Outcome gradient_fidelity() {
  constexpr int kTrials = 100;
  constexpr double kTol = 1e-4;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst_clf = 0.0, worst_dm = 0.0;
  int failures = 0;

  for (int trial = 0; trial < kTrials; ++trial) {
    // Classifier at the default width: input gradient of log p(y|x) and a
    // random subset of cross-entropy parameter gradients.
    auto clf = make_classifier(2, 3, {64, 64}, 1000 + trial);
    NumArray x({2});
    const int y = trial % 3;
    do {
      for (double& v : x.data()) v = 2.0 * normal(rng);
    } while (!test_support::away_from_kinks(clf.net, x));
    const NumArray gx = logprob_input_gradient(clf, x, std::vector<int>{y});
    const NumArray fd = test_support::finite_difference_input(
        [&](const NumArray& p) { return clf.log_probs(p)[static_cast<std::size_t>(y)]; }, x);
    const double e_in = test_support::relative_error(gx.data(), fd.data());

    const auto ce = cross_entropy(clf, NumArray({1, 2}, {x[0], x[1]}), std::vector<int>{y});
    const auto idx = test_support::pick_indices(clf.net.parameter_count(), 40, rng);
    std::vector<double> analytic, numeric;
    for (auto i : idx) {
      analytic.push_back(ce.grads.flat(i));
      numeric.push_back(test_support::finite_difference_param(
          clf.net, i, [&](const FeedForwardNet& n) {
            ClassifierModel m{n, 3};
            return cross_entropy(m, NumArray({1, 2}, {x[0], x[1]}), std::vector<int>{y}).loss;
          }));
    }
    const double e_par = test_support::relative_error(analytic, numeric);
    worst_clf = std::max({worst_clf, e_in, e_par});

    // Denoiser at the default width with frozen (t, eps) draws.
    const auto sched = default_schedule(100);
    auto dm = make_denoiser(2, 100, DenoiserArch{}, 2000 + trial);
    NumArray x0({4, 2}), eps({4, 2});
    std::vector<std::size_t> t(4);
    std::uniform_int_distribution<std::size_t> step(1, 100);
    for (int attempt = 0;; ++attempt) {
      for (double& v : x0.data()) v = normal(rng);
      for (double& v : eps.data()) v = normal(rng);
      for (auto& s : t) s = step(rng);
      NumArray xt = x0;
      for (std::size_t r = 0; r < 4; ++r) {
        const double a = std::sqrt(sched.alpha_bar_at(t[r])), b = std::sqrt(1 - sched.alpha_bar_at(t[r]));
        for (std::size_t j = 0; j < 2; ++j) xt(r, j) = a * x0(r, j) + b * eps(r, j);
      }
      if (test_support::away_from_kinks(dm.net(), dm.network_input(xt, t))) break;
    }
    const auto loss = diffusion_loss(dm, x0, t, eps, sched);
    const auto didx = test_support::pick_indices(dm.net().parameter_count(), 40, rng);
    analytic.clear();
    numeric.clear();
    for (auto i : didx) {
      analytic.push_back(loss.grads.flat(i));
      numeric.push_back(test_support::finite_difference_param(dm.net(), i, [&](const FeedForwardNet& n) {
        DenoiserModel m(n, 2, dm.time_embed_dim(), 100);
        return diffusion_loss(m, x0, t, eps, sched).loss;
      }));
    }
    const double e_dm = test_support::relative_error(analytic, numeric);
    worst_dm = std::max(worst_dm, e_dm);
    if (e_in >= kTol || e_par >= kTol || e_dm >= kTol) ++failures;
  }
  return {failures == 0, fmt::format("{} trials each; worst relative error classifier {:.3g}, denoiser {:.3g}",
                                     kTrials, worst_clf, worst_dm)};
}

// ---- 3. reverse step identity -------------------------------------------------

class EpsilonOracle : public NoisePredictor {
 public:
  explicit EpsilonOracle(NumArray eps) : eps_(std::move(eps)) {}
  NumArray predict_noise(const NumArray&, std::size_t) const override { return eps_; }

 private:
  NumArray eps_;
};

Outcome reverse_identity() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto sched = default_schedule(100);
    NumArray x0({8, 3}), eps({8, 3});
    for (double& v : x0.data()) v = 3.0 * normal(rng);
    for (double& v : eps.data()) v = normal(rng);
    const NumArray x1 = forward_corrupt(x0, 1, eps, sched);
    const NumArray back = reverse_step(x1, 1, EpsilonOracle(eps), sched, NumArray(x0.shape()));
    for (std::size_t i = 0; i < x0.size(); ++i) worst = std::max(worst, std::abs(back[i] - x0[i]));
  }
  return {worst <= 1e-12, fmt::format("max |x0 - recovered| = {:.3g}", worst)};
}

// ---- 4. guidance reduction ------------------------------------------------------

Outcome guidance_reduction() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> step(1, 100);
  const auto sched = default_schedule(100);
  const auto dm = make_denoiser(2, 100, DenoiserArch{}, 11);
  const auto clf = make_classifier(2, 3, {64, 64}, 12);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    NumArray x({1, 2}), z({1, 2});
    for (double& v : x.data()) v = 2.0 * normal(rng);
    for (double& v : z.data()) v = normal(rng);
    const std::size_t t = step(rng);
    const std::vector<int> y{trial % 3};
    const NumArray plain = reverse_step(x, t, dm, sched, z);
    const NumArray guided = guided_reverse_step(x, t, y, dm, clf, GuidanceConfig{0.0, trial % 2 == 1}, sched, z);
    if (plain.data().size() != guided.data().size() ||
        std::memcmp(plain.data().data(), guided.data().data(), plain.size() * sizeof(double)) != 0) {
      ++mismatches;
    }
  }
  return {mismatches == 0, fmt::format("{} of 1000 randomized states differ bitwise", mismatches)};
}

// ---- 5. generative sanity ---------------------------------------------------------

Outcome generative_sanity() {
  const double mean[2] = {1.0, -0.5};
  const double var[2] = {1.0, 0.25};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  NumArray data({5000, 2});
  for (std::size_t r = 0; r < 5000; ++r) {
    for (std::size_t j = 0; j < 2; ++j) data(r, j) = mean[j] + std::sqrt(var[j]) * normal(rng);
  }
  const auto sched = default_schedule(100);
  const auto trained = pretrain_dm(data, sched, DenoiserTraining{}, 5);
  SampleRequest req;
  req.count = 5000;
  req.data_dim = 2;
  req.seed = 55;
  const NumArray s = sample(trained.model, sched, req);
  double m[2] = {0, 0}, v[2] = {0, 0};
  for (std::size_t r = 0; r < 5000; ++r) {
    for (std::size_t j = 0; j < 2; ++j) m[j] += s(r, j) / 5000.0;
  }
  for (std::size_t r = 0; r < 5000; ++r) {
    for (std::size_t j = 0; j < 2; ++j) v[j] += (s(r, j) - m[j]) * (s(r, j) - m[j]) / 5000.0;
  }
  const bool ok = std::abs(m[0] - mean[0]) <= 0.1 && std::abs(m[1] - mean[1]) <= 0.1 &&
                  std::abs(v[0] - var[0]) <= 0.15 && std::abs(v[1] - var[1]) <= 0.15;
  return {ok, fmt::format("sample mean ({:.3f}, {:.3f}) vs ({}, {}); variance ({:.3f}, {:.3f}) vs ({}, {})", m[0],
                          m[1], mean[0], mean[1], v[0], v[1], var[0], var[1])};
}

// ---- 6. guidance monotonicity -------------------------------------------------------

Outcome guidance_monotonicity() {
  MixtureSpec spec;
  spec.classes = 2;
  spec.dim = 2;
  spec.means = ring_means(2, 2, 1.5);
  spec.class_std = {1.0, 1.0};
  spec.n_max = 1000;
  spec.imbalance_ratio = 1.0;
  const auto ds = make_imbalanced_mixture(spec, 6);
  const auto sched = default_schedule(100);
  const auto dm = pretrain_dm(ds.features(), sched, DenoiserTraining{}, 6).model;
  auto clf = make_classifier(2, 2, {64, 64}, 6);
  SgdMomentum opt(clf.net, 0.9);
  for (std::size_t e = 0; e < 20; ++e) train_epoch(clf, opt, ds, {0.05, 32}, derive_seed(6, {e}));

  const std::vector<double> scales{0.0, 0.5, 1.0, 2.0, 5.0};
  std::vector<double> means;
  for (double s : scales) {
    SampleRequest req;
    req.count = 500;
    req.data_dim = 2;
    for (std::size_t i = 0; i < 500; ++i) req.labels.push_back(static_cast<int>(i % 2));
    req.classifier = &clf;
    req.guidance = {s, false};
    req.seed = 66;
    const NumArray x = sample(dm, sched, req);
    const NumArray lp = clf.log_probs(x);
    double m = 0.0;
    for (std::size_t r = 0; r < 500; ++r) m += lp(r, static_cast<std::size_t>(req.labels[r])) / 500.0;
    means.push_back(m);
  }
  const double rho = test_support::spearman(scales, means);
  return {rho >= 0.9, fmt::format("mean log p(y|x) = [{:.4f}, {:.4f}, {:.4f}, {:.4f}, {:.4f}], Spearman {:.3f}",
                                  means[0], means[1], means[2], means[3], means[4], rho)};
}

// ---- 7. directional reproduction ---------------------------------------------------

Outcome directional_reproduction() {
  const std::vector<RunMode> modes{RunMode::ce_baseline, RunMode::offline, RunMode::ois_uniform, RunMode::ois_aas};
  constexpr int kSeeds = 5;
  std::vector<std::vector<MetricSet>> results(modes.size());
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const auto ds = make_imbalanced_mixture(default_mixture_spec(), static_cast<std::uint64_t>(seed));
    const auto split = split_dataset(ds, SplitFractions{}, static_cast<std::uint64_t>(seed));
    const auto sched = default_schedule(100);
    const auto dm = pretrain_dm(split.train.features(), sched, DenoiserTraining{}, static_cast<std::uint64_t>(seed));
    for (std::size_t m = 0; m < modes.size(); ++m) {
      LoopConfig cfg;
      cfg.mode = modes[m];
      cfg.seed = static_cast<std::uint64_t>(seed);
      const auto run = run_training(cfg, split.train, split.val, split.test, &dm.model, &sched);
      results[m].push_back(run.test);
      std::printf("    seed %d %-12s macro_f1 %.4f bacc %.4f mcc %.4f (epoch %zu)\n", seed,
                  std::string(to_string(modes[m])).c_str(), run.test.macro_f1, run.test.balanced_accuracy,
                  run.test.mcc, run.chosen_epoch);
      std::fflush(stdout);
    }
  }
  int wins = 0;
  for (int s = 0; s < kSeeds; ++s) {
    if (results[3][s].macro_f1 > results[0][s].macro_f1 && results[3][s].mcc > results[0][s].mcc) ++wins;
  }
  std::vector<double> mean_mcc(modes.size(), 0.0);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    for (const auto& r : results[m]) mean_mcc[m] += r.mcc / kSeeds;
  }
  const bool ordered = mean_mcc[3] >= mean_mcc[2] && mean_mcc[2] >= mean_mcc[1] && mean_mcc[1] >= mean_mcc[0];
  return {wins >= 4 && ordered,
          fmt::format("ois_aas beats ce_baseline on {}/5 seeds; mean MCC ce {:.4f}, offline {:.4f}, "
                      "ois_uniform {:.4f}, ois_aas {:.4f}",
                      wins, mean_mcc[0], mean_mcc[1], mean_mcc[2], mean_mcc[3])};
}

// ---- 8. metrics oracle ----------------------------------------------------------------

Outcome metrics_oracle() {
  ConfusionMatrix cm(2);
  cm.at(1, 1) = 2;  // TP
  cm.at(1, 0) = 1;  // FN
  cm.at(0, 1) = 1;  // FP
  cm.at(0, 0) = 2;  // TN
  const auto m = evaluate(cm);
  bool ok = std::abs(m.macro_f1 - 0.6667) < 5e-5 && std::abs(m.balanced_accuracy - 0.6667) < 5e-5 &&
            std::abs(m.mcc - 0.3333) < 5e-5;
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> cell(0, 50);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    ConfusionMatrix b(2);
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < 2; ++j) b.at(i, j) = static_cast<std::uint64_t>(cell(rng));
    worst = std::max(worst, std::abs(mcc(b) - test_support::binary_mcc(b)));
  }
  ok = ok && worst < 1e-12;
  return {ok, fmt::format("macro_f1 {:.4f}, bacc {:.4f}, mcc {:.4f}; worst multiclass/binary MCC gap {:.3g}",
                          m.macro_f1, m.balanced_accuracy, m.mcc, worst)};
}

// ---- 9. determinism ---------------------------------------------------------------------

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / fmt::format("iois_acceptance_{}", ::getpid());
  fs::remove_all(root);
  fs::create_directories(root);
  const std::vector<std::string> quick{"--set", "denoiser.epochs=5", "--set", "classifier.epochs=3",
                                       "--set", "diffusion.steps=20"};
  auto cli = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "iois");
    std::ostringstream out, err;
    return run_cli(args, out, err);
  };
  auto with = [&](std::vector<std::string> a) {
    a.insert(a.end(), quick.begin(), quick.end());
    return a;
  };
  const auto data = (root / "data.csv").string();
  bool ok = cli({"gen-data", "--seed", "3", "--out", data}) == 0;
  ok = ok && cli({"gen-data", "--seed", "3", "--out", (root / "data2.csv").string()}) == 0;
  ok = ok && read_file(data) == read_file(root / "data2.csv");
  for (const char* ck : {"dm_a.ckpt", "dm_b.ckpt"}) {
    ok = ok && cli(with({"pretrain-dm", "--data", data, "--seed", "3", "--out", (root / ck).string()})) == 0;
  }
  ok = ok && read_file(root / "dm_a.ckpt") == read_file(root / "dm_b.ckpt") &&
       read_file(root / "dm_a.ckpt.loss.csv") == read_file(root / "dm_b.ckpt.loss.csv");
  std::vector<std::string> diffs;
  for (const char* mode : {"ce_baseline", "ois_aas"}) {
    std::vector<fs::path> dirs;
    for (const char* workers : {"1", "1", "4"}) {
      const fs::path dir = root / fmt::format("{}_{}_{}", mode, workers, dirs.size());
      dirs.push_back(dir);
      ok = ok && cli(with({"train", "--data", data, "--dm", (root / "dm_a.ckpt").string(), "--mode", mode,
                           "--seed", "3", "--workers", workers, "--set", "run.dump_synthetic=true", "--out",
                           dir.string()})) == 0;
    }
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
      const auto name = entry.path().filename();
      if (name == "timing.csv") continue;
      for (std::size_t k = 1; k < dirs.size(); ++k) {
        if (!fs::exists(dirs[k] / name) || read_file(entry.path()) != read_file(dirs[k] / name)) {
          diffs.push_back(fmt::format("{}/{}", dirs[k].filename().string(), name.string()));
        }
      }
    }
  }
  std::vector<std::string> runs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) runs.push_back(e.path().string());
  }
  std::sort(runs.begin(), runs.end());
  std::vector<std::string> rep_a{"report"}, rep_b{"report"};
  rep_a.insert(rep_a.end(), runs.begin(), runs.end());
  rep_b.insert(rep_b.end(), runs.begin(), runs.end());
  rep_a.insert(rep_a.end(), {"--out", (root / "table_a.csv").string()});
  rep_b.insert(rep_b.end(), {"--out", (root / "table_b.csv").string()});
  ok = ok && cli(rep_a) == 0 && cli(rep_b) == 0 && read_file(root / "table_a.csv") == read_file(root / "table_b.csv");
  ok = ok && diffs.empty();
  fs::remove_all(root);
  std::string detail = diffs.empty() ? "gen-data, pretrain-dm, train (workers 1/1/4) and report outputs byte-identical"
                                     : "differing outputs:";
  for (const auto& d : diffs) detail += " " + d;
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"allocation exactness and budget conservation", allocation_exactness},
      {"gradient fidelity (finite differences)", gradient_fidelity},
      {"reverse step recovers x0 at t=1", reverse_identity},
      {"guidance with s=0 equals the plain reverse step", guidance_reduction},
      {"generative sanity on a 2-D Gaussian", generative_sanity},
      {"guidance monotonicity in s", guidance_monotonicity},
      {"directional ordering of run modes", directional_reproduction},
      {"metrics oracle", metrics_oracle},
      {"determinism of CLI outputs", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %d. %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
