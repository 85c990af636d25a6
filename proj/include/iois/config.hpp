#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "iois/dataset.hpp"
#include "iois/diffusion.hpp"
#include "iois/iois_loop.hpp"

namespace iois {

struct DataConfig {
  std::size_t classes = 3;
  std::size_t dim = 2;
  std::size_t n_max = 500;
  double imbalance_ratio = 10.0;
  std::vector<std::size_t> counts{500, 150, 50};  // empty = geometric decay
  double radius = 1.5;
  double class_std = 1.0;
  SplitFractions split;
};

// Every tunable of an experiment. Serialised as INI with one section per
// module: [data] [diffusion] [denoiser] [classifier] [guidance] [run].
struct RunConfig {
  DataConfig data;
  std::size_t diffusion_steps = 100;
  double beta_start = 0.0;  // 0 = default linear schedule rescaled to diffusion_steps
  double beta_end = 0.0;
  DenoiserTraining denoiser;
  LoopConfig loop;
  bool dump_synthetic = false;

  MixtureSpec mixture_spec() const;
  NoiseSchedule schedule() const;
  void validate() const;
};

RunConfig default_run_config();

// Throws ConfigError naming the key when it is unknown or its value is invalid.
void apply_setting(RunConfig& cfg, std::string_view section, std::string_view key,
                   std::string_view value);
// "section.key=value"
void apply_override(RunConfig& cfg, std::string_view assignment);

std::string format_config(const RunConfig& cfg);
RunConfig parse_config(const std::string& text, const std::string& source = "<memory>");
RunConfig load_config(const std::filesystem::path& path);

}  // namespace iois
