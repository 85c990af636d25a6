#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "iois/classifier.hpp"
#include "iois/diffusion.hpp"

namespace iois {

// Text checkpoints shared by the denoiser and the classifier:
//
//   iois-checkpoint 1
//   kind denoiser|classifier
//   [data_dim, time_embed_dim, schedule lines for denoisers]
//   net <activation> <head> <dims...>
//   w <values>          one w/b pair per layer
//   b <values>
inline constexpr int kCheckpointVersion = 1;

struct DenoiserCheckpoint {
  DenoiserModel model;
  NoiseSchedule schedule;
};

std::string format_denoiser(const DenoiserModel& model, const NoiseSchedule& sched);
std::string format_classifier(const ClassifierModel& model);

// expected_dim, when set, must match the stored data dimension (ConfigError otherwise).
DenoiserCheckpoint parse_denoiser(std::string_view text, const std::string& source,
                                  std::optional<std::size_t> expected_dim = std::nullopt);
ClassifierModel parse_classifier(std::string_view text, const std::string& source);

void save_denoiser(const DenoiserModel& model, const NoiseSchedule& sched,
                   const std::filesystem::path& path);
DenoiserCheckpoint load_denoiser(const std::filesystem::path& path,
                                 std::optional<std::size_t> expected_dim = std::nullopt);
void save_classifier(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_classifier(const std::filesystem::path& path);

}  // namespace iois
