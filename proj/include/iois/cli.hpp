#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "iois/iois_loop.hpp"

namespace iois {

// Exit codes: 0 success, 1 usage or configuration error, 2 numeric failure.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// CSV renderers shared by the train and report commands.
std::string format_report_csv(const RunResult& result, std::size_t num_classes);
std::string format_allocations_csv(const RunResult& result, std::size_t num_classes);
std::string format_test_metrics_csv(const RunResult& result, RunMode mode, std::uint64_t seed);
std::string format_timing_csv(const RunResult& result);

struct RunSummary {
  std::string mode;
  std::string seed;
  MetricSet metrics;
};

// One row per run and a mean row per mode (in order of first appearance).
std::string format_comparison_csv(const std::vector<RunSummary>& runs);
RunSummary read_test_metrics(const std::filesystem::path& run_dir);

}  // namespace iois
