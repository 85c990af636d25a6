#include "iois/config.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "iois/error.hpp"
#include "iois/text_io.hpp"

namespace iois {

namespace {

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i]);
  return out;
}

std::string key_name(std::string_view section, std::string_view key) {
  return std::string(section) + "." + std::string(key);
}

double to_double(std::string_view s, std::string_view section, std::string_view key) {
  double v = 0.0;
  if (!parse_double(s, v)) throw ConfigError("invalid number '" + std::string(s) + "' for " + key_name(section, key));
  return v;
}

long long to_long(std::string_view s, std::string_view section, std::string_view key) {
  long long v = 0;
  if (!parse_long(s, v)) throw ConfigError("invalid integer '" + std::string(s) + "' for " + key_name(section, key));
  return v;
}

std::size_t to_size(std::string_view s, std::string_view section, std::string_view key) {
  const long long v = to_long(s, section, key);
  if (v < 0) throw ConfigError(key_name(section, key) + " must be non-negative");
  return static_cast<std::size_t>(v);
}

bool to_bool(std::string_view s, std::string_view section, std::string_view key) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("invalid boolean '" + std::string(s) + "' for " + key_name(section, key));
}

std::vector<std::size_t> to_sizes(std::string_view s, std::string_view section, std::string_view key) {
  std::vector<std::size_t> out;
  std::string spaced(s);
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  for (auto tok : split_fields(spaced, ' ')) {
    if (tok.empty()) continue;
    out.push_back(to_size(tok, section, key));
  }
  return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::string auto_or(double v) { return v == 0.0 ? "auto" : format_double(v); }

double from_auto(std::string_view s, std::string_view section, std::string_view key) {
  return s == "auto" ? 0.0 : to_double(s, section, key);
}

struct Field {
  const char* section;
  const char* key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, std::string_view)> set;
};

#define IOIS_FIELD(SEC, KEY, GET, SET)                                                         \
  Field {                                                                                      \
    SEC, KEY, [](const RunConfig& c) -> std::string { return GET; },                           \
        [](RunConfig& c, std::string_view v) { SET; }                                          \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      IOIS_FIELD("data", "classes", std::to_string(c.data.classes), c.data.classes = to_size(v, "data", "classes")),
      IOIS_FIELD("data", "dim", std::to_string(c.data.dim), c.data.dim = to_size(v, "data", "dim")),
      IOIS_FIELD("data", "n_max", std::to_string(c.data.n_max), c.data.n_max = to_size(v, "data", "n_max")),
      IOIS_FIELD("data", "imbalance_ratio", format_double(c.data.imbalance_ratio),
                 c.data.imbalance_ratio = to_double(v, "data", "imbalance_ratio")),
      IOIS_FIELD("data", "counts", join_sizes(c.data.counts), c.data.counts = to_sizes(v, "data", "counts")),
      IOIS_FIELD("data", "radius", format_double(c.data.radius), c.data.radius = to_double(v, "data", "radius")),
      IOIS_FIELD("data", "class_std", format_double(c.data.class_std),
                 c.data.class_std = to_double(v, "data", "class_std")),
      IOIS_FIELD("data", "train_fraction", format_double(c.data.split.train),
                 c.data.split.train = to_double(v, "data", "train_fraction")),
      IOIS_FIELD("data", "val_fraction", format_double(c.data.split.val),
                 c.data.split.val = to_double(v, "data", "val_fraction")),
      IOIS_FIELD("data", "test_fraction", format_double(c.data.split.test),
                 c.data.split.test = to_double(v, "data", "test_fraction")),

      IOIS_FIELD("diffusion", "steps", std::to_string(c.diffusion_steps),
                 c.diffusion_steps = to_size(v, "diffusion", "steps")),
      IOIS_FIELD("diffusion", "beta_start", auto_or(c.beta_start),
                 c.beta_start = from_auto(v, "diffusion", "beta_start")),
      IOIS_FIELD("diffusion", "beta_end", auto_or(c.beta_end), c.beta_end = from_auto(v, "diffusion", "beta_end")),

      IOIS_FIELD("denoiser", "hidden", join_sizes(c.denoiser.arch.hidden),
                 c.denoiser.arch.hidden = to_sizes(v, "denoiser", "hidden")),
      IOIS_FIELD("denoiser", "time_embed_dim", std::to_string(c.denoiser.arch.time_embed_dim),
                 c.denoiser.arch.time_embed_dim = to_size(v, "denoiser", "time_embed_dim")),
      IOIS_FIELD("denoiser", "epochs", std::to_string(c.denoiser.epochs),
                 c.denoiser.epochs = to_size(v, "denoiser", "epochs")),
      IOIS_FIELD("denoiser", "batch_size", std::to_string(c.denoiser.batch_size),
                 c.denoiser.batch_size = to_size(v, "denoiser", "batch_size")),
      IOIS_FIELD("denoiser", "learning_rate", format_double(c.denoiser.learning_rate),
                 c.denoiser.learning_rate = to_double(v, "denoiser", "learning_rate")),
      IOIS_FIELD("denoiser", "momentum", format_double(c.denoiser.momentum),
                 c.denoiser.momentum = to_double(v, "denoiser", "momentum")),

      IOIS_FIELD("classifier", "hidden", join_sizes(c.loop.hidden),
                 c.loop.hidden = to_sizes(v, "classifier", "hidden")),
      IOIS_FIELD("classifier", "epochs", std::to_string(c.loop.epochs),
                 c.loop.epochs = to_size(v, "classifier", "epochs")),
      IOIS_FIELD("classifier", "batch_size", std::to_string(c.loop.batch_size),
                 c.loop.batch_size = to_size(v, "classifier", "batch_size")),
      IOIS_FIELD("classifier", "learning_rate", format_double(c.loop.learning_rate),
                 c.loop.learning_rate = to_double(v, "classifier", "learning_rate")),
      IOIS_FIELD("classifier", "momentum", format_double(c.loop.momentum),
                 c.loop.momentum = to_double(v, "classifier", "momentum")),
      IOIS_FIELD("classifier", "noise_augment_prob", format_double(c.loop.noise_augment_prob),
                 c.loop.noise_augment_prob = to_double(v, "classifier", "noise_augment_prob")),

      IOIS_FIELD("guidance", "scale", format_double(c.loop.guidance.scale),
                 c.loop.guidance.scale = to_double(v, "guidance", "scale")),
      IOIS_FIELD("guidance", "scale_by_noise_level", bool_text(c.loop.guidance.scale_by_noise_level),
                 c.loop.guidance.scale_by_noise_level = to_bool(v, "guidance", "scale_by_noise_level")),

      IOIS_FIELD("run", "mode", std::string(to_string(c.loop.mode)), c.loop.mode = parse_run_mode(v)),
      IOIS_FIELD("run", "seed", std::to_string(c.loop.seed),
                 c.loop.seed = static_cast<std::uint64_t>(to_size(v, "run", "seed"))),
      IOIS_FIELD("run", "synthetic_budget", std::to_string(c.loop.synthetic_budget),
                 c.loop.synthetic_budget = to_long(v, "run", "synthetic_budget")),
      IOIS_FIELD("run", "synthetic_fraction", format_double(c.loop.synthetic_fraction),
                 c.loop.synthetic_fraction = to_double(v, "run", "synthetic_fraction")),
      IOIS_FIELD("run", "synthesis_start_epoch", std::to_string(c.loop.synthesis_start_epoch),
                 c.loop.synthesis_start_epoch = to_size(v, "run", "synthesis_start_epoch")),
      IOIS_FIELD("run", "offline_guide_epochs", std::to_string(c.loop.offline_guide_epochs),
                 c.loop.offline_guide_epochs = to_size(v, "run", "offline_guide_epochs")),
      IOIS_FIELD("run", "dump_synthetic", bool_text(c.dump_synthetic),
                 c.dump_synthetic = to_bool(v, "run", "dump_synthetic")),
  };
  return table;
}

#undef IOIS_FIELD

}  // namespace

MixtureSpec RunConfig::mixture_spec() const {
  MixtureSpec spec;
  spec.classes = data.classes;
  spec.dim = data.dim;
  spec.means = ring_means(data.classes, data.dim, data.radius);
  spec.class_std.assign(data.classes, data.class_std);
  spec.n_max = data.n_max;
  spec.imbalance_ratio = data.imbalance_ratio;
  spec.class_counts = data.counts;
  return spec;
}

NoiseSchedule RunConfig::schedule() const {
  if (beta_start == 0.0 && beta_end == 0.0) return default_schedule(diffusion_steps);
  return build_schedule(diffusion_steps, beta_start, beta_end);
}

void RunConfig::validate() const {
  try {
    mixture_spec().validate();
    schedule();
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }
  if ((beta_start == 0.0) != (beta_end == 0.0)) {
    throw ConfigError("diffusion.beta_start and diffusion.beta_end must both be set or both be auto");
  }
  if (denoiser.batch_size == 0 || loop.batch_size == 0) throw ConfigError("batch sizes must be positive");
  if (denoiser.arch.time_embed_dim % 2 != 0) throw ConfigError("denoiser.time_embed_dim must be even");
  if (loop.epochs == 0) throw ConfigError("classifier.epochs must be positive");
  if (!(loop.guidance.scale >= 0.0)) throw ConfigError("guidance.scale must be non-negative");
  if (!(loop.noise_augment_prob >= 0.0 && loop.noise_augment_prob <= 1.0)) {
    throw ConfigError("classifier.noise_augment_prob must lie in [0, 1]");
  }
  if (!(loop.synthetic_fraction >= 0.0)) throw ConfigError("run.synthetic_fraction must be non-negative");
  if (!(loop.learning_rate >= 0.0 && denoiser.learning_rate >= 0.0)) {
    throw ConfigError("learning rates must be non-negative");
  }
}

RunConfig default_run_config() { return RunConfig{}; }

void apply_setting(RunConfig& cfg, std::string_view section, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (section == f.section && key == f.key) {
      f.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key_name(section, key) + "'");
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string_view::npos || dot == std::string_view::npos || dot > eq) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form section.key=value");
  }
  apply_setting(cfg, assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1),
                assignment.substr(eq + 1));
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  std::string_view current;
  for (const auto& f : fields()) {
    if (current != f.section) {
      if (!current.empty()) out += '\n';
      out += "[" + std::string(f.section) + "]\n";
      current = f.section;
    }
    out += std::string(f.key) + " = " + f.get(cfg) + "\n";
  }
  return out;
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig cfg = default_run_config();
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(source + ": key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : body) {
      try {
        apply_setting(cfg, section, key, value.data());
      } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
      }
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_file(path), path.string());
}

}  // namespace iois
