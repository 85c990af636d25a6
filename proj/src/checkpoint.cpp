#include "iois/checkpoint.hpp"

#include <sstream>
#include <vector>

#include "iois/error.hpp"
#include "iois/text_io.hpp"

namespace iois {

namespace {

void append_values(std::string& out, char tag, const NumArray& a) {
  out += tag;
  for (double v : a.data()) {
    out += ' ';
    out += format_double(v);
  }
  out += '\n';
}

std::string format_net(const FeedForwardNet& net) {
  std::string out = "net ";
  out += to_string(net.activation());
  out += ' ';
  out += to_string(net.head());
  for (std::size_t d : net.layer_dims()) out += " " + std::to_string(d);
  out += '\n';
  for (const auto& layer : net.layers()) {
    append_values(out, 'w', layer.weight);
    append_values(out, 'b', layer.bias);
  }
  return out;
}

class TokenReader {
 public:
  TokenReader(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

  // Next non-empty line split on spaces; the first token must equal key.
  std::vector<std::string_view> line(std::string_view key) {
    std::string_view l;
    while (true) {
      if (pos_ >= text_.size()) fail(1, "unexpected end of file, expected '" + std::string(key) + "'");
      const std::size_t end = text_.find('\n', pos_);
      l = text_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_);
      pos_ = end == std::string_view::npos ? text_.size() : end + 1;
      ++line_no_;
      if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
      if (!l.empty()) break;
    }
    current_ = l;
    auto tokens = split_fields(l, ' ');
    if (tokens.front() != key) fail(1, "expected '" + std::string(key) + "'");
    return tokens;
  }

  double number(std::string_view tok) {
    double v = 0.0;
    if (!parse_double(tok, v)) fail(column(tok), "invalid number '" + std::string(tok) + "'");
    return v;
  }

  std::size_t count(std::string_view tok) {
    long long v = 0;
    if (!parse_long(tok, v) || v < 0) fail(column(tok), "invalid count '" + std::string(tok) + "'");
    return static_cast<std::size_t>(v);
  }

  [[noreturn]] void fail(std::size_t col, const std::string& what) {
    throw ParseError(source_, line_no_, col, what);
  }

  std::size_t column(std::string_view tok) const {
    return static_cast<std::size_t>(tok.data() - current_.data()) + 1;
  }

  std::string_view current() const { return current_; }

 private:
  std::string_view text_;
  std::string source_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
  std::string_view current_;
};

void read_header(TokenReader& r, std::string_view kind) {
  auto magic = r.line("iois-checkpoint");
  if (magic.size() != 2 || r.count(magic[1]) != static_cast<std::size_t>(kCheckpointVersion)) {
    r.fail(1, "unsupported checkpoint version");
  }
  auto k = r.line("kind");
  if (k.size() != 2 || k[1] != kind) r.fail(1, "expected a " + std::string(kind) + " checkpoint");
}

FeedForwardNet read_net(TokenReader& r) {
  auto header = r.line("net");
  if (header.size() < 5) r.fail(1, "net line needs activation, head and at least two widths");
  Activation act{};
  OutputHead head{};
  try {
    act = parse_activation(header[1]);
    head = parse_output_head(header[2]);
  } catch (const SpecError& e) {
    r.fail(1, e.what());
  }
  std::vector<std::size_t> dims;
  for (std::size_t i = 3; i < header.size(); ++i) dims.push_back(r.count(header[i]));
  FeedForwardNet net(dims, act, head);
  for (auto& layer : net.layers()) {
    for (auto [tag, target] : {std::pair{"w", &layer.weight}, std::pair{"b", &layer.bias}}) {
      auto values = r.line(tag);
      if (values.size() != target->size() + 1) {
        r.fail(1, "expected " + std::to_string(target->size()) + " values on '" + tag + "' line");
      }
      for (std::size_t i = 0; i < target->size(); ++i) (*target)[i] = r.number(values[i + 1]);
    }
  }
  return net;
}

}  // namespace

std::string format_denoiser(const DenoiserModel& model, const NoiseSchedule& sched) {
  std::string out = "iois-checkpoint " + std::to_string(kCheckpointVersion) + "\nkind denoiser\n";
  out += "data_dim " + std::to_string(model.data_dim()) + "\n";
  out += "time_embed_dim " + std::to_string(model.time_embed_dim()) + "\n";
  out += "schedule " + std::to_string(sched.steps) + " " + format_double(sched.beta_start) + " " +
         format_double(sched.beta_end) + "\n";
  out += format_net(model.net());
  return out;
}

std::string format_classifier(const ClassifierModel& model) {
  std::string out = "iois-checkpoint " + std::to_string(kCheckpointVersion) + "\nkind classifier\n";
  out += format_net(model.net);
  return out;
}

DenoiserCheckpoint parse_denoiser(std::string_view text, const std::string& source,
                                  std::optional<std::size_t> expected_dim) {
  TokenReader r(text, source);
  read_header(r, "denoiser");
  auto dim_line = r.line("data_dim");
  if (dim_line.size() != 2) r.fail(1, "data_dim takes one value");
  const std::size_t dim = r.count(dim_line[1]);
  auto emb_line = r.line("time_embed_dim");
  if (emb_line.size() != 2) r.fail(1, "time_embed_dim takes one value");
  const std::size_t emb = r.count(emb_line[1]);
  auto sched_line = r.line("schedule");
  if (sched_line.size() != 4) r.fail(1, "schedule takes steps, beta_start and beta_end");
  const std::size_t steps = r.count(sched_line[1]);
  const double b0 = r.number(sched_line[2]);
  const double b1 = r.number(sched_line[3]);
  NoiseSchedule sched;
  try {
    sched = build_schedule(steps, b0, b1);
  } catch (const SpecError& e) {
    r.fail(1, e.what());
  }
  FeedForwardNet net = read_net(r);
  if (expected_dim && *expected_dim != dim) {
    throw ConfigError(source + ": denoiser was trained on " + std::to_string(dim) +
                      "-dimensional data, but the dataset has dimension " + std::to_string(*expected_dim));
  }
  try {
    return {DenoiserModel(std::move(net), dim, emb, steps), std::move(sched)};
  } catch (const Error& e) {
    throw ParseError(source, 1, 1, e.what());
  }
}

ClassifierModel parse_classifier(std::string_view text, const std::string& source) {
  TokenReader r(text, source);
  read_header(r, "classifier");
  FeedForwardNet net = read_net(r);
  if (net.head() != OutputHead::log_softmax) r.fail(1, "classifier checkpoints need a log_softmax head");
  return classifier_from_net(std::move(net));
}

void save_denoiser(const DenoiserModel& model, const NoiseSchedule& sched,
                   const std::filesystem::path& path) {
  write_file(path, format_denoiser(model, sched));
}

DenoiserCheckpoint load_denoiser(const std::filesystem::path& path,
                                 std::optional<std::size_t> expected_dim) {
  return parse_denoiser(read_file(path), path.string(), expected_dim);
}

void save_classifier(const ClassifierModel& model, const std::filesystem::path& path) {
  write_file(path, format_classifier(model));
}

ClassifierModel load_classifier(const std::filesystem::path& path) {
  return parse_classifier(read_file(path), path.string());
}

}  // namespace iois
