#include "iois/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "iois/error.hpp"
#include "iois/rng.hpp"
#include "iois/text_io.hpp"

namespace iois {

LabeledDataset::LabeledDataset(NumArray features, std::vector<int> labels,
                               std::size_t num_classes, std::vector<Provenance> provenance)
    : features_(std::move(features)),
      labels_(std::move(labels)),
      num_classes_(num_classes),
      provenance_(std::move(provenance)) {
  if (num_classes_ == 0) throw SpecError("dataset needs at least one class");
  if (features_.rank() != 2) throw DimensionError("dataset features must be a [n, d] array");
  if (features_.rows() != labels_.size() || provenance_.size() != labels_.size()) {
    throw DimensionError("dataset has " + std::to_string(features_.rows()) + " rows, " +
                         std::to_string(labels_.size()) + " labels and " +
                         std::to_string(provenance_.size()) + " provenance flags");
  }
  for (int y : labels_) {
    if (y < 0 || static_cast<std::size_t>(y) >= num_classes_) {
      throw SpecError("label " + std::to_string(y) + " outside [0, " +
                      std::to_string(num_classes_) + ")");
    }
  }
}

LabeledDataset LabeledDataset::empty(std::size_t dim, std::size_t num_classes) {
  return LabeledDataset(NumArray({0, dim}), {}, num_classes, {});
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes_, 0);
  for (int y : labels_) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  std::vector<int> labels;
  std::vector<Provenance> prov;
  labels.reserve(indices.size());
  prov.reserve(indices.size());
  for (std::size_t i : indices) {
    labels.push_back(labels_.at(i));
    prov.push_back(provenance_.at(i));
  }
  return LabeledDataset(gather_rows(features_, indices), std::move(labels), num_classes_,
                        std::move(prov));
}

LabeledDataset merge(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.num_classes() != b.num_classes()) throw SpecError("merge: class counts differ");
  if (a.dim() != b.dim()) throw DimensionError("merge: feature dimensions differ");
  std::vector<int> labels = a.labels();
  labels.insert(labels.end(), b.labels().begin(), b.labels().end());
  std::vector<Provenance> prov = a.provenance();
  prov.insert(prov.end(), b.provenance().begin(), b.provenance().end());
  NumArray features = concat_rows(a.features(), b.features());
  if (features.rank() != 2) features = NumArray({0, a.dim()});
  return LabeledDataset(std::move(features), std::move(labels), a.num_classes(), std::move(prov));
}

void MixtureSpec::validate() const {
  if (classes == 0 || dim == 0) throw SpecError("mixture needs at least one class and one dimension");
  if (!(imbalance_ratio >= 1.0)) throw SpecError("imbalance ratio must be >= 1");
  if (n_max < classes) throw SpecError("n_max must be at least the class count");
  if (means.rows() != classes || means.cols() != dim) {
    throw SpecError("mixture means must be a [classes, dim] array");
  }
  if (class_std.size() != classes) throw SpecError("one standard deviation per class is required");
  for (double s : class_std) {
    if (!(s > 0.0)) throw SpecError("class standard deviations must be positive");
  }
  if (!class_counts.empty() && class_counts.size() != classes) {
    throw SpecError("explicit class counts must list every class");
  }
}

NumArray ring_means(std::size_t classes, std::size_t dim, double radius) {
  NumArray means({classes, dim});
  for (std::size_t i = 0; i < classes; ++i) {
    if (dim == 1) {
      means(i, 0) = classes == 1 ? 0.0
                                 : radius * (2.0 * static_cast<double>(i) / static_cast<double>(classes - 1) - 1.0);
    } else {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(classes);
      means(i, 0) = radius * std::cos(angle);
      means(i, 1) = radius * std::sin(angle);
    }
  }
  return means;
}

MixtureSpec default_mixture_spec() {
  MixtureSpec spec;
  spec.classes = 3;
  spec.dim = 2;
  spec.means = ring_means(3, 2, 1.5);
  spec.class_std = {1.0, 1.0, 1.0};
  spec.n_max = 500;
  spec.imbalance_ratio = 10.0;
  spec.class_counts = {500, 150, 50};
  return spec;
}

std::vector<std::size_t> class_sizes(const MixtureSpec& spec) {
  spec.validate();
  if (!spec.class_counts.empty()) {
    for (std::size_t n : spec.class_counts) {
      if (n == 0) throw SpecError("explicit class counts must be positive");
    }
    return spec.class_counts;
  }
  std::vector<std::size_t> sizes(spec.classes);
  for (std::size_t i = 0; i < spec.classes; ++i) {
    const double exponent = spec.classes == 1 ? 0.0
                                              : -static_cast<double>(i) / static_cast<double>(spec.classes - 1);
    const double n = std::round(static_cast<double>(spec.n_max) * std::pow(spec.imbalance_ratio, exponent));
    if (n < 1.0) {
      throw SpecError("class " + std::to_string(i) +
                      " rounds to zero samples; increase n_max or lower the imbalance ratio");
    }
    sizes[i] = static_cast<std::size_t>(n);
  }
  return sizes;
}

LabeledDataset make_imbalanced_mixture(const MixtureSpec& spec, std::uint64_t seed) {
  const auto sizes = class_sizes(spec);
  std::size_t total = 0;
  for (std::size_t n : sizes) total += n;

  Rng rng = make_rng(seed, {kDataStream});
  std::normal_distribution<double> normal(0.0, 1.0);
  NumArray features({total, spec.dim});
  std::vector<int> labels;
  labels.reserve(total);
  std::size_t row = 0;
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t i = 0; i < sizes[c]; ++i, ++row) {
      for (std::size_t j = 0; j < spec.dim; ++j) {
        features(row, j) = spec.means(c, j) + spec.class_std[c] * normal(rng);
      }
      labels.push_back(static_cast<int>(c));
    }
  }
  return LabeledDataset(std::move(features), std::move(labels), spec.classes,
                        std::vector<Provenance>(total, Provenance::real));
}

SplitIndices split_indices(const LabeledDataset& ds, SplitFractions f, std::uint64_t seed) {
  if (!(f.train > 0.0 && f.val > 0.0 && f.test > 0.0) ||
      std::abs(f.train + f.val + f.test - 1.0) > 1e-9) {
    throw SpecError("split fractions must be positive and sum to 1");
  }
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class[static_cast<std::size_t>(ds.labels()[i])].push_back(i);
  }
  SplitIndices out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < 3) {
      throw SpecError("class " + std::to_string(c) + " has fewer than 3 samples and cannot be stratified");
    }
    Rng rng = make_rng(seed, {kSplitStream, c});
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = static_cast<double>(members.size());
    // The small epsilon keeps exact products such as 0.1 * 10 from flooring low.
    const auto n_val = static_cast<std::size_t>(std::floor(f.val * n + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(f.test * n + 1e-9));
    out.val.insert(out.val.end(), members.begin(), members.begin() + n_val);
    out.test.insert(out.test.end(), members.begin() + n_val, members.begin() + n_val + n_test);
    out.train.insert(out.train.end(), members.begin() + n_val + n_test, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

DatasetSplit split_dataset(const LabeledDataset& ds, SplitFractions fractions, std::uint64_t seed) {
  const auto idx = split_indices(ds, fractions, seed);
  return {ds.subset(idx.train), ds.subset(idx.val), ds.subset(idx.test)};
}

std::string format_dataset(const LabeledDataset& ds) {
  std::string out;
  out += "n," + std::to_string(ds.size()) + "\n";
  out += "d," + std::to_string(ds.dim()) + "\n";
  out += "c," + std::to_string(ds.num_classes()) + "\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double v : ds.features().row(i)) {
      out += format_double(v);
      out += ',';
    }
    out += std::to_string(ds.labels()[i]);
    out += ds.provenance()[i] == Provenance::real ? ",real\n" : ",synthetic\n";
  }
  return out;
}

namespace {

struct LineCursor {
  std::string_view text;
  std::size_t pos = 0;
  std::size_t line_no = 0;

  bool next(std::string_view& line) {
    if (pos >= text.size()) return false;
    const std::size_t end = text.find('\n', pos);
    line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    return true;
  }
};

std::size_t column_of(std::string_view line, std::string_view field) {
  return static_cast<std::size_t>(field.data() - line.data()) + 1;
}

long long header_value(LineCursor& cur, std::string_view key, const std::string& source) {
  std::string_view line;
  if (!cur.next(line)) {
    throw ParseError(source, cur.line_no + 1, 1, "missing header line '" + std::string(key) + ",<value>'");
  }
  auto fields = split_fields(line);
  long long v = 0;
  if (fields.size() != 2 || fields[0] != key || !parse_long(fields[1], v) || v < 0) {
    throw ParseError(source, cur.line_no, 1, "expected header '" + std::string(key) + ",<non-negative integer>'");
  }
  return v;
}

}  // namespace

LabeledDataset parse_dataset(std::string_view text, const std::string& source) {
  LineCursor cur{text};
  const auto n = static_cast<std::size_t>(header_value(cur, "n", source));
  const auto d = static_cast<std::size_t>(header_value(cur, "d", source));
  const auto c = static_cast<std::size_t>(header_value(cur, "c", source));
  if (d == 0) throw ParseError(source, 2, 1, "feature dimension must be positive");
  if (c == 0) throw ParseError(source, 3, 1, "class count must be positive");

  std::vector<double> features;
  features.reserve(n * d);
  std::vector<int> labels;
  std::vector<Provenance> prov;
  std::string_view line;
  while (labels.size() < n) {
    if (!cur.next(line)) {
      throw ParseError(source, cur.line_no + 1, 1,
                       "expected " + std::to_string(n) + " sample rows, found " + std::to_string(labels.size()));
    }
    auto fields = split_fields(line);
    if (fields.size() != d + 2) {
      throw ParseError(source, cur.line_no, 1,
                       "expected " + std::to_string(d + 2) + " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      double v = 0.0;
      if (!parse_double(fields[j], v) || !std::isfinite(v)) {
        throw ParseError(source, cur.line_no, column_of(line, fields[j]), "invalid feature value");
      }
      features.push_back(v);
    }
    long long y = 0;
    if (!parse_long(fields[d], y)) {
      throw ParseError(source, cur.line_no, column_of(line, fields[d]), "invalid label");
    }
    if (y < 0 || static_cast<std::size_t>(y) >= c) {
      throw ParseError(source, cur.line_no, column_of(line, fields[d]),
                       "label " + std::to_string(y) + " outside the declared " + std::to_string(c) + " classes");
    }
    labels.push_back(static_cast<int>(y));
    if (fields[d + 1] == "real") {
      prov.push_back(Provenance::real);
    } else if (fields[d + 1] == "synthetic") {
      prov.push_back(Provenance::synthetic);
    } else {
      throw ParseError(source, cur.line_no, column_of(line, fields[d + 1]),
                       "provenance must be 'real' or 'synthetic'");
    }
  }
  while (cur.next(line)) {
    if (!line.empty()) throw ParseError(source, cur.line_no, 1, "unexpected content after the declared rows");
  }
  return LabeledDataset(NumArray({n, d}, std::move(features)), std::move(labels), c, std::move(prov));
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
  write_file(path, format_dataset(ds));
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  return parse_dataset(read_file(path), path.string());
}

}  // namespace iois
