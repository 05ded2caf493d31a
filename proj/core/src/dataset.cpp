#include "tanet/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "tanet/error.hpp"

namespace tanet {
namespace {

constexpr std::string_view kMagic = "#gcd-features";

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  // strtod accepts inf/nan spellings; the caller rejects non-finite values.
  std::string buf(s);
  if (buf.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() + buf.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kLabeled: return "labeled";
    case Split::kUnlabeled: return "unlabeled";
    case Split::kTest: return "test";
  }
  return "unlabeled";
}

std::optional<Split> parse_split(std::string_view tag) {
  if (tag == "labeled") return Split::kLabeled;
  if (tag == "unlabeled") return Split::kUnlabeled;
  if (tag == "test") return Split::kTest;
  return std::nullopt;
}

Dataset::Dataset(std::size_t dim, std::vector<Instance> instances)
    : dim_(dim), instances_(std::move(instances)) {
  require(dim_ > 0, "Dataset: dimension must be positive");
  for (const auto& inst : instances_) {
    require(inst.embedding.size() == dim_,
            "Dataset: instance '" + inst.id + "' has " +
                std::to_string(inst.embedding.size()) + " components, expected " +
                std::to_string(dim_));
    require(all_finite(inst.embedding), "Dataset: instance '" + inst.id + "' is not finite");
    require(inst.gt_label >= 0, "Dataset: instance '" + inst.id + "' has a negative label");
    all_.insert(inst.gt_label);
    if (inst.split == Split::kLabeled) known_.insert(inst.gt_label);
  }
}

std::vector<std::size_t> Dataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < instances_.size(); ++i)
    if (instances_[i].split == split) out.push_back(i);
  return out;
}

Matrix Dataset::embeddings(std::span<const std::size_t> rows) const {
  Matrix m(rows.size(), dim_);
  for (std::size_t r = 0; r < rows.size(); ++r) m.set_row(r, instances_[rows[r]].embedding);
  return m;
}

Matrix Dataset::embeddings() const {
  Matrix m(instances_.size(), dim_);
  for (std::size_t r = 0; r < instances_.size(); ++r) m.set_row(r, instances_[r].embedding);
  return m;
}

std::vector<int> Dataset::labels(std::span<const std::size_t> rows) const {
  std::vector<int> out;
  out.reserve(rows.size());
  for (auto r : rows) out.push_back(instances_[r].gt_label);
  return out;
}

std::string format_float(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.16e", value);
  return buf;
}

Dataset read_feature_file(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw FormatError(source, 1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_tabs(line);
  if (header.size() != 2 || header[0] != kMagic || !header[1].starts_with("dim="))
    throw FormatError(source, 1, "malformed header, expected '#gcd-features<TAB>dim=<D>'");
  const auto dim = parse_int(header[1].substr(4));
  if (!dim || *dim <= 0) throw FormatError(source, 1, "header dimension must be a positive integer");
  const auto d = static_cast<std::size_t>(*dim);

  std::vector<Instance> instances;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    const auto fields = split_tabs(line);
    if (fields.size() != d + 3)
      throw FormatError(source, line_no,
                        "expected " + std::to_string(d + 3) + " fields, found " +
                            std::to_string(fields.size()));
    Instance inst;
    inst.id = std::string(fields[0]);
    const auto split = parse_split(fields[1]);
    if (!split) throw FormatError(source, line_no, "unknown split tag '" + std::string(fields[1]) + "'");
    inst.split = *split;
    const auto label = parse_int(fields[2]);
    if (!label) throw FormatError(source, line_no, "label is not an integer");
    if (*label < 0) throw FormatError(source, line_no, "negative label");
    inst.gt_label = static_cast<int>(*label);
    inst.embedding.reserve(d);
    for (std::size_t j = 0; j < d; ++j) {
      const auto v = parse_double(fields[3 + j]);
      if (!v) throw FormatError(source, line_no, "component " + std::to_string(j + 1) + " is not a number");
      if (!std::isfinite(*v))
        throw FormatError(source, line_no, "component " + std::to_string(j + 1) + " is not finite");
      inst.embedding.push_back(*v);
    }
    instances.push_back(std::move(inst));
  }
  return Dataset(d, std::move(instances));
}

void write_feature_file(const Dataset& ds, std::ostream& out) {
  out << kMagic << "\tdim=" << ds.dim() << '\n';
  for (const auto& inst : ds.instances()) {
    out << inst.id << '\t' << to_string(inst.split) << '\t' << inst.gt_label;
    for (double v : inst.embedding) out << '\t' << format_float(v);
    out << '\n';
  }
}

Dataset load_feature_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open feature file " + path.string());
  return read_feature_file(in, path.string());
}

void save_feature_file(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write feature file " + path.string());
  write_feature_file(ds, out);
  out.flush();
  if (!out) fail(ErrorKind::kIo, "write failed for " + path.string());
}

SplitSummary split_summary(const Dataset& ds) {
  SplitSummary s;
  for (const auto& inst : ds.instances()) {
    switch (inst.split) {
      case Split::kLabeled: ++s.labeled; break;
      case Split::kUnlabeled: ++s.unlabeled; break;
      case Split::kTest: ++s.test; break;
    }
  }
  s.num_known = ds.num_known();
  s.num_categories = ds.num_categories();
  s.num_novel = s.num_categories - s.num_known;
  const auto train = s.labeled + s.unlabeled;
  s.labeled_ratio = train == 0 ? 0.0 : static_cast<double>(s.labeled) / static_cast<double>(train);
  s.no_labeled = s.labeled == 0;
  return s;
}

}  // namespace tanet
