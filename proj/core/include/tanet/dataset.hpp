#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tanet/linalg.hpp"

namespace tanet {

enum class Split { kLabeled, kUnlabeled, kTest };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view tag);

struct Instance {
  std::string id;
  Vector embedding;
  Split split = Split::kUnlabeled;
  // Ground truth is kept for every split. Training code only reads it for
  // Labeled instances; everything else goes through the evaluation module.
  int gt_label = 0;

  friend bool operator==(const Instance&, const Instance&) = default;
};

/// Immutable collection of embedded instances plus the known/all category
/// spaces. Known categories are exactly the labels present in the Labeled
/// split; everything else seen in the data is novel.
class Dataset {
 public:
  Dataset() = default;
  /// Validates dimensions, finiteness and labels; throws tanet::Error.
  Dataset(std::size_t dim, std::vector<Instance> instances);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return instances_.size(); }
  const std::vector<Instance>& instances() const noexcept { return instances_; }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }

  const std::set<int>& known_categories() const noexcept { return known_; }
  const std::set<int>& all_categories() const noexcept { return all_; }
  std::size_t num_known() const noexcept { return known_.size(); }
  std::size_t num_categories() const noexcept { return all_.size(); }
  bool is_known(int category) const { return known_.contains(category); }

  /// Positions of the instances in the given split, in file order.
  std::vector<std::size_t> indices(Split split) const;
  /// Embeddings of the given instances stacked as rows.
  Matrix embeddings(std::span<const std::size_t> rows) const;
  Matrix embeddings() const;
  std::vector<int> labels(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<Instance> instances_;
  std::set<int> known_;
  std::set<int> all_;
};

// Feature file: TSV with a `#gcd-features<TAB>dim=<D>` header line and one
// `<id> <split> <gt_label> <f_1> ... <f_D>` row per instance.
Dataset read_feature_file(std::istream& in, const std::string& source = "<stream>");
void write_feature_file(const Dataset& ds, std::ostream& out);

Dataset load_feature_file(const std::filesystem::path& path);
void save_feature_file(const Dataset& ds, const std::filesystem::path& path);

// Float formatting used by every TSV writer in the project: scientific,
// 17 significant digits, so doubles survive a text round trip exactly.
std::string format_float(double value);

struct SplitSummary {
  std::size_t labeled = 0;
  std::size_t unlabeled = 0;
  std::size_t test = 0;
  std::size_t num_known = 0;  // M
  std::size_t num_categories = 0;  // K
  std::size_t num_novel = 0;
  double labeled_ratio = 0.0;  // labeled / (labeled + unlabeled)
  bool no_labeled = false;

  std::size_t total() const { return labeled + unlabeled + test; }
};

SplitSummary split_summary(const Dataset& ds);

}  // namespace tanet
