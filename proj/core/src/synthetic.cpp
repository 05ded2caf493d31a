#include "tanet/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "tanet/error.hpp"

namespace tanet {

void SyntheticConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorKind::kConfig, "synthetic config: " + what); };
  if (dim == 0) bad("dim must be positive");
  if (n_categories == 0) bad("n_categories must be positive");
  if (!(novel_fraction >= 0.0 && novel_fraction <= 1.0)) bad("novel_fraction must lie in [0, 1]");
  if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) bad("labeled_fraction must lie in (0, 1]");
  if (per_category_count == 0) bad("per_category_count must be positive");
  if (!(center_scale > 0.0)) bad("center_scale must be positive");
  if (!(noise_sigma > 0.0)) bad("noise_sigma must be positive");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) bad("test_fraction must lie in (0, 1)");
}

SyntheticConfig SyntheticConfig::acceptance(std::uint64_t seed) {
  SyntheticConfig cfg;
  cfg.seed = seed;
  return cfg;
}

std::size_t round_half_up(double fraction, std::size_t count) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(count) + 0.5));
}

SyntheticBenchmark make_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  const std::size_t k = cfg.n_categories;
  const std::size_t n_novel = round_half_up(cfg.novel_fraction, k);
  if (n_novel >= k) fail(ErrorKind::kConfig, "synthetic config yields no known categories");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  PrototypeSet truth;
  truth.kind = PrototypeKind::kGroundTruth;
  truth.vectors = Matrix(k, cfg.dim);
  for (std::size_t c = 0; c < k; ++c) {
    truth.ids.push_back(static_cast<int>(c));
    for (double& v : truth.vectors.row(c)) v = cfg.center_scale * gauss(rng);
  }

  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<char> novel(k, 0);
  for (std::size_t i = 0; i < n_novel; ++i) novel[perm[i]] = 1;

  const std::size_t n_test = std::min(cfg.per_category_count - 1, round_half_up(cfg.test_fraction, cfg.per_category_count));
  const std::size_t n_train = cfg.per_category_count - n_test;

  std::vector<Instance> instances;
  instances.reserve(k * cfg.per_category_count);
  // Training rows of known categories, candidates for the Labeled split.
  std::vector<std::vector<std::size_t>> candidates(k);
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < cfg.per_category_count; ++i) {
      Instance inst;
      inst.id = "c" + std::to_string(c) + "_" + std::to_string(i);
      inst.gt_label = static_cast<int>(c);
      inst.embedding.resize(cfg.dim);
      const auto center = truth.vectors.row(c);
      for (std::size_t j = 0; j < cfg.dim; ++j) inst.embedding[j] = center[j] + cfg.noise_sigma * gauss(rng);
      if (i < n_test) {
        inst.split = Split::kTest;
      } else {
        inst.split = Split::kUnlabeled;
        if (!novel[c]) candidates[c].push_back(instances.size());
      }
      instances.push_back(std::move(inst));
    }
  }

  if (cfg.sampling == LabeledSampling::kPerCategory) {
    const std::size_t n_labeled = std::max<std::size_t>(1, round_half_up(cfg.labeled_fraction, n_train));
    for (std::size_t c = 0; c < k; ++c) {
      auto& pool = candidates[c];
      std::shuffle(pool.begin(), pool.end(), rng);
      for (std::size_t i = 0; i < std::min(n_labeled, pool.size()); ++i) instances[pool[i]].split = Split::kLabeled;
    }
  } else {
    std::vector<std::size_t> pool;
    for (const auto& c : candidates) pool.insert(pool.end(), c.begin(), c.end());
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t n_labeled = std::max<std::size_t>(1, round_half_up(cfg.labeled_fraction, pool.size()));
    for (std::size_t i = 0; i < std::min(n_labeled, pool.size()); ++i) instances[pool[i]].split = Split::kLabeled;
  }

  SyntheticBenchmark out{Dataset(cfg.dim, std::move(instances)), std::move(truth)};
  if (out.dataset.num_known() == 0) fail(ErrorKind::kConfig, "synthetic config yields no labeled instances");
  return out;
}

void save_truth_file(const PrototypeSet& truth, const std::set<int>& known, const std::filesystem::path& path) {
  std::vector<Instance> rows;
  for (std::size_t r = 0; r < truth.size(); ++r) {
    Instance inst;
    inst.id = "center_" + std::to_string(truth.ids[r]);
    inst.gt_label = truth.ids[r];
    inst.split = known.contains(truth.ids[r]) ? Split::kLabeled : Split::kUnlabeled;
    inst.embedding = truth.vectors.row_vector(r);
    rows.push_back(std::move(inst));
  }
  save_feature_file(Dataset(truth.dim(), std::move(rows)), path);
}

PrototypeSet load_truth_file(const std::filesystem::path& path) {
  const Dataset ds = load_feature_file(path);
  PrototypeSet truth;
  truth.kind = PrototypeKind::kGroundTruth;
  truth.vectors = ds.embeddings();
  for (const auto& inst : ds.instances()) truth.ids.push_back(inst.gt_label);
  return truth;
}

}  // namespace tanet
