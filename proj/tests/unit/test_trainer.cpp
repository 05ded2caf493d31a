#include <gtest/gtest.h>

#include <cmath>

#include "tanet/error.hpp"
#include "tanet/synthetic.hpp"
#include "tanet/trainer.hpp"

using namespace tanet;

namespace {

SyntheticConfig small_data(std::uint64_t seed = 0) {
  SyntheticConfig c;
  c.dim = 8;
  c.n_categories = 6;
  c.per_category_count = 60;
  c.labeled_fraction = 0.2;
  c.seed = seed;
  return c;
}

TrainConfig quick(std::uint64_t seed = 0) {
  TrainConfig c;
  c.epochs = 3;
  c.pretrain_epochs = 20;
  c.hidden = {16};
  c.feature_dim = 8;
  c.kmeans.restarts = 2;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(TrainConfig, DefaultsFollowImplementationDetails) {
  const TrainConfig c;
  EXPECT_EQ(c.k_top, 5u);
  EXPECT_EQ(c.alpha, 0.8);
  EXPECT_EQ(c.beta, 100.0);
  EXPECT_EQ(c.tau, 0.07);
  EXPECT_EQ(c.early_stop_patience, 20u);
  EXPECT_EQ(c.epochs, 20u);
  EXPECT_EQ(c.batch_size, 64u);
  EXPECT_EQ(c.lr_train, 1e-3);
  EXPECT_NO_THROW(c.validate());
}

TEST(TrainConfig, RejectsOutOfRange) {
  TrainConfig c;
  c.alpha = 1.5;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.tau = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.batch_size = 1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(ClusterCount, ParseAndPrint) {
  EXPECT_EQ(ClusterCount::parse("true").mode, ClusterCount::Mode::kTrue);
  EXPECT_EQ(ClusterCount::parse("estimate").mode, ClusterCount::Mode::kEstimate);
  const auto f = ClusterCount::parse("12");
  EXPECT_EQ(f.mode, ClusterCount::Mode::kFixed);
  EXPECT_EQ(f.value, 12u);
  const auto oc = ClusterCount::parse("overcluster_1.2");
  EXPECT_EQ(oc.mode, ClusterCount::Mode::kOvercluster);
  EXPECT_DOUBLE_EQ(oc.factor, 1.2);
  EXPECT_EQ(ClusterCount::parse(oc.to_string()).factor, 1.2);
  EXPECT_THROW(ClusterCount::parse("lots"), Error);
  EXPECT_THROW(ClusterCount::parse("overcluster_0.5"), Error);
}

TEST(ClusterCount, OverclusterIsCeilOfFactorTimesK) {
  const auto b = make_synthetic(SyntheticConfig::acceptance());
  const TrainConfig cfg;
  const auto head = make_head(b.dataset, cfg);
  EXPECT_EQ(resolve_cluster_count(ClusterCount::parse("overcluster_1.2"), b.dataset, head, cfg), 24u);
  EXPECT_EQ(resolve_cluster_count(ClusterCount::parse("true"), b.dataset, head, cfg), 20u);
  EXPECT_EQ(resolve_cluster_count(ClusterCount::parse("7"), b.dataset, head, cfg), 7u);
}

TEST(Variant, NamesAndTerms) {
  EXPECT_EQ(all_variants().size(), 7u);
  for (auto v : all_variants()) EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_FALSE(parse_variant("no_everything"));
  EXPECT_FALSE(terms_for(Variant::kNoCE).ce);
  EXPECT_TRUE(terms_for(Variant::kNoCE).p2i);
  EXPECT_FALSE(terms_for(Variant::kNoI2P).i2p);
  const auto full = terms_for(Variant::kNoP2P);
  EXPECT_TRUE(full.p2i && full.i2p && full.i2i && full.u && full.ce);
}

TEST(Pretrain, SeparableTwoClassReachesFullAccuracy) {
  std::vector<Instance> rows;
  for (int i = 0; i < 80; ++i) {
    const double s = (i % 2) ? 1.0 : -1.0;
    rows.push_back({"r" + std::to_string(i), {s * (1.0 + 0.01 * i), 0.3 * (i % 5)}, Split::kLabeled, i % 2});
  }
  rows.push_back({"u", {0.0, 0.0}, Split::kUnlabeled, 0});
  const Dataset ds(2, rows);
  TrainConfig cfg = quick();
  cfg.pretrain_epochs = 100;
  PretrainReport rep;
  pretrain(make_head(ds, cfg), ds, cfg, &rep);
  EXPECT_GE(rep.train_accuracy, 0.99);
}

TEST(Pretrain, ZeroEpochsReturnsHeadUnchanged) {
  const auto b = make_synthetic(small_data());
  TrainConfig cfg = quick();
  cfg.pretrain_epochs = 0;
  const auto head = make_head(b.dataset, cfg);
  EXPECT_EQ(pretrain(head, b.dataset, cfg), head);
}

TEST(Pretrain, DeterministicUnderSeed) {
  const auto b = make_synthetic(small_data());
  const auto cfg = quick(5);
  EXPECT_EQ(pretrain(make_head(b.dataset, cfg), b.dataset, cfg), pretrain(make_head(b.dataset, cfg), b.dataset, cfg));
}

TEST(Pretrain, NeedsLabeledData) {
  const Dataset ds(1, {{"a", {1.0}, Split::kUnlabeled, 0}, {"b", {2.0}, Split::kTest, 0}});
  const TrainConfig cfg = quick();
  EXPECT_THROW(pretrain(make_head(ds, cfg), ds, cfg), Error);
}

TEST(Train, ReproducibleSingleThreaded) {
  const auto b = make_synthetic(small_data(1));
  const auto cfg = quick(3);
  const auto head = pretrain(make_head(b.dataset, cfg), b.dataset, cfg);
  const auto r1 = train(head, b.dataset, cfg), r2 = train(head, b.dataset, cfg);
  EXPECT_EQ(r1.head, r2.head);
  EXPECT_EQ(r1.final.h_score, r2.final.h_score);
  ASSERT_EQ(r1.epochs.size(), cfg.epochs);
  for (std::size_t e = 0; e < cfg.epochs; ++e) EXPECT_EQ(r1.epochs[e].losses.total, r2.epochs[e].losses.total);
}

TEST(Train, LossTraceIsConsistent) {
  const auto b = make_synthetic(small_data(2));
  const auto cfg = quick(1);
  const auto head = pretrain(make_head(b.dataset, cfg), b.dataset, cfg);
  const auto r = train(head, b.dataset, cfg);
  for (const auto& e : r.epochs) {
    const auto& l = e.losses;
    for (double v : {l.l_p2i, l.l_i2p, l.l_i2i, l.l_u, l.l_ce}) {
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_GE(v, 0.0);
    }
    const double expect = l.l_p2i + l.l_i2p + l.l_i2i + l.l_u + 100.0 * l.l_ce;
    EXPECT_NEAR(l.total, expect, 1e-9 * std::max(1.0, expect));
  }
  EXPECT_EQ(r.num_clusters, 6u);
  EXPECT_EQ(r.head.num_classes(), 6u);
}

TEST(Train, NoCeVariantDropsBetaTermFromTotal) {
  const auto b = make_synthetic(small_data(2));
  const auto cfg = quick(1);
  const auto head = pretrain(make_head(b.dataset, cfg), b.dataset, cfg);
  const auto r = train(head, b.dataset, cfg, Variant::kNoCE);
  for (const auto& e : r.epochs) {
    const auto& l = e.losses;
    EXPECT_FALSE(l.terms.ce);
    EXPECT_NEAR(l.total, l.l_p2i + l.l_i2p + l.l_i2i + l.l_u, 1e-9);
  }
}

TEST(Train, NoiselessMixtureIsSolvedExactly) {
  auto data = small_data(4);
  data.noise_sigma = 1e-6;
  const auto b = make_synthetic(data);
  const auto cfg = quick(2);
  const auto r = train(pretrain(make_head(b.dataset, cfg), b.dataset, cfg), b.dataset, cfg);
  EXPECT_DOUBLE_EQ(r.final.known_acc, 1.0);
  EXPECT_DOUBLE_EQ(r.final.novel_acc, 1.0);
}

TEST(Train, RejectsTooFewClusters) {
  const auto b = make_synthetic(small_data());
  auto cfg = quick();
  cfg.k_clusters = ClusterCount::parse("2");
  EXPECT_THROW(train(make_head(b.dataset, cfg), b.dataset, cfg), Error);
}

TEST(Train, OverclusterAndRefreshCadence) {
  const auto b = make_synthetic(small_data(3));
  auto cfg = quick(4);
  cfg.k_clusters = ClusterCount::parse("overcluster_1.2");
  cfg.refresh_every = 2;
  const auto head = pretrain(make_head(b.dataset, cfg), b.dataset, cfg);
  const auto r = train(head, b.dataset, cfg);
  EXPECT_EQ(r.num_clusters, 8u);
  // Prototypes are only rebuilt on refresh epochs; the match cost is carried.
  EXPECT_EQ(r.epochs[0].match_cost, r.epochs[1].match_cost);
}

TEST(Calibration, AlphaOneLeavesPrototypesUncalibrated) {
  const auto b = make_synthetic(small_data(5));
  auto cfg = quick();
  cfg.alpha = 1.0;
  const auto unl = b.dataset.indices(Split::kUnlabeled), lab = b.dataset.indices(Split::kLabeled);
  const auto d = calibration_diagnostics(b.dataset.embeddings(unl), b.dataset.embeddings(lab), b.dataset.labels(lab), 6,
                                         cfg, &b.truth);
  EXPECT_EQ(d.calibrated.vectors, d.unlabeled.vectors);
  EXPECT_DOUBLE_EQ(d.distances->after, d.distances->before);
}

TEST(Ablation, EveryVariantProducesAReport) {
  const auto b = make_synthetic(small_data(6));
  auto cfg = quick(6);
  cfg.epochs = 1;
  const auto head = pretrain(make_head(b.dataset, cfg), b.dataset, cfg);
  for (auto v : all_variants()) {
    const auto r = run_ablation(v, head, b.dataset, cfg);
    EXPECT_GE(r.h_score, 0.0);
    EXPECT_LE(r.h_score, 1.0);
  }
}

TEST(Seeds, DerivedStreamsDiffer) {
  EXPECT_NE(derive_seed(0, 1), derive_seed(0, 2));
  EXPECT_NE(derive_seed(0, 1, 0), derive_seed(0, 1, 1));
  EXPECT_EQ(derive_seed(9, 3, 4), derive_seed(9, 3, 4));
}
