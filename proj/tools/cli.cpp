#include "cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "tanet/error.hpp"
#include "tanet/synthetic.hpp"
#include "tanet/version.hpp"

namespace tanet::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fixed(double v, int decimals) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorKind::kIo, "write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
}

// Flags that overlay TrainConfig. Only options actually given on the command
// line are applied, after the JSON file.
struct ConfigFlags {
  std::optional<std::size_t> k_top, epochs, pretrain_epochs, batch_size, patience, k_max, refresh_every,
      feature_dim, restarts, max_iter, threads;
  std::optional<double> alpha, beta, tau, lr_pretrain, lr_train, weight_decay, validation_fraction, drop_ratio,
      dropout, aug_noise, tol;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> k_clusters, config;
  std::vector<std::size_t> hidden;
  bool normalize_distances = false;
  bool per_subset_mapping = false;

  void attach(CLI::App* app, bool training) {
    app->add_option("--config", config, "JSON config file (or a run manifest)");
    app->add_option("--seed", seed, "Base seed");
    app->add_option("--threads", threads, "Worker threads for clustering");
    app->add_option("--k-clusters,--k", k_clusters, "true | N | estimate | overcluster_<factor>");
    app->add_option("--k-max", k_max, "Upper bound for estimate (0 = 2K)");
    app->add_option("--drop-ratio", drop_ratio, "Filtering ratio for estimate");
    app->add_option("--kmeans-restarts", restarts);
    app->add_option("--kmeans-max-iter", max_iter);
    app->add_option("--kmeans-tol", tol);
    app->add_flag("--normalize-distances", normalize_distances, "Cluster and align on L2-normalized features");
    app->add_flag("--per-subset-mapping", per_subset_mapping, "Hungarian mapping within Known and Novel separately");
    app->add_option("--k-top", k_top, "Labeled prototypes used per calibration");
    app->add_option("--alpha", alpha, "Calibration mixing weight");
    if (!training) return;
    app->add_option("--beta", beta, "Weight of the labeled cross-entropy");
    app->add_option("--tau", tau, "Contrastive temperature");
    app->add_option("--epochs", epochs);
    app->add_option("--pretrain-epochs", pretrain_epochs);
    app->add_option("--batch-size", batch_size);
    app->add_option("--lr-pretrain", lr_pretrain);
    app->add_option("--lr-train", lr_train);
    app->add_option("--weight-decay", weight_decay);
    app->add_option("--patience", patience, "Early-stopping patience (pretraining)");
    app->add_option("--validation-fraction", validation_fraction);
    app->add_option("--refresh-every", refresh_every, "Epochs between prototype refreshes");
    app->add_option("--hidden", hidden, "Hidden layer widths")->delimiter(',');
    app->add_option("--feature-dim", feature_dim);
    app->add_option("--dropout", dropout);
    app->add_option("--aug-noise", aug_noise, "Gaussian input noise for the contrastive views");
  }

  TrainConfig resolve() const {
    TrainConfig cfg;
    if (config) cfg = config_from_json(read_json(*config), cfg);
    auto set = [](auto& dst, const auto& src) {
      if (src) dst = *src;
    };
    set(cfg.k_top, k_top);
    set(cfg.alpha, alpha);
    set(cfg.beta, beta);
    set(cfg.tau, tau);
    set(cfg.epochs, epochs);
    set(cfg.pretrain_epochs, pretrain_epochs);
    set(cfg.batch_size, batch_size);
    set(cfg.lr_pretrain, lr_pretrain);
    set(cfg.lr_train, lr_train);
    set(cfg.weight_decay, weight_decay);
    set(cfg.early_stop_patience, patience);
    set(cfg.validation_fraction, validation_fraction);
    set(cfg.k_max, k_max);
    set(cfg.drop_ratio, drop_ratio);
    set(cfg.refresh_every, refresh_every);
    set(cfg.feature_dim, feature_dim);
    set(cfg.dropout, dropout);
    set(cfg.aug_noise, aug_noise);
    set(cfg.seed, seed);
    set(cfg.kmeans.restarts, restarts);
    set(cfg.kmeans.max_iter, max_iter);
    set(cfg.kmeans.tol, tol);
    set(cfg.kmeans.threads, threads);
    if (k_clusters) cfg.k_clusters = ClusterCount::parse(*k_clusters);
    if (!hidden.empty()) cfg.hidden = hidden;
    if (normalize_distances) cfg.normalize_distances = true;
    if (per_subset_mapping) cfg.mapping = MappingMode::kPerSubset;
    cfg.validate();
    return cfg;
  }
};

class Manifest {
 public:
  Manifest(std::string command, const std::vector<std::string>& argv) {
    doc_["tool"] = "tanet";
    doc_["version"] = kVersion;
    doc_["command"] = std::move(command);
    doc_["argv"] = argv;
    doc_["inputs"] = json::array();
    doc_["outputs"] = json::array();
  }
  void config(const TrainConfig& cfg) {
    doc_["config"] = config_to_json(cfg);
    doc_["seed"] = cfg.seed;
  }
  void set(const std::string& key, json value) { doc_[key] = std::move(value); }
  void input(const fs::path& p) { doc_["inputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}}); }
  void output(const fs::path& p) { doc_["outputs"].push_back({{"path", p.string()}, {"sha256", sha256_file(p)}}); }
  void write(const fs::path& dir) { write_text(dir / "manifest.json", doc_.dump(2) + "\n"); }

 private:
  json doc_;
};

struct Context {
  std::ostream& out;
  std::vector<std::string> argv;
  fs::path run_dir;
};

std::string losses_tsv(const std::vector<EpochReport>& epochs) {
  std::ostringstream s;
  s << "epoch\tl_p2i\tl_i2p\tl_i2i\tl_u\tl_ce\ttotal\tpseudo_label_acc\tproto_dist_before\tproto_dist_after"
       "\tmatch_cost\tp2i_empty_batches\n";
  for (const auto& e : epochs) {
    const auto& l = e.losses;
    s << e.epoch << '\t' << fixed(l.l_p2i, 6) << '\t' << fixed(l.l_i2p, 6) << '\t' << fixed(l.l_i2i, 6) << '\t'
      << fixed(l.l_u, 6) << '\t' << fixed(l.l_ce, 6) << '\t' << fixed(l.total, 6) << '\t'
      << fixed(e.pseudo_label_acc, 6) << '\t' << fixed(e.proto_dist_before, 6) << '\t'
      << fixed(e.proto_dist_after, 6) << '\t' << fixed(e.match_cost, 6) << '\t' << e.p2i_empty_batches << '\n';
  }
  return s.str();
}

void write_metrics(Context& ctx, Manifest& m, const MetricsReport& r) {
  write_text(ctx.run_dir / "metrics.json", metrics_to_json(r).dump(2) + "\n");
  const std::string table = metrics_table(r);
  write_text(ctx.run_dir / "metrics.tsv", table);
  m.output(ctx.run_dir / "metrics.json");
  m.output(ctx.run_dir / "metrics.tsv");
  ctx.out << table;
}

Dataset load_input(Manifest& m, const fs::path& path) {
  auto ds = load_feature_file(path);
  m.input(path);
  return ds;
}

EncoderHead pretrained_head(Context& ctx, Manifest& m, const Dataset& ds, const TrainConfig& cfg,
                            const std::optional<fs::path>& init) {
  if (init) {
    m.input(*init);
    return load_checkpoint(*init);
  }
  PretrainReport rep;
  auto head = pretrain(make_head(ds, cfg), ds, cfg, &rep);
  ctx.out << "pretrained: epochs=" << rep.epochs_run << " best_epoch=" << rep.best_epoch
          << " train_acc=" << fixed(100.0 * rep.train_accuracy, 2) << "\n";
  return head;
}

// Truth prototypes expressed in the head's feature space (or raw space
// without a head).
PrototypeSet truth_in_space(const PrototypeSet& truth, const EncoderHead* head, bool normalize) {
  if (!head) return truth;
  PrototypeSet t = truth;
  t.vectors = encode(*head, truth.vectors);
  if (normalize) t.vectors = normalize_rows(t.vectors).rows;
  return t;
}

Matrix features(const EncoderHead* head, const Matrix& x, bool normalize) {
  if (!head) return x;
  Matrix z = encode(*head, x);
  return normalize ? normalize_rows(z).rows : z;
}

SyntheticConfig preset(const std::string& name) {
  if (name == "acceptance") return SyntheticConfig::acceptance();
  if (name == "small") {
    SyntheticConfig c;
    c.dim = 8;
    c.n_categories = 6;
    c.per_category_count = 60;
    c.labeled_fraction = 0.2;
    return c;
  }
  fail(ErrorKind::kConfig, "unknown preset '" + name + "' (acceptance, small)");
}

}  // namespace

json config_to_json(const TrainConfig& c) {
  return {
      {"k_top", c.k_top},
      {"alpha", c.alpha},
      {"beta", c.beta},
      {"tau", c.tau},
      {"epochs", c.epochs},
      {"pretrain_epochs", c.pretrain_epochs},
      {"batch_size", c.batch_size},
      {"lr_pretrain", c.lr_pretrain},
      {"lr_train", c.lr_train},
      {"weight_decay", c.weight_decay},
      {"early_stop_patience", c.early_stop_patience},
      {"validation_fraction", c.validation_fraction},
      {"k_clusters", c.k_clusters.to_string()},
      {"k_max", c.k_max},
      {"drop_ratio", c.drop_ratio},
      {"refresh_every", c.refresh_every},
      {"hidden", c.hidden},
      {"feature_dim", c.feature_dim},
      {"dropout", c.dropout},
      {"aug_noise", c.aug_noise},
      {"normalize_distances", c.normalize_distances},
      {"kmeans",
       {{"max_iter", c.kmeans.max_iter},
        {"tol", c.kmeans.tol},
        {"restarts", c.kmeans.restarts},
        {"threads", c.kmeans.threads}}},
      {"mapping", c.mapping == MappingMode::kGlobal ? "global" : "per_subset"},
      {"seed", c.seed},
  };
}

TrainConfig config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) fail(ErrorKind::kConfig, "config: expected a JSON object");
  if (j.contains("config") && j.contains("tool")) return config_from_json(j.at("config"), c);
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "k_top") c.k_top = v.get<std::size_t>();
      else if (key == "alpha") c.alpha = v.get<double>();
      else if (key == "beta") c.beta = v.get<double>();
      else if (key == "tau") c.tau = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "pretrain_epochs") c.pretrain_epochs = v.get<std::size_t>();
      else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
      else if (key == "lr_pretrain") c.lr_pretrain = v.get<double>();
      else if (key == "lr_train") c.lr_train = v.get<double>();
      else if (key == "weight_decay") c.weight_decay = v.get<double>();
      else if (key == "early_stop_patience") c.early_stop_patience = v.get<std::size_t>();
      else if (key == "validation_fraction") c.validation_fraction = v.get<double>();
      else if (key == "k_clusters")
        c.k_clusters = ClusterCount::parse(v.is_string() ? v.get<std::string>() : std::to_string(v.get<std::size_t>()));
      else if (key == "k_max") c.k_max = v.get<std::size_t>();
      else if (key == "drop_ratio") c.drop_ratio = v.get<double>();
      else if (key == "refresh_every") c.refresh_every = v.get<std::size_t>();
      else if (key == "hidden") c.hidden = v.get<std::vector<std::size_t>>();
      else if (key == "feature_dim") c.feature_dim = v.get<std::size_t>();
      else if (key == "dropout") c.dropout = v.get<double>();
      else if (key == "aug_noise") c.aug_noise = v.get<double>();
      else if (key == "normalize_distances") c.normalize_distances = v.get<bool>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "mapping") {
        const auto s = v.get<std::string>();
        if (s == "global") c.mapping = MappingMode::kGlobal;
        else if (s == "per_subset") c.mapping = MappingMode::kPerSubset;
        else fail(ErrorKind::kConfig, "config: mapping must be 'global' or 'per_subset'");
      } else if (key == "kmeans") {
        for (const auto& [k2, v2] : v.items()) {
          if (k2 == "max_iter") c.kmeans.max_iter = v2.get<std::size_t>();
          else if (k2 == "tol") c.kmeans.tol = v2.get<double>();
          else if (k2 == "restarts") c.kmeans.restarts = v2.get<std::size_t>();
          else if (k2 == "threads") c.kmeans.threads = v2.get<std::size_t>();
          else fail(ErrorKind::kConfig, "config: unknown key 'kmeans." + k2 + "'");
        }
      } else {
        fail(ErrorKind::kConfig, "config: unknown key '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kConfig, std::string("config: ") + e.what());
  }
  return c;
}

json metrics_to_json(const MetricsReport& r) {
  json mapping = json::object();
  for (const auto& [cluster, category] : r.mapping) mapping[std::to_string(cluster)] = category;
  return {
      {"h_score", r.h_score},
      {"known_acc", finite_or_null(r.known_acc)},
      {"novel_acc", finite_or_null(r.novel_acc)},
      {"overall_acc", finite_or_null(r.overall_acc)},
      {"pseudo_label_acc", finite_or_null(r.pseudo_label_acc)},
      {"proto_dist_before", finite_or_null(r.proto_dist_before)},
      {"proto_dist_after", finite_or_null(r.proto_dist_after)},
      {"known_count", r.known_count},
      {"novel_count", r.novel_count},
      {"known_empty", r.known_empty},
      {"novel_empty", r.novel_empty},
      {"mapping", mapping},
  };
}

std::string metrics_table(const MetricsReport& r) {
  const std::vector<std::string> head = {"h_score", "known", "novel", "overall", "pseudo_label",
                                         "proto_before", "proto_after"};
  const std::vector<std::string> vals = {
      fixed(100.0 * r.h_score, 2),          fixed(100.0 * r.known_acc, 2),    fixed(100.0 * r.novel_acc, 2),
      fixed(100.0 * r.overall_acc, 2),      fixed(100.0 * r.pseudo_label_acc, 2), fixed(r.proto_dist_before, 4),
      fixed(r.proto_dist_after, 4)};
  std::ostringstream s;
  for (std::size_t row = 0; row < 2; ++row) {
    const auto& cells = row == 0 ? head : vals;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::size_t w = std::max(head[i].size(), vals[i].size());
      s << std::setw(static_cast<int>(w)) << cells[i] << (i + 1 < cells.size() ? "\t" : "\n");
    }
  }
  return s.str();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) fail(ErrorKind::kIo, "sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized category discovery over embedding vectors", "tanet"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  std::string run_dir;
  app.add_option("--run-dir", run_dir, "Directory for outputs and manifest (default runs/<command>)");

  // generate
  auto* gen = app.add_subcommand("generate", "Write a synthetic feature file and truth sidecar");
  std::string gen_preset = "acceptance", gen_out, gen_truth, gen_sampling;
  std::optional<std::size_t> gen_dim, gen_k, gen_per;
  std::optional<double> gen_novel, gen_labeled, gen_scale, gen_sigma, gen_test;
  std::uint64_t gen_seed = 0;
  gen->add_option("--preset", gen_preset, "acceptance | small");
  gen->add_option("--out", gen_out, "Feature file path")->required();
  gen->add_option("--truth", gen_truth, "Truth sidecar path (default <out>.truth.tsv)");
  gen->add_option("--seed", gen_seed);
  gen->add_option("--dim", gen_dim);
  gen->add_option("--categories", gen_k);
  gen->add_option("--per-category", gen_per);
  gen->add_option("--novel-fraction", gen_novel);
  gen->add_option("--labeled-fraction", gen_labeled);
  gen->add_option("--center-scale", gen_scale);
  gen->add_option("--noise-sigma", gen_sigma);
  gen->add_option("--test-fraction", gen_test);
  gen->add_option("--sampling", gen_sampling, "per_category | global");

  std::string data, truth, checkpoint, init, variant_name = "full", variants_list = "all";
  std::optional<std::size_t> num_clusters;

  auto* pre = app.add_subcommand("pretrain", "Supervised pretraining on the labeled split");
  ConfigFlags pre_flags;
  pre_flags.attach(pre, true);
  pre->add_option("--data", data)->required();

  auto* tr = app.add_subcommand("train", "Pretrain (unless --init) and run alignment training");
  ConfigFlags tr_flags;
  tr_flags.attach(tr, true);
  tr->add_option("--data", data)->required();
  tr->add_option("--init", init, "Start from a pretrained checkpoint");
  tr->add_option("--truth", truth, "Truth sidecar for prototype-distance diagnostics");
  tr->add_option("--variant", variant_name, "full | no_p2i | no_p2p | no_ce | no_i2i | no_u | no_i2p");

  auto* ev = app.add_subcommand("evaluate", "Metrics for a checkpoint on the test split");
  ConfigFlags ev_flags;
  ev_flags.attach(ev, false);
  ev->add_option("--data", data)->required();
  ev->add_option("--checkpoint", checkpoint)->required();
  ev->add_option("--truth", truth);

  auto* est = app.add_subcommand("estimate-k", "Estimate the number of categories by filtering");
  ConfigFlags est_flags;
  est_flags.attach(est, false);
  est->add_option("--data", data)->required();
  est->add_option("--checkpoint", checkpoint, "Cluster encoded features instead of raw embeddings");

  auto* cal = app.add_subcommand("calibrate-report", "Per-cluster calibration diagnostics");
  ConfigFlags cal_flags;
  cal_flags.attach(cal, false);
  cal->add_option("--data", data)->required();
  cal->add_option("--checkpoint", checkpoint, "Work in the head's feature space");
  cal->add_option("--truth", truth);

  auto* abl = app.add_subcommand("ablate", "Train every loss ablation from one pretrained head");
  ConfigFlags abl_flags;
  abl_flags.attach(abl, true);
  abl->add_option("--data", data)->required();
  abl->add_option("--init", init);
  abl->add_option("--variants", variants_list, "Comma-separated variants or 'all'");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? kOk : kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  Context ctx{out, args, run_dir.empty() ? fs::path("runs") / command : fs::path(run_dir)};
  Manifest manifest(command, args);

  try {
    fs::create_directories(ctx.run_dir);
    if (*gen) {
      SyntheticConfig sc = preset(gen_preset);
      sc.seed = gen_seed;
      if (gen_dim) sc.dim = *gen_dim;
      if (gen_k) sc.n_categories = *gen_k;
      if (gen_per) sc.per_category_count = *gen_per;
      if (gen_novel) sc.novel_fraction = *gen_novel;
      if (gen_labeled) sc.labeled_fraction = *gen_labeled;
      if (gen_scale) sc.center_scale = *gen_scale;
      if (gen_sigma) sc.noise_sigma = *gen_sigma;
      if (gen_test) sc.test_fraction = *gen_test;
      if (gen_sampling == "global") sc.sampling = LabeledSampling::kGlobal;
      else if (!gen_sampling.empty() && gen_sampling != "per_category")
        fail(ErrorKind::kConfig, "--sampling must be per_category or global");
      const auto bench = make_synthetic(sc);
      const fs::path out_path(gen_out);
      const fs::path truth_path = gen_truth.empty() ? fs::path(gen_out + ".truth.tsv") : fs::path(gen_truth);
      save_feature_file(bench.dataset, out_path);
      save_truth_file(bench.truth, bench.dataset.known_categories(), truth_path);
      manifest.set("synthetic", {{"preset", gen_preset},
                                 {"dim", sc.dim},
                                 {"n_categories", sc.n_categories},
                                 {"novel_fraction", sc.novel_fraction},
                                 {"labeled_fraction", sc.labeled_fraction},
                                 {"per_category_count", sc.per_category_count},
                                 {"center_scale", sc.center_scale},
                                 {"noise_sigma", sc.noise_sigma},
                                 {"test_fraction", sc.test_fraction},
                                 {"sampling", sc.sampling == LabeledSampling::kGlobal ? "global" : "per_category"}});
      manifest.set("seed", sc.seed);
      manifest.output(out_path);
      manifest.output(truth_path);
      const auto s = split_summary(bench.dataset);
      out << "wrote " << out_path.string() << ": labeled=" << s.labeled << " unlabeled=" << s.unlabeled
          << " test=" << s.test << " known=" << s.num_known << " categories=" << s.num_categories << "\n";
    } else if (*pre) {
      const TrainConfig cfg = pre_flags.resolve();
      manifest.config(cfg);
      const Dataset ds = load_input(manifest, data);
      PretrainReport rep;
      const auto head = pretrain(make_head(ds, cfg), ds, cfg, &rep);
      const auto ckpt = ctx.run_dir / "pretrained.json";
      save_checkpoint(head, ckpt);
      manifest.output(ckpt);
      manifest.set("pretrain", {{"epochs_run", rep.epochs_run},
                                {"best_epoch", rep.best_epoch},
                                {"best_validation_loss", rep.best_validation_loss},
                                {"train_accuracy", rep.train_accuracy}});
      out << "pretrained: epochs=" << rep.epochs_run << " best_epoch=" << rep.best_epoch
          << " train_acc=" << fixed(100.0 * rep.train_accuracy, 2) << "\n";
    } else if (*tr) {
      const TrainConfig cfg = tr_flags.resolve();
      const auto variant = parse_variant(variant_name);
      if (!variant) fail(ErrorKind::kConfig, "unknown variant '" + variant_name + "'");
      manifest.config(cfg);
      manifest.set("variant", std::string(to_string(*variant)));
      const Dataset ds = load_input(manifest, data);
      const std::optional<fs::path> init_path = init.empty() ? std::nullopt : std::optional<fs::path>(init);
      const auto head0 = pretrained_head(ctx, manifest, ds, cfg, init_path);
      auto result = train(head0, ds, cfg, *variant);
      if (!truth.empty()) {
        manifest.input(truth);
        const auto t = truth_in_space(load_truth_file(truth), &result.head, cfg.normalize_distances);
        const auto unl = ds.indices(Split::kUnlabeled), lab = ds.indices(Split::kLabeled);
        const auto d = calibration_diagnostics(features(&result.head, ds.embeddings(unl), cfg.normalize_distances),
                                               features(&result.head, ds.embeddings(lab), cfg.normalize_distances),
                                               ds.labels(lab), result.num_clusters, cfg, &t);
        result.final.proto_dist_before = d.distances->before;
        result.final.proto_dist_after = d.distances->after;
      }
      const auto ckpt = ctx.run_dir / "model.json";
      save_checkpoint(result.head, ckpt);
      write_text(ctx.run_dir / "losses.tsv", losses_tsv(result.epochs));
      manifest.output(ckpt);
      manifest.output(ctx.run_dir / "losses.tsv");
      manifest.set("num_clusters", result.num_clusters);
      write_metrics(ctx, manifest, result.final);
    } else if (*ev) {
      const TrainConfig cfg = ev_flags.resolve();
      manifest.config(cfg);
      const Dataset ds = load_input(manifest, data);
      manifest.input(checkpoint);
      const auto head = load_checkpoint(checkpoint);
      const std::size_t k = ev_flags.k_clusters ? resolve_cluster_count(cfg.k_clusters, ds, head, cfg)
                                                : head.classifier.bias.size();
      auto report = evaluate_head(head, ds, k, cfg);
      report.proto_dist_before = report.proto_dist_after = std::nan("");
      if (!truth.empty()) {
        manifest.input(truth);
        const auto t = truth_in_space(load_truth_file(truth), &head, cfg.normalize_distances);
        const auto unl = ds.indices(Split::kUnlabeled), lab = ds.indices(Split::kLabeled);
        const auto d = calibration_diagnostics(features(&head, ds.embeddings(unl), cfg.normalize_distances),
                                               features(&head, ds.embeddings(lab), cfg.normalize_distances),
                                               ds.labels(lab), k, cfg, &t);
        report.proto_dist_before = d.distances->before;
        report.proto_dist_after = d.distances->after;
      }
      manifest.set("num_clusters", k);
      write_metrics(ctx, manifest, report);
    } else if (*est) {
      TrainConfig cfg = est_flags.resolve();
      manifest.config(cfg);
      const Dataset ds = load_input(manifest, data);
      std::optional<EncoderHead> head;
      if (!checkpoint.empty()) {
        manifest.input(checkpoint);
        head = load_checkpoint(checkpoint);
      }
      const auto unl = ds.indices(Split::kUnlabeled);
      const Matrix x = features(head ? &*head : nullptr, ds.embeddings(unl), cfg.normalize_distances);
      const std::size_t k_max = cfg.k_max ? cfg.k_max : 2 * ds.num_categories();
      const std::size_t k = estimate_k(x, std::min(k_max, x.rows()), cfg.drop_ratio, derive_seed(cfg.seed, 0xE5),
                                       cfg.kmeans);
      const json result = {{"estimated_k", k}, {"k_max", k_max}, {"drop_ratio", cfg.drop_ratio},
                           {"true_k", ds.num_categories()}};
      write_text(ctx.run_dir / "estimate.json", result.dump(2) + "\n");
      manifest.output(ctx.run_dir / "estimate.json");
      out << "estimated_k\t" << k << "\n";
    } else if (*cal) {
      const TrainConfig cfg = cal_flags.resolve();
      manifest.config(cfg);
      const Dataset ds = load_input(manifest, data);
      std::optional<EncoderHead> head;
      if (!checkpoint.empty()) {
        manifest.input(checkpoint);
        head = load_checkpoint(checkpoint);
      }
      const EncoderHead* hp = head ? &*head : nullptr;
      const std::size_t k = cal_flags.k_clusters || !head
                                ? resolve_cluster_count(cfg.k_clusters, ds, head ? *head : make_head(ds, cfg), cfg)
                                : head->classifier.bias.size();
      std::optional<PrototypeSet> t;
      if (!truth.empty()) {
        manifest.input(truth);
        t = truth_in_space(load_truth_file(truth), hp, cfg.normalize_distances);
      }
      const auto unl = ds.indices(Split::kUnlabeled), lab = ds.indices(Split::kLabeled);
      const auto d = calibration_diagnostics(features(hp, ds.embeddings(unl), cfg.normalize_distances),
                                             features(hp, ds.embeddings(lab), cfg.normalize_distances),
                                             ds.labels(lab), k, cfg, t ? &*t : nullptr);
      std::ostringstream s;
      s << "cluster\tmatched_labeled";
      if (t) s << "\ttruth_id\tdist_before\tdist_after";
      s << "\n";
      for (std::size_t c = 0; c < d.unlabeled.size(); ++c) {
        const int cid = d.unlabeled.ids[c];
        s << cid << '\t' << d.match.labeled_of(cid).value_or(-1);
        if (t) {
          const int row = d.distances->truth_row[c];
          s << '\t' << (row < 0 ? -1 : t->ids[static_cast<std::size_t>(row)]) << '\t'
            << fixed(d.distances->per_cluster_before[c], 6) << '\t' << fixed(d.distances->per_cluster_after[c], 6);
        }
        s << "\n";
      }
      write_text(ctx.run_dir / "calibration.tsv", s.str());
      manifest.output(ctx.run_dir / "calibration.tsv");
      out << s.str();
      if (t)
        out << "mean_before\t" << fixed(d.distances->before, 6) << "\nmean_after\t" << fixed(d.distances->after, 6)
            << "\n";
    } else if (*abl) {
      const TrainConfig cfg = abl_flags.resolve();
      manifest.config(cfg);
      std::vector<Variant> variants;
      if (variants_list == "all") {
        variants = all_variants();
      } else {
        std::stringstream ss(variants_list);
        for (std::string name; std::getline(ss, name, ',');) {
          const auto v = parse_variant(name);
          if (!v) fail(ErrorKind::kConfig, "unknown variant '" + name + "'");
          variants.push_back(*v);
        }
      }
      const Dataset ds = load_input(manifest, data);
      const std::optional<fs::path> init_path = init.empty() ? std::nullopt : std::optional<fs::path>(init);
      const auto head0 = pretrained_head(ctx, manifest, ds, cfg, init_path);
      std::ostringstream s;
      s << "variant\th_score\tknown\tnovel\toverall\n";
      json rows = json::array();
      for (Variant v : variants) {
        const auto r = run_ablation(v, head0, ds, cfg);
        s << to_string(v) << '\t' << fixed(100.0 * r.h_score, 2) << '\t' << fixed(100.0 * r.known_acc, 2) << '\t'
          << fixed(100.0 * r.novel_acc, 2) << '\t' << fixed(100.0 * r.overall_acc, 2) << "\n";
        json row = metrics_to_json(r);
        row["variant"] = std::string(to_string(v));
        rows.push_back(row);
      }
      write_text(ctx.run_dir / "ablation.tsv", s.str());
      write_text(ctx.run_dir / "ablation.json", rows.dump(2) + "\n");
      manifest.output(ctx.run_dir / "ablation.tsv");
      manifest.output(ctx.run_dir / "ablation.json");
      out << s.str();
    }
    manifest.write(ctx.run_dir);
    return kOk;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kFormatError;
  } catch (const Error& e) {
    err << to_string(e.kind()) << " error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::kInvalidArgument: return kInvalidArgument;
      case ErrorKind::kConfig: return kConfigError;
      case ErrorKind::kIo: return kIoError;
      case ErrorKind::kFormat: return kFormatError;
      case ErrorKind::kNumeric: return kNumericError;
    }
    return kFailure;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace tanet::cli
