// command-line front end: pretrain | run | report | synth |
// subset-musicbrainz | similarity | bench-k
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "deepclust/harness.hpp"

namespace {

using namespace deepclust;

std::string default_out_dir() {
  const char* env = std::getenv("DEEPCLUST_OUT_DIR");
  return env != nullptr && *env != '\0' ? env : ".";
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw IoError("write failed on '" + path + "'");
}

// every hyper-parameter flag, named exactly after the config field
struct RunFlags {
  ExperimentConfig values;
  CLI::Option* opt[18] = {};

  void attach(CLI::App* cmd) {
    int i = 0;
    opt[i++] = cmd->add_option("--manifest", values.manifest, "dataset manifest path");
    opt[i++] = cmd->add_option("--algorithm", values.algorithm,
                               "sdcn | edesc | ae_birch | kmeans | birch");
    opt[i++] = cmd->add_option("--layers", values.layers, "autoencoder hidden layers");
    opt[i++] = cmd->add_option("--layer_size", values.layer_size, "hidden layer width");
    opt[i++] = cmd->add_option("--z", values.z, "latent dimension");
    opt[i++] = cmd->add_option("--knn_k", values.knn_k, "neighbors in the similarity graph");
    opt[i++] = cmd->add_option("--kernel", values.kernel, "heat | dot");
    opt[i++] = cmd->add_option("--t", values.t, "heat kernel bandwidth (0 = auto)");
    opt[i++] = cmd->add_option("--alpha", values.alpha, "KL(P||Q) weight");
    opt[i++] = cmd->add_option("--beta", values.beta, "KL(P||Z) weight");
    opt[i++] = cmd->add_option("--gamma", values.gamma, "KL(S~||S) weight");
    opt[i++] = cmd->add_option("--d_sub", values.d_sub, "subspace dimension");
    opt[i++] = cmd->add_option("--eta", values.eta, "subspace affinity smoothing");
    opt[i++] = cmd->add_option("--epochs", values.epochs, "joint-training epochs");
    opt[i++] = cmd->add_option("--pretrain_epochs", values.pretrain_epochs,
                               "autoencoder pretraining epochs");
    opt[i++] = cmd->add_option("--lr", values.lr, "learning rate");
    opt[i++] = cmd->add_option("--seed", values.seed, "random seed");
    opt[i++] = cmd->add_option("--checkpoint", values.checkpoint,
                               "pretrained autoencoder checkpoint to reuse");
  }

  // CLI beats config file beats env/defaults
  void overlay(ExperimentConfig& cfg) const {
    const ExperimentConfig& v = values;
    int i = 0;
    auto given = [&]() { return opt[i++]->count() > 0; };
    if (given()) cfg.manifest = v.manifest;
    if (given()) cfg.algorithm = v.algorithm;
    if (given()) cfg.layers = v.layers;
    if (given()) cfg.layer_size = v.layer_size;
    if (given()) cfg.z = v.z;
    if (given()) cfg.knn_k = v.knn_k;
    if (given()) cfg.kernel = v.kernel;
    if (given()) cfg.t = v.t;
    if (given()) cfg.alpha = v.alpha;
    if (given()) cfg.beta = v.beta;
    if (given()) cfg.gamma = v.gamma;
    if (given()) cfg.d_sub = v.d_sub;
    if (given()) cfg.eta = v.eta;
    if (given()) cfg.epochs = v.epochs;
    if (given()) cfg.pretrain_epochs = v.pretrain_epochs;
    if (given()) cfg.lr = v.lr;
    if (given()) cfg.seed = v.seed;
    if (given()) cfg.checkpoint = v.checkpoint;
  }
};

int cmd_pretrain(const std::string& embeddings, std::size_t layers,
                 std::size_t layer_size, std::size_t z, std::size_t epochs,
                 double lr, std::uint64_t seed, const std::string& out_dir,
                 std::string out) {
  const EmbeddingData data = load_embeddings(embeddings);
  AEConfig cfg;
  cfg.input_dim = data.x.cols();
  cfg.hidden_sizes.assign(layers, layer_size);
  cfg.latent_dim = z;
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  cfg.seed = seed;
  cfg.standardize_input = true;

  const PretrainResult res = pretrain(data.x, cfg);
  std::filesystem::create_directories(out_dir);
  if (out.empty()) out = out_dir + "/ae_checkpoint.bin";
  save_checkpoint(out, cfg, res.params);

  std::string trace = "epoch,loss\n";
  char buf[64];
  for (std::size_t i = 0; i < res.loss_trace.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.10g\n", i, res.loss_trace[i]);
    trace += buf;
  }
  write_text_file(out + ".loss.csv", trace);
  std::cout << "checkpoint: " << out << "\n"
            << "loss trace: " << out << ".loss.csv\n"
            << "final loss: " << res.loss_trace.back() << "\n";
  return 0;
}

int cmd_run(const std::string& config_file, const RunFlags& flags,
            const CLI::Option* out_dir_opt, const std::string& out_dir_val) {
  ExperimentConfig cfg;
  cfg.out_dir = default_out_dir();
  if (!config_file.empty()) apply_kv(cfg, load_kv_file(config_file));
  flags.overlay(cfg);
  if (out_dir_opt->count() > 0) cfg.out_dir = out_dir_val;

  const RunRecord rec = run_experiment(cfg);
  std::cout << emit_report_text({rec});
  std::cout << "labels: " << rec.labels_path << "\n";
  if (!rec.trace_path.empty()) std::cout << "trace: " << rec.trace_path << "\n";
  return 0;
}

int cmd_report(const std::vector<std::string>& record_files,
               const std::string& format, const std::string& out) {
  std::vector<RunRecord> records;
  records.reserve(record_files.size());
  for (const std::string& path : record_files)
    records.push_back(load_run_record(path));
  const std::string doc =
      format == "csv" ? emit_report_csv(records) : emit_report_text(records);
  if (out.empty()) std::cout << doc;
  else {
    write_text_file(out, doc);
    std::cout << "report: " << out << "\n";
  }
  return 0;
}

int cmd_synth(std::size_t n, std::size_t d, std::size_t k, double spread,
              std::uint64_t seed, const std::string& out_dir,
              const std::string& name, bool binary) {
  const SynthData data = synth_blobs(n, d, k, spread, seed);
  std::filesystem::create_directories(out_dir);
  const std::string base = out_dir + "/" + name;
  const std::string emb_path = base + (binary ? ".bin" : ".csv");
  if (binary) save_embeddings_binary(emb_path, data.data);
  else save_embeddings_text(emb_path, data.data);
  save_labels(base + "_labels.csv", data.data.ids, data.labels);

  Manifest m;
  m.name = name;
  m.task = "entity_resolution";
  // siblings of the manifest, so store them relative to it
  m.embeddings_path = name + (binary ? ".bin" : ".csv");
  m.labels_path = name + "_labels.csv";
  m.k = k;
  m.notes = "synthetic gaussian blobs";
  save_manifest(base + "_manifest.txt", m);
  std::cout << "embeddings: " << emb_path << "\n"
            << "labels: " << base << "_labels.csv\n"
            << "manifest: " << base << "_manifest.txt\n";
  return 0;
}

int cmd_subset(const std::string& input, std::size_t n, const std::string& out_dir,
               const std::string& name) {
  const LabelsData records = load_cluster_records(input);
  const SubsetResult subset = subset_musicbrainz(records, n);
  std::filesystem::create_directories(out_dir);
  const std::string out = out_dir + "/" + name + "_labels.csv";
  save_labels(out, subset.ids, subset.labels);

  std::vector<int> dense = subset.labels;
  const std::size_t k = compact_labels(dense);
  const ClusterStats stats = cluster_stats(dense);
  std::cout << "records: " << subset.ids.size() << "\n"
            << "clusters: " << k << "\n"
            << "mean size: " << stats.mean_size << "\n"
            << "median size: " << stats.median_size << "\n"
            << "largest: " << stats.largest << "\n"
            << "unary: " << stats.unary << "\n"
            << "labels: " << out << "\n";
  return 0;
}

int cmd_similarity(const std::string& embeddings, const std::string& ids_list,
                   std::size_t n, const std::string& out) {
  const EmbeddingData data = load_embeddings(embeddings);
  std::vector<std::size_t> subset;
  std::vector<std::string> ids;
  if (!ids_list.empty()) {
    for (const std::string& want : split_list(ids_list)) {
      bool found = false;
      for (std::size_t i = 0; i < data.ids.size(); ++i)
        if (data.ids[i] == want) {
          subset.push_back(i);
          ids.push_back(want);
          found = true;
          break;
        }
      if (!found) throw std::invalid_argument("id '" + want + "' not found");
    }
  } else {
    const std::size_t take = std::min(n, data.ids.size());
    for (std::size_t i = 0; i < take; ++i) {
      subset.push_back(i);
      ids.push_back(data.ids[i]);
    }
  }
  const SimilarityData sim = emit_similarity_data(data.x, subset);
  const std::string doc = similarity_to_csv(sim, ids);
  if (out.empty()) std::cout << doc;
  else {
    write_text_file(out, doc);
    std::cout << "similarity: " << out << "\n";
  }
  return 0;
}

int cmd_bench_k(const std::string& embeddings, const std::string& ks_list,
                const std::string& algorithm, std::uint64_t seed,
                const std::string& out) {
  const EmbeddingData data = load_embeddings(embeddings);
  std::vector<std::size_t> ks;
  for (const std::string& item : split_list(ks_list)) {
    try {
      ks.push_back(std::stoul(item));
    } catch (const std::exception&) {
      throw std::invalid_argument("bench-k: bad K value '" + item + "'");
    }
  }
  const std::vector<KScalingRow> rows =
      benchmark_k_scaling(data.x, ks, algorithm, seed);
  const std::string doc = k_scaling_to_csv(rows);
  if (out.empty()) std::cout << doc;
  else {
    write_text_file(out, doc);
    std::cout << "bench: " << out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deep clustering pipelines for data cleaning and integration"};
  app.require_subcommand(1);

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "train an autoencoder checkpoint");
  std::string pre_embeddings, pre_out;
  std::string pre_out_dir = default_out_dir();
  std::size_t pre_layers = 2, pre_layer_size = 1000, pre_z = 100, pre_epochs = 30;
  double pre_lr = 1e-3;
  std::uint64_t pre_seed = 0;
  pre->add_option("--embeddings", pre_embeddings, "embedding file")->required();
  pre->add_option("--layers", pre_layers, "hidden layers");
  pre->add_option("--layer_size", pre_layer_size, "hidden layer width");
  pre->add_option("--z", pre_z, "latent dimension");
  pre->add_option("--pretrain_epochs", pre_epochs, "training epochs");
  pre->add_option("--lr", pre_lr, "learning rate");
  pre->add_option("--seed", pre_seed, "random seed");
  pre->add_option("--out_dir", pre_out_dir, "output directory");
  pre->add_option("--out", pre_out, "checkpoint path (default <out_dir>/ae_checkpoint.bin)");

  // run
  auto* run = app.add_subcommand("run", "run one experiment from a manifest");
  std::string run_config;
  std::string run_out_dir;
  run->add_option("--config", run_config, "key = value config file");
  RunFlags run_flags;
  run_flags.attach(run);
  CLI::Option* run_out_opt = run->add_option("--out_dir", run_out_dir, "output directory");

  // report
  auto* rep = app.add_subcommand("report", "combine run records into one table");
  std::vector<std::string> rep_records;
  std::string rep_format = "text", rep_out;
  rep->add_option("records", rep_records, "run record files")->required();
  rep->add_option("--format", rep_format, "text | csv")
      ->check(CLI::IsMember({"text", "csv"}));
  rep->add_option("--out", rep_out, "write the table here instead of stdout");

  // synth
  auto* syn = app.add_subcommand("synth", "generate gaussian blob data");
  std::size_t syn_n = 500, syn_d = 10, syn_k = 5;
  double syn_spread = 1.0;
  std::uint64_t syn_seed = 7;
  std::string syn_out_dir = default_out_dir(), syn_name = "blobs";
  bool syn_binary = false;
  syn->add_option("--n", syn_n, "points");
  syn->add_option("--d", syn_d, "dimensions");
  syn->add_option("--k", syn_k, "clusters");
  syn->add_option("--spread", syn_spread, "within-cluster standard deviation");
  syn->add_option("--seed", syn_seed, "random seed");
  syn->add_option("--out_dir", syn_out_dir, "output directory");
  syn->add_option("--name", syn_name, "file stem");
  syn->add_flag("--binary", syn_binary, "write the binary embedding format");

  // subset-musicbrainz
  auto* sub = app.add_subcommand("subset-musicbrainz",
                                 "drop singletons, sort by cluster, take first N");
  std::string sub_input, sub_name = "musicbrainz_subset";
  std::size_t sub_n = 2002;
  std::string sub_out_dir = default_out_dir();
  sub->add_option("--input", sub_input, "label or benchmark record file")->required();
  sub->add_option("--n", sub_n, "records to keep");
  sub->add_option("--out_dir", sub_out_dir, "output directory");
  sub->add_option("--name", sub_name, "file stem");

  // similarity
  auto* simc = app.add_subcommand("similarity", "pairwise cosine similarities");
  std::string sim_embeddings, sim_ids, sim_out;
  std::size_t sim_n = 50;
  simc->add_option("--embeddings", sim_embeddings, "embedding file")->required();
  simc->add_option("--ids", sim_ids, "comma-separated item ids (default: first --n)");
  simc->add_option("--n", sim_n, "how many leading items when --ids is not given");
  simc->add_option("--out", sim_out, "write csv here instead of stdout");

  // bench-k
  auto* bench = app.add_subcommand("bench-k", "runtime per cluster count");
  std::string bench_embeddings, bench_ks = "2,4,8,16", bench_alg = "kmeans", bench_out;
  std::uint64_t bench_seed = 0;
  bench->add_option("--embeddings", bench_embeddings, "embedding file")->required();
  bench->add_option("--ks", bench_ks, "comma-separated ascending K values");
  bench->add_option("--algorithm", bench_alg, "kmeans | birch");
  bench->add_option("--seed", bench_seed, "random seed");
  bench->add_option("--out", bench_out, "write csv here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (pre->parsed())
      return cmd_pretrain(pre_embeddings, pre_layers, pre_layer_size, pre_z,
                          pre_epochs, pre_lr, pre_seed, pre_out_dir, pre_out);
    if (run->parsed()) return cmd_run(run_config, run_flags, run_out_opt, run_out_dir);
    if (rep->parsed()) return cmd_report(rep_records, rep_format, rep_out);
    if (syn->parsed())
      return cmd_synth(syn_n, syn_d, syn_k, syn_spread, syn_seed, syn_out_dir,
                       syn_name, syn_binary);
    if (sub->parsed()) return cmd_subset(sub_input, sub_n, sub_out_dir, sub_name);
    if (simc->parsed()) return cmd_similarity(sim_embeddings, sim_ids, sim_n, sim_out);
    if (bench->parsed())
      return cmd_bench_k(bench_embeddings, bench_ks, bench_alg, bench_seed, bench_out);
  } catch (const deepclust::DivergenceError& e) {
    std::cerr << "error (divergence): " << e.what() << "\n";
    return 2;
  } catch (const deepclust::IoError& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error (invalid): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
