#include "deepclust/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace deepclust {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

[[noreturn]] void rethrow_tagged(const char* stage) {
  const std::string tag = std::string("[") + stage + "] ";
  try {
    throw;
  } catch (const DivergenceError& e) {
    throw DivergenceError(tag + e.what());
  } catch (const IoError& e) {
    throw IoError(tag + e.what());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(tag + e.what());
  } catch (const std::exception& e) {
    throw std::runtime_error(tag + e.what());
  }
}

template <typename F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (...) {
    rethrow_tagged(name);
  }
}

const std::vector<std::string>& known_algorithms() {
  static const std::vector<std::string> algs = {"sdcn", "edesc", "ae_birch",
                                                "kmeans", "birch"};
  return algs;
}

void validate_algorithm(const std::string& name) {
  const auto& algs = known_algorithms();
  if (std::find(algs.begin(), algs.end(), name) == algs.end())
    throw std::invalid_argument("unknown algorithm '" + name +
                                "' (expected sdcn, edesc, ae_birch, kmeans, birch)");
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return std::size_t(v);
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" +
                                value + "' as an unsigned integer");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config key '" + key + "': cannot parse '" +
                                value + "' as a real number");
  }
}

std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void apply_kv(ExperimentConfig& config,
              const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "manifest") config.manifest = value;
    else if (key == "algorithm") config.algorithm = value;
    else if (key == "layers") config.layers = parse_size(key, value);
    else if (key == "layer_size") config.layer_size = parse_size(key, value);
    else if (key == "z") config.z = parse_size(key, value);
    else if (key == "knn_k") config.knn_k = parse_size(key, value);
    else if (key == "kernel") config.kernel = value;
    else if (key == "t") config.t = parse_real(key, value);
    else if (key == "alpha") config.alpha = parse_real(key, value);
    else if (key == "beta") config.beta = parse_real(key, value);
    else if (key == "gamma") config.gamma = parse_real(key, value);
    else if (key == "d_sub") config.d_sub = parse_size(key, value);
    else if (key == "eta") config.eta = parse_real(key, value);
    else if (key == "epochs") config.epochs = parse_size(key, value);
    else if (key == "pretrain_epochs") config.pretrain_epochs = parse_size(key, value);
    else if (key == "lr") config.lr = parse_real(key, value);
    else if (key == "seed") config.seed = parse_size(key, value);
    else if (key == "checkpoint") config.checkpoint = value;
    else if (key == "out_dir") config.out_dir = value;
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
}

DCConfig to_dc_config(const ExperimentConfig& config, std::size_t k,
                      std::size_t input_dim) {
  DCConfig dc;
  dc.ae.input_dim = input_dim;
  dc.ae.hidden_sizes.assign(config.layers, config.layer_size);
  dc.ae.latent_dim = config.z;
  dc.ae.epochs = config.pretrain_epochs;
  dc.ae.learning_rate = config.lr;
  dc.ae.seed = config.seed;
  dc.k = k;
  dc.epochs = config.epochs;
  dc.lr = config.lr;
  dc.alpha = config.alpha;
  dc.beta = config.beta;
  dc.gamma = config.gamma;
  dc.knn_k = config.knn_k;
  if (config.kernel == "heat") dc.kernel = DCConfig::Kernel::heat;
  else if (config.kernel == "dot") dc.kernel = DCConfig::Kernel::dot;
  else throw std::invalid_argument("unknown kernel '" + config.kernel +
                                   "' (expected heat or dot)");
  dc.heat_t = config.t;
  dc.d_sub = config.d_sub;
  dc.eta = config.eta;
  dc.seed = config.seed;
  return dc;
}

RunRecord run_experiment(const ExperimentConfig& config) {
  const auto t0 = Clock::now();
  stage("config", [&] {
    validate_algorithm(config.algorithm);
    if (config.manifest.empty())
      throw std::invalid_argument("manifest path is required");
    to_dc_config(config, 2, 1);  // kernel/field sanity before any file work
  });

  Manifest manifest;
  EmbeddingData emb;
  std::vector<int> gt;
  AutoencoderParams pretrained;
  bool have_pretrained = false;
  stage("load", [&] {
    manifest = load_manifest(config.manifest);
    emb = load_embeddings(manifest.embeddings_path);
    if (!config.checkpoint.empty()) {
      pretrained = load_checkpoint(config.checkpoint).second;
      have_pretrained = true;
    }
    const LabelsData labels = load_labels(manifest.labels_path);
    if (labels.ids.size() != emb.ids.size())
      throw IoError("embeddings hold " + std::to_string(emb.ids.size()) +
                    " rows but labels hold " + std::to_string(labels.ids.size()));
    std::unordered_map<std::string, int> by_id;
    for (std::size_t i = 0; i < labels.ids.size(); ++i)
      by_id[labels.ids[i]] = labels.labels[i];
    gt.reserve(emb.ids.size());
    for (const std::string& id : emb.ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw IoError("labels file is missing id '" + id + "'");
      gt.push_back(it->second);
    }
  });
  const double time_load = elapsed_seconds(t0);

  const auto t1 = Clock::now();
  ClusteringResult result;
  TrainTrace trace;
  bool has_trace = false;
  stage("train", [&] {
    if (config.algorithm == "kmeans") {
      KMeansConfig km;
      km.k = manifest.k;
      km.seed = config.seed;
      result = kmeans(emb.x, km).result;
    } else if (config.algorithm == "birch") {
      result = birch(emb.x, manifest.k, 50, birch_auto_threshold(emb.x));
    } else {
      const DCConfig dc = to_dc_config(config, manifest.k, emb.x.cols());
      const AutoencoderParams* warm = have_pretrained ? &pretrained : nullptr;
      TrainOutput out;
      if (config.algorithm == "sdcn") out = sdcn_train(emb.x, dc, warm);
      else if (config.algorithm == "edesc") out = edesc_train(emb.x, dc, warm);
      else out = ae_birch_pipeline(emb.x, dc, warm);
      result = std::move(out.result);
      trace = std::move(out.trace);
      has_trace = true;
    }
  });
  const double time_train = elapsed_seconds(t1);

  RunRecord rec;
  rec.config = config;
  rec.dataset = manifest.name;
  rec.task = manifest.task;
  stage("evaluate", [&] {
    rec.report = evaluate(gt, result.labels, result.seconds);
  });

  stage("persist", [&] {
    std::filesystem::create_directories(config.out_dir);
    const std::string base =
        config.out_dir + "/" + manifest.name + "_" + config.algorithm;
    rec.labels_path = base + "_labels.csv";
    save_labels(rec.labels_path, emb.ids, result.labels);
    if (has_trace) {
      rec.trace_path = base + "_trace.csv";
      std::ofstream tf(rec.trace_path);
      if (!tf) throw IoError("cannot open '" + rec.trace_path + "' for writing");
      tf << trace_to_csv(trace);
      for (const std::string& note : trace.notes) tf << "# " << note << '\n';
      if (!tf) throw IoError("write failed on '" + rec.trace_path + "'");
    }
    rec.time_load = time_load;
    rec.time_train = time_train;
    rec.time_total = elapsed_seconds(t0);
    save_run_record(base + "_run.txt", rec);
  });
  return rec;
}

void save_run_record(const std::string& path, const RunRecord& rec) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  const ExperimentConfig& c = rec.config;
  out << "dataset = " << rec.dataset << '\n';
  out << "task = " << rec.task << '\n';
  out << "manifest = " << c.manifest << '\n';
  out << "algorithm = " << c.algorithm << '\n';
  out << "layers = " << c.layers << '\n';
  out << "layer_size = " << c.layer_size << '\n';
  out << "z = " << c.z << '\n';
  out << "knn_k = " << c.knn_k << '\n';
  out << "kernel = " << c.kernel << '\n';
  out << "t = " << format_real(c.t) << '\n';
  out << "alpha = " << format_real(c.alpha) << '\n';
  out << "beta = " << format_real(c.beta) << '\n';
  out << "gamma = " << format_real(c.gamma) << '\n';
  out << "d_sub = " << c.d_sub << '\n';
  out << "eta = " << format_real(c.eta) << '\n';
  out << "epochs = " << c.epochs << '\n';
  out << "pretrain_epochs = " << c.pretrain_epochs << '\n';
  out << "lr = " << format_real(c.lr) << '\n';
  out << "seed = " << c.seed << '\n';
  if (!c.checkpoint.empty()) out << "checkpoint = " << c.checkpoint << '\n';
  out << "out_dir = " << c.out_dir << '\n';
  out << "gt_k = " << rec.report.gt_k << '\n';
  out << "predicted_k = " << rec.report.predicted_k << '\n';
  out << "mean_size = " << format_real(rec.report.mean_size) << '\n';
  out << "median_size = " << format_real(rec.report.median_size) << '\n';
  out << "unary = " << rec.report.unary << '\n';
  out << "ari = " << format_real(rec.report.ari) << '\n';
  out << "acc = " << format_real(rec.report.acc) << '\n';
  out << "labels_file = " << rec.labels_path << '\n';
  out << "trace_file = " << rec.trace_path << '\n';
  out << "time_run = " << format_real(rec.report.seconds) << '\n';
  out << "time_load = " << format_real(rec.time_load) << '\n';
  out << "time_train = " << format_real(rec.time_train) << '\n';
  out << "time_total = " << format_real(rec.time_total) << '\n';
  if (!out) throw IoError("write failed on '" + path + "'");
}

RunRecord load_run_record(const std::string& path) {
  const std::map<std::string, std::string> kv = load_kv_file(path);
  auto get = [&](const char* key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end())
      throw IoError("run record '" + path + "' is missing '" + std::string(key) + "'");
    return it->second;
  };
  RunRecord rec;
  rec.dataset = get("dataset");
  rec.task = get("task");
  std::map<std::string, std::string> cfg;
  for (const char* key : {"manifest", "algorithm", "layers", "layer_size", "z",
                          "knn_k", "kernel", "t", "alpha", "beta", "gamma",
                          "d_sub", "eta", "epochs", "pretrain_epochs", "lr",
                          "seed", "out_dir"})
    cfg[key] = get(key);
  if (kv.count("checkpoint")) cfg["checkpoint"] = kv.at("checkpoint");
  apply_kv(rec.config, cfg);
  rec.report.gt_k = parse_size("gt_k", get("gt_k"));
  rec.report.predicted_k = parse_size("predicted_k", get("predicted_k"));
  rec.report.mean_size = parse_real("mean_size", get("mean_size"));
  rec.report.median_size = parse_real("median_size", get("median_size"));
  rec.report.unary = parse_size("unary", get("unary"));
  rec.report.ari = parse_real("ari", get("ari"));
  rec.report.acc = parse_real("acc", get("acc"));
  rec.labels_path = kv.count("labels_file") ? kv.at("labels_file") : "";
  rec.trace_path = kv.count("trace_file") ? kv.at("trace_file") : "";
  rec.report.seconds = parse_real("time_run", get("time_run"));
  rec.time_load = parse_real("time_load", get("time_load"));
  rec.time_train = parse_real("time_train", get("time_train"));
  rec.time_total = parse_real("time_total", get("time_total"));
  return rec;
}

namespace {

struct ReportGrid {
  std::vector<std::string> headers;                 // one per record
  std::vector<std::string> row_names;               // fixed metric rows
  std::vector<std::vector<std::string>> columns;    // [record][row]
};

ReportGrid build_grid(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("report: no records");
  ReportGrid grid;
  for (const auto& [name, value] : report_rows(records[0].report))
    grid.row_names.push_back(name);
  for (const RunRecord& rec : records) {
    grid.headers.push_back(rec.dataset + "/" + rec.config.algorithm);
    std::vector<std::string> col;
    for (const auto& [name, value] : report_rows(rec.report)) col.push_back(value);
    grid.columns.push_back(std::move(col));
  }
  return grid;
}

}  // namespace

std::string emit_report_text(const std::vector<RunRecord>& records) {
  const ReportGrid grid = build_grid(records);
  std::size_t name_w = 6;  // "Metric"
  for (const std::string& n : grid.row_names) name_w = std::max(name_w, n.size());
  std::vector<std::size_t> col_w(grid.headers.size());
  for (std::size_t c = 0; c < grid.headers.size(); ++c) {
    col_w[c] = grid.headers[c].size();
    for (const std::string& v : grid.columns[c]) col_w[c] = std::max(col_w[c], v.size());
  }
  std::ostringstream os;
  auto pad = [&](const std::string& s, std::size_t w) {
    os << s << std::string(w - s.size(), ' ');
  };
  pad("Metric", name_w);
  for (std::size_t c = 0; c < grid.headers.size(); ++c) {
    os << "  ";
    pad(grid.headers[c], col_w[c]);
  }
  os << '\n';
  for (std::size_t r = 0; r < grid.row_names.size(); ++r) {
    pad(grid.row_names[r], name_w);
    for (std::size_t c = 0; c < grid.columns.size(); ++c) {
      os << "  ";
      pad(grid.columns[c][r], col_w[c]);
    }
    os << '\n';
  }
  return os.str();
}

std::string emit_report_csv(const std::vector<RunRecord>& records) {
  const ReportGrid grid = build_grid(records);
  std::ostringstream os;
  os << "metric";
  for (const std::string& h : grid.headers) os << ',' << h;
  os << '\n';
  for (std::size_t r = 0; r < grid.row_names.size(); ++r) {
    os << grid.row_names[r];
    for (std::size_t c = 0; c < grid.columns.size(); ++c)
      os << ',' << grid.columns[c][r];
    os << '\n';
  }
  return os.str();
}

SimilarityData emit_similarity_data(const Matrix& x,
                                    const std::vector<std::size_t>& subset) {
  if (subset.empty()) throw std::invalid_argument("similarity: empty subset");
  for (std::size_t idx : subset)
    if (idx >= x.rows())
      throw std::invalid_argument("similarity: index " + std::to_string(idx) +
                                  " out of range");
  const std::size_t m = subset.size();
  SimilarityData out;
  out.sim = Matrix(m, m);
  out.zero.assign(m, 0);
  std::vector<double> norms(m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    double n2 = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c)
      n2 += x(subset[a], c) * x(subset[a], c);
    norms[a] = std::sqrt(n2);
    if (norms[a] == 0.0) out.zero[a] = 1;
  }
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      if (out.zero[a] || out.zero[b]) {
        out.sim(a, b) = 0.0;
        continue;
      }
      double dot = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c)
        dot += x(subset[a], c) * x(subset[b], c);
      out.sim(a, b) = dot / (norms[a] * norms[b]);
    }
  }
  return out;
}

std::string similarity_to_csv(const SimilarityData& s,
                              const std::vector<std::string>& ids) {
  if (ids.size() != s.sim.rows())
    throw std::invalid_argument("similarity csv: id count mismatch");
  std::ostringstream os;
  bool any_zero = false;
  for (std::uint8_t f : s.zero) any_zero |= f != 0;
  if (any_zero) {
    os << "# zero-norm items:";
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (s.zero[i]) os << ' ' << ids[i];
    os << '\n';
  }
  os << "id";
  for (const std::string& id : ids) os << ',' << id;
  os << '\n';
  char buf[64];
  for (std::size_t r = 0; r < s.sim.rows(); ++r) {
    os << ids[r];
    for (std::size_t c = 0; c < s.sim.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), ",%.6f", s.sim(r, c));
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

std::vector<KScalingRow> benchmark_k_scaling(const Matrix& x,
                                             const std::vector<std::size_t>& ks,
                                             const std::string& algorithm,
                                             std::uint64_t seed) {
  if (ks.empty()) throw std::invalid_argument("bench-k: no K values");
  for (std::size_t i = 1; i < ks.size(); ++i)
    if (ks[i] <= ks[i - 1])
      throw std::invalid_argument("bench-k: K values must be strictly ascending");
  if (algorithm != "kmeans" && algorithm != "birch")
    throw std::invalid_argument("bench-k: algorithm must be kmeans or birch");

  std::vector<KScalingRow> rows;
  rows.reserve(ks.size());
  for (std::size_t k : ks) {
    if (k == 0 || k > x.rows())
      throw std::invalid_argument("bench-k: K " + std::to_string(k) +
                                  " out of range for " + std::to_string(x.rows()) +
                                  " rows");
    const auto t0 = Clock::now();
    if (algorithm == "kmeans") {
      KMeansConfig km;
      km.k = k;
      km.seed = seed;
      (void)kmeans(x, km);
    } else {
      (void)birch(x, k, 50, birch_auto_threshold(x));
    }
    rows.push_back({k, elapsed_seconds(t0)});
  }
  return rows;
}

std::string k_scaling_to_csv(const std::vector<KScalingRow>& rows) {
  std::ostringstream os;
  os << "k,seconds\n";
  char buf[64];
  for (const KScalingRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%zu,%.6f\n", r.k, r.seconds);
    os << buf;
  }
  return os.str();
}

}  // namespace deepclust
