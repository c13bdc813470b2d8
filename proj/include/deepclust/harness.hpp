#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "deepclust/data_io.hpp"
#include "deepclust/dc_models.hpp"
#include "deepclust/metrics.hpp"

namespace deepclust {

struct ExperimentConfig {
  std::string manifest;
  std::string algorithm = "sdcn";  // sdcn | edesc | ae_birch | kmeans | birch
  std::size_t layers = 2;          // hidden layers in the autoencoder
  std::size_t layer_size = 1000;   // width of every hidden layer
  std::size_t z = 100;             // latent dimension
  std::size_t knn_k = 5;
  std::string kernel = "heat";  // heat | dot
  double t = 0.0;               // heat bandwidth; 0 = mean pairwise sq dist
  double alpha = 0.1;
  double beta = 0.01;
  double gamma = 0.1;
  std::size_t d_sub = 5;
  double eta = 1e-4;
  std::size_t epochs = 50;
  std::size_t pretrain_epochs = 30;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::string checkpoint;  // optional pretrained autoencoder to reuse
  std::string out_dir = ".";
};

// Overlay file keys onto a config; keys mirror the field names exactly and
// unknown keys are rejected.
void apply_kv(ExperimentConfig& config,
              const std::map<std::string, std::string>& kv);

DCConfig to_dc_config(const ExperimentConfig& config, std::size_t k,
                      std::size_t input_dim);

struct RunRecord {
  ExperimentConfig config;
  std::string dataset;
  std::string task;
  MetricsReport report;
  std::string labels_path;  // predicted labels on disk
  std::string trace_path;   // training trace csv ("" for classic algorithms)
  double time_load = 0.0;
  double time_train = 0.0;
  double time_total = 0.0;
};

// load -> cluster/train -> evaluate -> persist (labels, trace, record file).
// Errors carry a [stage] prefix. Everything but wall-clock timings is
// reproducible from config + seed.
RunRecord run_experiment(const ExperimentConfig& config);

// Flat key = value snapshot; every time_* key holds a timing so consumers can
// strip them when comparing runs.
void save_run_record(const std::string& path, const RunRecord& rec);
RunRecord load_run_record(const std::string& path);

// One column per record, rows fixed to the eight report metric names.
std::string emit_report_text(const std::vector<RunRecord>& records);
std::string emit_report_csv(const std::vector<RunRecord>& records);

struct SimilarityData {
  Matrix sim;                      // cosine similarities over the subset
  std::vector<std::uint8_t> zero;  // 1 where the item has zero norm
};

// Zero-norm rows get similarity 0 everywhere (diagonal included) and a flag.
SimilarityData emit_similarity_data(const Matrix& x,
                                    const std::vector<std::size_t>& subset);
std::string similarity_to_csv(const SimilarityData& s,
                              const std::vector<std::string>& ids);

struct KScalingRow {
  std::size_t k = 0;
  double seconds = 0.0;
};

// Wall-clock per K for kmeans or birch on fixed data; K values must be
// strictly ascending. Raw measurements, no smoothing.
std::vector<KScalingRow> benchmark_k_scaling(const Matrix& x,
                                             const std::vector<std::size_t>& ks,
                                             const std::string& algorithm,
                                             std::uint64_t seed);
std::string k_scaling_to_csv(const std::vector<KScalingRow>& rows);

}  // namespace deepclust
