#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "deepclust/matrix.hpp"

namespace deepclust {

struct EmbeddingData {
  std::vector<std::string> ids;  // unique, one per row
  Matrix x;
};

// Auto-detects the binary magic; anything else parses as delimited text
// (first column id, remaining columns reals, optional header line).
EmbeddingData load_embeddings(const std::string& path);
void save_embeddings_text(const std::string& path, const EmbeddingData& data);
// Magic "DCEB", u32 version, u64 N, u64 d, then (u32 id_len, id bytes,
// d f64) per record. Little-endian; round-trips bitwise.
void save_embeddings_binary(const std::string& path, const EmbeddingData& data);

// Variable-width rows, e.g. straight out of a tabular transformer.
struct RaggedData {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
};
RaggedData load_ragged(const std::string& path);

// Resample every row to the maximum observed width by linear interpolation
// over its index range; first/last values are preserved exactly. With
// trailing_fill the interpolation targets width-1 and the last column
// forward-fills (the transformer edge case where the final column has no
// successor to interpolate against).
Matrix normalize_dims(const std::vector<std::vector<double>>& rows,
                      bool trailing_fill = false);

struct LabelsData {
  std::vector<std::string> ids;
  std::vector<int> labels;               // dense, first-appearance order
  std::vector<std::string> label_names;  // dense id -> original string
};

// Two comma-separated columns (id, label string). A first line of
// "id,label" or "id,cluster" is treated as a header; '#' lines skipped.
LabelsData load_labels(const std::string& path);
void save_labels(const std::string& path, const std::vector<std::string>& ids,
                 const std::vector<int>& labels);

// Accepts either the plain two-column format above or a delimited file whose
// header names a cluster column (CID, with TID as the id when present) —
// the layout the public entity-resolution benchmark files use.
LabelsData load_cluster_records(const std::string& path);

struct SubsetResult {
  std::vector<std::string> ids;
  std::vector<int> labels;
};

// Drop every singleton-cluster record, stable-sort by cluster id ascending,
// keep the first target_n records. Rejects target_n beyond what remains.
SubsetResult subset_musicbrainz(const LabelsData& records, std::size_t target_n);

struct Manifest {
  std::string name;
  std::string task;  // schema_inference | entity_resolution | domain_discovery
  std::string embeddings_path;
  std::string labels_path;
  std::size_t k = 0;  // ground-truth cluster count
  std::string notes;
};

// key = value lines; blank lines and '#' comments ignored; later keys win.
std::map<std::string, std::string> load_kv_file(const std::string& path);
// Relative embedding/label paths resolve against the manifest's directory.
Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& m);

struct SynthData {
  EmbeddingData data;
  std::vector<int> labels;
};

// K isotropic Gaussian blobs, centers rejection-sampled at least 10*spread
// apart, balanced labels (i mod K), fully determined by the seed.
SynthData synth_blobs(std::size_t n, std::size_t d, std::size_t k, double spread,
                      std::uint64_t seed);

// RFC-4180-ish field splitting: quoted fields may contain commas and
// doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace deepclust
