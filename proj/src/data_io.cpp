#include "deepclust/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "deepclust/rng.hpp"

namespace deepclust {

namespace {

constexpr char kMagic[4] = {'D', 'C', 'E', 'B'};
constexpr std::uint32_t kVersion = 1;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool parse_double(const std::string& field, double* out) {
  const std::string f = trim(field);
  if (f.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(f.c_str(), &end);
  if (end != f.c_str() + f.size()) return false;
  *out = v;
  return true;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f != nullptr) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path + "'");
  return f;
}

void put_bytes(std::FILE* f, const void* data, std::size_t n, const std::string& path) {
  if (std::fwrite(data, 1, n, f) != n) throw IoError("write failed on '" + path + "'");
}

void get_bytes(std::FILE* f, void* data, std::size_t n, const std::string& path) {
  if (std::fread(data, 1, n, f) != n)
    throw IoError("unexpected end of file in '" + path + "'");
}

void put_u32(std::FILE* f, std::uint32_t v, const std::string& path) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
  put_bytes(f, b, 4, path);
}

std::uint32_t get_u32(std::FILE* f, const std::string& path) {
  unsigned char b[4];
  get_bytes(f, b, 4, path);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
  return v;
}

void put_u64(std::FILE* f, std::uint64_t v, const std::string& path) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
  put_bytes(f, b, 8, path);
}

std::uint64_t get_u64(std::FILE* f, const std::string& path) {
  unsigned char b[8];
  get_bytes(f, b, 8, path);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
  return v;
}

void put_f64(std::FILE* f, double v, const std::string& path) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(f, bits, path);
}

double get_f64(std::FILE* f, const std::string& path) {
  const std::uint64_t bits = get_u64(f, path);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

bool is_comment_or_blank(const std::string& line) {
  const std::string t = trim(line);
  return t.empty() || t[0] == '#';
}

void check_unique_ids(const std::vector<std::string>& ids, const std::string& path) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (!seen.insert(ids[i]).second)
      throw IoError("duplicate id '" + ids[i] + "' at row " + std::to_string(i) +
                    " in '" + path + "'");
}

// generic text reader shared by the fixed-width and ragged loaders
RaggedData load_text_rows(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  RaggedData out;
  bool first_content = true;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (is_comment_or_blank(lines[ln])) continue;
    const std::vector<std::string> fields = split_csv_line(lines[ln]);
    if (first_content) {
      first_content = false;
      // header iff any field past the id column is non-numeric
      bool header = false;
      double tmp;
      for (std::size_t i = 1; i < fields.size(); ++i)
        if (!parse_double(fields[i], &tmp)) header = true;
      if (fields.size() < 2) header = true;  // lone id cell can only be a header
      if (header) continue;
    }
    if (fields.size() < 2)
      throw IoError("row " + std::to_string(ln) + " in '" + path +
                    "' has no values");
    std::vector<double> vals(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (!parse_double(fields[i], &vals[i - 1]))
        throw IoError("row " + std::to_string(ln) + " in '" + path +
                      "': cannot parse value '" + fields[i] + "'");
      if (!std::isfinite(vals[i - 1]))
        throw IoError("row " + std::to_string(ln) + " in '" + path +
                      "': non-finite value");
    }
    out.ids.push_back(trim(fields[0]));
    out.rows.push_back(std::move(vals));
  }
  check_unique_ids(out.ids, path);
  return out;
}

bool has_binary_magic(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open '" + path + "'");
  char head[4] = {0, 0, 0, 0};
  const std::size_t got = std::fread(head, 1, 4, f);
  std::fclose(f);
  return got == 4 && std::memcmp(head, kMagic, 4) == 0;
}

EmbeddingData load_embeddings_binary(const std::string& path) {
  FilePtr f = open_file(path, "rb");
  char head[4];
  get_bytes(f.get(), head, 4, path);
  if (std::memcmp(head, kMagic, 4) != 0)
    throw IoError("'" + path + "' is not an embedding file (bad magic)");
  const std::uint32_t version = get_u32(f.get(), path);
  if (version != kVersion)
    throw IoError("'" + path + "': unsupported version " + std::to_string(version));
  const std::uint64_t n = get_u64(f.get(), path);
  const std::uint64_t d = get_u64(f.get(), path);
  EmbeddingData out;
  out.ids.reserve(n);
  out.x = Matrix(n, d);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint32_t id_len = get_u32(f.get(), path);
    std::string id(id_len, '\0');
    if (id_len > 0) get_bytes(f.get(), id.data(), id_len, path);
    out.ids.push_back(std::move(id));
    for (std::uint64_t c = 0; c < d; ++c) {
      const double v = get_f64(f.get(), path);
      if (!std::isfinite(v))
        throw IoError("row " + std::to_string(i) + " in '" + path +
                      "': non-finite value");
      out.x(i, c) = v;
    }
  }
  check_unique_ids(out.ids, path);
  return out;
}

std::string dirname_of(const std::string& path) {
  const std::size_t slash = path.find_last_of('/');
  if (slash == std::string::npos) return ".";
  if (slash == 0) return "/";
  return path.substr(0, slash);
}

std::string resolve_relative(const std::string& base_dir, const std::string& path) {
  if (path.empty() || path[0] == '/') return path;
  return base_dir + "/" + path;
}

}  // namespace

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

EmbeddingData load_embeddings(const std::string& path) {
  if (has_binary_magic(path)) return load_embeddings_binary(path);
  RaggedData raw = load_text_rows(path);
  if (raw.rows.empty()) throw IoError("'" + path + "' holds no embedding rows");
  const std::size_t d = raw.rows[0].size();
  for (std::size_t i = 1; i < raw.rows.size(); ++i)
    if (raw.rows[i].size() != d)
      throw IoError("row " + std::to_string(i) + " in '" + path + "' has " +
                    std::to_string(raw.rows[i].size()) + " values, expected " +
                    std::to_string(d));
  EmbeddingData out;
  out.ids = std::move(raw.ids);
  out.x = Matrix(raw.rows.size(), d);
  for (std::size_t i = 0; i < raw.rows.size(); ++i)
    for (std::size_t c = 0; c < d; ++c) out.x(i, c) = raw.rows[i][c];
  return out;
}

void save_embeddings_text(const std::string& path, const EmbeddingData& data) {
  if (data.ids.size() != data.x.rows())
    throw std::invalid_argument("save embeddings: id count does not match rows");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  char buf[64];
  for (std::size_t i = 0; i < data.x.rows(); ++i) {
    out << data.ids[i];
    for (std::size_t c = 0; c < data.x.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g", data.x(i, c));
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed on '" + path + "'");
}

void save_embeddings_binary(const std::string& path, const EmbeddingData& data) {
  if (data.ids.size() != data.x.rows())
    throw std::invalid_argument("save embeddings: id count does not match rows");
  FilePtr f = open_file(path, "wb");
  put_bytes(f.get(), kMagic, 4, path);
  put_u32(f.get(), kVersion, path);
  put_u64(f.get(), data.x.rows(), path);
  put_u64(f.get(), data.x.cols(), path);
  for (std::size_t i = 0; i < data.x.rows(); ++i) {
    put_u32(f.get(), std::uint32_t(data.ids[i].size()), path);
    put_bytes(f.get(), data.ids[i].data(), data.ids[i].size(), path);
    for (std::size_t c = 0; c < data.x.cols(); ++c) put_f64(f.get(), data.x(i, c), path);
  }
}

RaggedData load_ragged(const std::string& path) {
  if (has_binary_magic(path))
    throw IoError("'" + path + "' is a fixed-width binary file, not ragged text");
  return load_text_rows(path);
}

Matrix normalize_dims(const std::vector<std::vector<double>>& rows,
                      bool trailing_fill) {
  if (rows.empty()) throw std::invalid_argument("normalize_dims: no rows");
  std::size_t width = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].empty())
      throw std::invalid_argument("normalize_dims: row " + std::to_string(i) +
                                  " is empty");
    width = std::max(width, rows[i].size());
  }

  // resample one row to `target` columns over its index range
  auto interp = [](const std::vector<double>& row, std::size_t target,
                   double* out) {
    const std::size_t m = row.size();
    if (target == 1 || m == 1) {
      for (std::size_t p = 0; p < target; ++p) out[p] = row[std::min(p, m - 1)];
      return;
    }
    for (std::size_t p = 0; p < target; ++p) {
      const double src = double(p) * double(m - 1) / double(target - 1);
      const std::size_t lo = std::min(std::size_t(src), m - 2);
      const double frac = src - double(lo);
      // exact grid hits keep the source value bit-for-bit; endpoints must
      // survive the resample unchanged
      if (frac == 0.0)
        out[p] = row[lo];
      else if (frac == 1.0)
        out[p] = row[lo + 1];
      else
        out[p] = row[lo] + frac * (row[lo + 1] - row[lo]);
    }
  };

  Matrix out(rows.size(), width);
  std::vector<double> buf(width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (trailing_fill && width >= 2) {
      interp(rows[i], width - 1, buf.data());
      buf[width - 1] = buf[width - 2];  // no successor to interpolate against
    } else {
      interp(rows[i], width, buf.data());
    }
    for (std::size_t c = 0; c < width; ++c) out(i, c) = buf[c];
  }
  return out;
}

namespace {

LabelsData densify(std::vector<std::string> ids, const std::vector<std::string>& raw,
                   const std::string& path) {
  LabelsData out;
  out.ids = std::move(ids);
  out.labels.reserve(raw.size());
  std::unordered_map<std::string, int> dense;
  for (const std::string& name : raw) {
    auto [it, inserted] = dense.insert({name, int(out.label_names.size())});
    if (inserted) out.label_names.push_back(name);
    out.labels.push_back(it->second);
  }
  check_unique_ids(out.ids, path);
  return out;
}

}  // namespace

LabelsData load_labels(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::vector<std::string> ids, raw;
  bool first_content = true;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (is_comment_or_blank(lines[ln])) continue;
    const std::vector<std::string> fields = split_csv_line(lines[ln]);
    if (fields.size() != 2)
      throw IoError("row " + std::to_string(ln) + " in '" + path +
                    "': expected two columns (id, label)");
    if (first_content) {
      first_content = false;
      std::string second = trim(fields[1]);
      std::transform(second.begin(), second.end(), second.begin(),
                     [](unsigned char c) { return char(std::tolower(c)); });
      if (second == "label" || second == "cluster") continue;  // header
    }
    ids.push_back(trim(fields[0]));
    raw.push_back(trim(fields[1]));
  }
  if (ids.empty()) throw IoError("'" + path + "' holds no label rows");
  return densify(std::move(ids), raw, path);
}

void save_labels(const std::string& path, const std::vector<std::string>& ids,
                 const std::vector<int>& labels) {
  if (ids.size() != labels.size())
    throw std::invalid_argument("save labels: id/label count mismatch");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "id,label\n";
  for (std::size_t i = 0; i < ids.size(); ++i)
    out << ids[i] << ',' << labels[i] << '\n';
  if (!out) throw IoError("write failed on '" + path + "'");
}

LabelsData load_cluster_records(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::size_t first = 0;
  while (first < lines.size() && is_comment_or_blank(lines[first])) ++first;
  if (first == lines.size()) throw IoError("'" + path + "' holds no records");

  // benchmark-style layout: header row naming a CID column
  const std::vector<std::string> head = split_csv_line(lines[first]);
  std::ptrdiff_t cid_col = -1, tid_col = -1;
  for (std::size_t i = 0; i < head.size(); ++i) {
    const std::string h = trim(head[i]);
    if (h == "CID") cid_col = std::ptrdiff_t(i);
    if (h == "TID") tid_col = std::ptrdiff_t(i);
  }
  if (cid_col < 0) return load_labels(path);

  std::vector<std::string> ids, raw;
  for (std::size_t ln = first + 1; ln < lines.size(); ++ln) {
    if (is_comment_or_blank(lines[ln])) continue;
    const std::vector<std::string> fields = split_csv_line(lines[ln]);
    if (fields.size() <= std::size_t(std::max(cid_col, tid_col)))
      throw IoError("row " + std::to_string(ln) + " in '" + path +
                    "' is missing the cluster column");
    ids.push_back(tid_col >= 0 ? trim(fields[tid_col])
                               : "row" + std::to_string(ln));
    raw.push_back(trim(fields[cid_col]));
  }
  if (ids.empty()) throw IoError("'" + path + "' holds no records");
  return densify(std::move(ids), raw, path);
}

SubsetResult subset_musicbrainz(const LabelsData& records, std::size_t target_n) {
  if (records.ids.size() != records.labels.size())
    throw std::invalid_argument("subset: id/label count mismatch");
  std::vector<std::size_t> counts;
  for (int label : records.labels) {
    if (label < 0) throw std::invalid_argument("subset: negative cluster id");
    if (std::size_t(label) >= counts.size()) counts.resize(label + 1, 0);
    ++counts[label];
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < records.labels.size(); ++i)
    if (counts[records.labels[i]] >= 2) keep.push_back(i);
  std::stable_sort(keep.begin(), keep.end(), [&](std::size_t a, std::size_t b) {
    return records.labels[a] < records.labels[b];
  });
  if (target_n > keep.size())
    throw std::invalid_argument(
        "subset: target_n " + std::to_string(target_n) + " exceeds the " +
        std::to_string(keep.size()) + " non-singleton records available");
  SubsetResult out;
  out.ids.reserve(target_n);
  out.labels.reserve(target_n);
  for (std::size_t i = 0; i < target_n; ++i) {
    out.ids.push_back(records.ids[keep[i]]);
    out.labels.push_back(records.labels[keep[i]]);
  }
  return out;
}

std::map<std::string, std::string> load_kv_file(const std::string& path) {
  const std::vector<std::string> lines = read_lines(path);
  std::map<std::string, std::string> kv;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (is_comment_or_blank(lines[ln])) continue;
    const std::size_t eq = lines[ln].find('=');
    if (eq == std::string::npos)
      throw IoError("line " + std::to_string(ln) + " in '" + path +
                    "' is not a key = value pair");
    const std::string key = trim(lines[ln].substr(0, eq));
    if (key.empty())
      throw IoError("line " + std::to_string(ln) + " in '" + path +
                    "' has an empty key");
    kv[key] = trim(lines[ln].substr(eq + 1));
  }
  return kv;
}

Manifest load_manifest(const std::string& path) {
  const std::map<std::string, std::string> kv = load_kv_file(path);
  auto require = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end() || it->second.empty())
      throw IoError("manifest '" + path + "' is missing '" + std::string(key) + "'");
    return it->second;
  };
  Manifest m;
  m.name = require("name");
  m.task = require("task");
  if (m.task != "schema_inference" && m.task != "entity_resolution" &&
      m.task != "domain_discovery")
    throw IoError("manifest '" + path + "': unknown task '" + m.task + "'");
  const std::string base = dirname_of(path);
  m.embeddings_path = resolve_relative(base, require("embeddings"));
  m.labels_path = resolve_relative(base, require("labels"));
  try {
    m.k = std::stoul(require("k"));
  } catch (const std::exception&) {
    throw IoError("manifest '" + path + "': 'k' is not a number");
  }
  if (m.k == 0) throw IoError("manifest '" + path + "': 'k' must be positive");
  if (auto it = kv.find("notes"); it != kv.end()) m.notes = it->second;
  return m;
}

void save_manifest(const std::string& path, const Manifest& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "name = " << m.name << '\n';
  out << "task = " << m.task << '\n';
  out << "embeddings = " << m.embeddings_path << '\n';
  out << "labels = " << m.labels_path << '\n';
  out << "k = " << m.k << '\n';
  if (!m.notes.empty()) out << "notes = " << m.notes << '\n';
  if (!out) throw IoError("write failed on '" + path + "'");
}

SynthData synth_blobs(std::size_t n, std::size_t d, std::size_t k, double spread,
                      std::uint64_t seed) {
  if (k == 0 || n == 0 || d == 0)
    throw std::invalid_argument("synth blobs: n, d, k must be positive");
  if (k > n) throw std::invalid_argument("synth blobs: k exceeds n");
  if (spread < 0.0) throw std::invalid_argument("synth blobs: negative spread");

  Rng rng(seed);
  const double min_sep = spread > 0.0 ? 10.0 * spread : 1.0;
  double box = min_sep * double(k);
  Matrix centers(k, d);
  std::vector<double> cand(d);
  for (std::size_t c = 0; c < k;) {
    bool placed = false;
    for (int attempt = 0; attempt < 64; ++attempt) {
      for (std::size_t j = 0; j < d; ++j) cand[j] = (rng.uniform() * 2.0 - 1.0) * box;
      bool ok = true;
      for (std::size_t prev = 0; prev < c && ok; ++prev) {
        double dist2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
          const double diff = cand[j] - centers(prev, j);
          dist2 += diff * diff;
        }
        ok = dist2 >= min_sep * min_sep;
      }
      if (ok) {
        for (std::size_t j = 0; j < d; ++j) centers(c, j) = cand[j];
        ++c;
        placed = true;
        break;
      }
    }
    if (!placed) box *= 1.5;  // crowded box, widen and retry
  }

  SynthData out;
  out.labels.reserve(n);
  out.data.ids.reserve(n);
  out.data.x = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = i % k;
    out.labels.push_back(int(label));
    out.data.ids.push_back("item" + std::to_string(i));
    for (std::size_t j = 0; j < d; ++j)
      out.data.x(i, j) = centers(label, j) + spread * rng.normal();
  }
  return out;
}

}  // namespace deepclust
