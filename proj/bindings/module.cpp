// Python surface. Matrices cross the boundary as 2-D float64 numpy arrays;
// label vectors as int lists. Heavy calls drop the GIL while they run.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "deepclust/autoencoder.hpp"
#include "deepclust/clustering.hpp"
#include "deepclust/data_io.hpp"
#include "deepclust/dc_models.hpp"
#include "deepclust/harness.hpp"
#include "deepclust/matrix.hpp"
#include "deepclust/metrics.hpp"

namespace py = pybind11;
using namespace deepclust;

namespace {

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D float array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::memcpy(m.data().data(), a.data(), sizeof(double) * m.size());
  return m;
}

py::array_t<double> to_numpy(const Matrix& m) {
  py::array_t<double> a({m.rows(), m.cols()});
  std::memcpy(a.mutable_data(), m.data().data(), sizeof(double) * m.size());
  return a;
}

AEConfig make_ae_config(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                        std::size_t z, std::size_t epochs, double lr,
                        const std::string& activation, bool standardize,
                        std::size_t batch_size, std::uint64_t seed) {
  AEConfig cfg;
  cfg.input_dim = input_dim;
  cfg.hidden_sizes = hidden;
  cfg.latent_dim = z;
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  cfg.hidden_activation = activation_from_string(activation);
  cfg.standardize_input = standardize;
  cfg.batch_size = batch_size;
  cfg.seed = seed;
  return cfg;
}

py::dict report_to_dict(const MetricsReport& r) {
  py::dict d;
  d["gt_k"] = r.gt_k;
  d["predicted_k"] = r.predicted_k;
  d["mean_size"] = r.mean_size;
  d["median_size"] = r.median_size;
  d["unary"] = r.unary;
  d["seconds"] = r.seconds;
  d["ari"] = r.ari;
  d["acc"] = r.acc;
  d["pairs"] = py::make_tuple(r.pairs.tp, r.pairs.fp, r.pairs.tn, r.pairs.fn);
  return d;
}

py::dict train_output_to_dict(const TrainOutput& out) {
  py::dict d;
  d["labels"] = out.result.labels;
  d["k_predicted"] = out.result.k_predicted;
  d["seconds"] = out.result.seconds;
  d["trace_csv"] = trace_to_csv(out.trace);
  d["notes"] = out.trace.notes;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "deep clustering for data cleaning and integration";

  py::register_exception<IoError>(m, "IoError", PyExc_IOError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  // ---- data ----------------------------------------------------------
  m.def(
      "synth_blobs",
      [](std::size_t n, std::size_t d, std::size_t k, double spread,
         std::uint64_t seed) {
        SynthData s = synth_blobs(n, d, k, spread, seed);
        py::dict out;
        out["ids"] = s.data.ids;
        out["x"] = to_numpy(s.data.x);
        out["labels"] = s.labels;
        return out;
      },
      py::arg("n"), py::arg("d"), py::arg("k"), py::arg("spread") = 0.5,
      py::arg("seed") = 0, "seeded gaussian blobs with balanced labels");

  m.def(
      "load_embeddings",
      [](const std::string& path) {
        EmbeddingData d = load_embeddings(path);
        return py::make_tuple(d.ids, to_numpy(d.x));
      },
      py::arg("path"), "(ids, x) from a text or binary embedding file");

  m.def(
      "save_embeddings_text",
      [](const std::string& path, const std::vector<std::string>& ids,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        EmbeddingData d{ids, to_matrix(x)};
        save_embeddings_text(path, d);
      },
      py::arg("path"), py::arg("ids"), py::arg("x"));

  m.def(
      "normalize_dims",
      [](const std::vector<std::vector<double>>& rows, bool trailing_fill) {
        return to_numpy(normalize_dims(rows, trailing_fill));
      },
      py::arg("rows"), py::arg("trailing_fill") = false,
      "resample ragged rows to the max width by linear interpolation");

  m.def(
      "load_labels",
      [](const std::string& path) {
        LabelsData d = load_labels(path);
        return py::make_tuple(d.ids, d.labels);
      },
      py::arg("path"));

  m.def("save_labels", &save_labels, py::arg("path"), py::arg("ids"),
        py::arg("labels"));

  m.def(
      "load_cluster_records",
      [](const std::string& path) {
        LabelsData d = load_cluster_records(path);
        return py::make_tuple(d.ids, d.labels);
      },
      py::arg("path"), "(ids, labels) from a plain or TID/CID benchmark file");

  m.def(
      "subset_musicbrainz",
      [](const std::vector<std::string>& ids, const std::vector<int>& labels,
         std::size_t target_n) {
        LabelsData records;
        records.ids = ids;
        records.labels = labels;
        SubsetResult r = subset_musicbrainz(records, target_n);
        return py::make_tuple(r.ids, r.labels);
      },
      py::arg("ids"), py::arg("labels"), py::arg("target_n"),
      "drop singletons, sort by cluster, keep the first target_n records");

  // ---- classic clustering ---------------------------------------------
  m.def(
      "kmeans",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         std::size_t k, std::uint64_t seed, std::size_t max_iters, double tol) {
        Matrix xm = to_matrix(x);
        KMeansConfig cfg;
        cfg.k = k;
        cfg.seed = seed;
        cfg.max_iters = max_iters;
        cfg.tol = tol;
        KMeansOutput out;
        {
          py::gil_scoped_release nogil;
          out = kmeans(xm, cfg);
        }
        py::dict d;
        d["labels"] = out.result.labels;
        d["k_predicted"] = out.result.k_predicted;
        d["centers"] = to_numpy(out.centers);
        d["inertia"] = out.inertia;
        d["inertia_trace"] = out.inertia_trace;
        return d;
      },
      py::arg("x"), py::arg("k"), py::arg("seed") = 0, py::arg("max_iters") = 100,
      py::arg("tol") = 1e-6);

  m.def(
      "birch",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         std::size_t k, std::size_t branching, double threshold) {
        Matrix xm = to_matrix(x);
        ClusteringResult r;
        {
          py::gil_scoped_release nogil;
          r = birch(xm, k, branching, threshold);
        }
        py::dict d;
        d["labels"] = r.labels;
        d["k_predicted"] = r.k_predicted;
        return d;
      },
      py::arg("x"), py::arg("k"), py::arg("branching") = 50,
      py::arg("threshold") = 0.0, "threshold 0 picks the pilot heuristic");

  m.def(
      "silhouette",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         const std::vector<int>& labels) {
        Matrix xm = to_matrix(x);
        py::gil_scoped_release nogil;
        return silhouette(xm, labels);
      },
      py::arg("x"), py::arg("labels"));

  // ---- autoencoder ----------------------------------------------------
  m.def(
      "pretrain",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         const std::vector<std::size_t>& hidden, std::size_t z, std::size_t epochs,
         double lr, const std::string& activation, bool standardize,
         std::size_t batch_size, std::uint64_t seed) {
        Matrix xm = to_matrix(x);
        AEConfig cfg = make_ae_config(xm.cols(), hidden, z, epochs, lr, activation,
                                      standardize, batch_size, seed);
        PretrainResult r;
        Matrix h;
        {
          py::gil_scoped_release nogil;
          r = pretrain(xm, cfg);
          h = encode(cfg.standardize_input ? deepclust::standardize(xm) : xm,
                     r.params);
        }
        py::dict d;
        d["h"] = to_numpy(h);
        d["loss_trace"] = r.loss_trace;
        return d;
      },
      py::arg("x"), py::arg("hidden") = std::vector<std::size_t>{1000, 1000},
      py::arg("z") = 100, py::arg("epochs") = 30, py::arg("lr") = 1e-3,
      py::arg("activation") = "relu", py::arg("standardize") = true,
      py::arg("batch_size") = 0, py::arg("seed") = 0,
      "train an autoencoder, return the latent rows and the loss trace");

  // ---- deep clustering --------------------------------------------------
  auto dc_config =
      [](const Matrix& x, std::size_t k, const std::vector<std::size_t>& hidden,
         std::size_t z, std::size_t epochs, std::size_t pretrain_epochs, double lr,
         double pretrain_lr, std::size_t knn_k, const std::string& kernel,
         double heat_t, double alpha, double beta, double gamma, double epsilon,
         std::size_t d_sub, double eta, bool predict_from_q, std::uint64_t seed) {
        DCConfig cfg;
        cfg.ae.input_dim = x.cols();
        cfg.ae.hidden_sizes = hidden;
        cfg.ae.latent_dim = z;
        cfg.ae.epochs = pretrain_epochs;
        cfg.ae.learning_rate = pretrain_lr;
        cfg.ae.seed = seed;
        cfg.k = k;
        cfg.epochs = epochs;
        cfg.lr = lr;
        cfg.knn_k = knn_k;
        cfg.kernel = kernel == "dot" ? DCConfig::Kernel::dot : DCConfig::Kernel::heat;
        cfg.heat_t = heat_t;
        cfg.alpha = alpha;
        cfg.beta = beta;
        cfg.gamma = gamma;
        cfg.epsilon = epsilon;
        cfg.d_sub = d_sub;
        cfg.eta = eta;
        cfg.predict_from_q = predict_from_q;
        cfg.seed = seed;
        return cfg;
      };

#define DC_ARGS                                                                   \
  py::arg("x"), py::arg("k"), py::arg("hidden") = std::vector<std::size_t>{1000,  \
                                                                           1000}, \
      py::arg("z") = 100, py::arg("epochs") = 50, py::arg("pretrain_epochs") = 30, \
      py::arg("lr") = 1e-3, py::arg("pretrain_lr") = 1e-3, py::arg("knn_k") = 5,  \
      py::arg("kernel") = "heat", py::arg("heat_t") = 0.0, py::arg("alpha") = 0.1, \
      py::arg("beta") = 0.01, py::arg("gamma") = 0.1, py::arg("epsilon") = 0.5,   \
      py::arg("d_sub") = 5, py::arg("eta") = 1e-4,                                \
      py::arg("predict_from_q") = false, py::arg("seed") = 0

  m.def(
      "sdcn",
      [dc_config](
          const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
          std::size_t k, const std::vector<std::size_t>& hidden, std::size_t z,
          std::size_t epochs, std::size_t pretrain_epochs, double lr,
          double pretrain_lr, std::size_t knn_k, const std::string& kernel,
          double heat_t, double alpha, double beta, double gamma, double epsilon,
          std::size_t d_sub, double eta, bool predict_from_q, std::uint64_t seed) {
        Matrix xm = to_matrix(x);
        DCConfig cfg = dc_config(xm, k, hidden, z, epochs, pretrain_epochs, lr,
                                 pretrain_lr, knn_k, kernel, heat_t, alpha, beta,
                                 gamma, epsilon, d_sub, eta, predict_from_q, seed);
        TrainOutput out;
        {
          py::gil_scoped_release nogil;
          out = sdcn_train(xm, cfg);
        }
        return train_output_to_dict(out);
      },
      DC_ARGS, "GCN-assisted deep clustering; labels from the best-silhouette epoch");

  m.def(
      "edesc",
      [dc_config](
          const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
          std::size_t k, const std::vector<std::size_t>& hidden, std::size_t z,
          std::size_t epochs, std::size_t pretrain_epochs, double lr,
          double pretrain_lr, std::size_t knn_k, const std::string& kernel,
          double heat_t, double alpha, double beta, double gamma, double epsilon,
          std::size_t d_sub, double eta, bool predict_from_q, std::uint64_t seed) {
        Matrix xm = to_matrix(x);
        DCConfig cfg = dc_config(xm, k, hidden, z, epochs, pretrain_epochs, lr,
                                 pretrain_lr, knn_k, kernel, heat_t, alpha, beta,
                                 gamma, epsilon, d_sub, eta, predict_from_q, seed);
        TrainOutput out;
        {
          py::gil_scoped_release nogil;
          out = edesc_train(xm, cfg);
        }
        return train_output_to_dict(out);
      },
      DC_ARGS, "subspace-basis deep clustering; z must equal k * d_sub");

  m.def(
      "ae_birch",
      [dc_config](
          const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
          std::size_t k, const std::vector<std::size_t>& hidden, std::size_t z,
          std::size_t epochs, std::size_t pretrain_epochs, double lr,
          double pretrain_lr, std::size_t knn_k, const std::string& kernel,
          double heat_t, double alpha, double beta, double gamma, double epsilon,
          std::size_t d_sub, double eta, bool predict_from_q, std::uint64_t seed) {
        Matrix xm = to_matrix(x);
        DCConfig cfg = dc_config(xm, k, hidden, z, epochs, pretrain_epochs, lr,
                                 pretrain_lr, knn_k, kernel, heat_t, alpha, beta,
                                 gamma, epsilon, d_sub, eta, predict_from_q, seed);
        TrainOutput out;
        {
          py::gil_scoped_release nogil;
          out = ae_birch_pipeline(xm, cfg);
        }
        return train_output_to_dict(out);
      },
      DC_ARGS, "pretrain, encode, cluster the latent rows with birch");

#undef DC_ARGS

  m.def(
      "soft_assignment_q",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& centers,
         double v) { return to_numpy(soft_assignment_q(to_matrix(h), to_matrix(centers), v)); },
      py::arg("h"), py::arg("centers"), py::arg("v") = 1.0);

  m.def(
      "target_distribution_p",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& q) {
        return to_numpy(target_distribution_p(to_matrix(q)));
      },
      py::arg("q"));

  m.def(
      "refined_affinity",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& s) {
        return to_numpy(refined_affinity(to_matrix(s)));
      },
      py::arg("s"));

  // ---- metrics ----------------------------------------------------------
  m.def("ari", &ari, py::arg("gt"), py::arg("pred"));
  m.def("acc", &acc, py::arg("gt"), py::arg("pred"));

  m.def(
      "hungarian",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& cost) {
        return hungarian(to_matrix(cost));
      },
      py::arg("cost"), "row -> column assignment minimizing total cost");

  m.def(
      "pair_counts",
      [](const std::vector<int>& gt, const std::vector<int>& pred) {
        PairCounts p = pair_counts(gt, pred);
        return py::make_tuple(p.tp, p.fp, p.tn, p.fn);
      },
      py::arg("gt"), py::arg("pred"), "(tp, fp, tn, fn) over unordered pairs");

  m.def(
      "cluster_stats",
      [](const std::vector<int>& labels) {
        ClusterStats s = cluster_stats(labels);
        py::dict d;
        d["k"] = s.k;
        d["mean_size"] = s.mean_size;
        d["median_size"] = s.median_size;
        d["unary"] = s.unary;
        d["largest"] = s.largest;
        return d;
      },
      py::arg("labels"));

  m.def(
      "evaluate",
      [](const std::vector<int>& gt, const std::vector<int>& pred, double seconds) {
        return report_to_dict(evaluate(gt, pred, seconds));
      },
      py::arg("gt"), py::arg("pred"), py::arg("seconds") = 0.0,
      "full report: ARI, ACC, pair counts, cluster shape");

  // ---- harness ------------------------------------------------------------
  m.def(
      "run_experiment",
      [](const std::string& manifest, const std::string& algorithm,
         const py::kwargs& kwargs) {
        ExperimentConfig cfg;
        cfg.manifest = manifest;
        cfg.algorithm = algorithm;
        std::map<std::string, std::string> kv;
        for (const auto& item : kwargs)
          kv[static_cast<std::string>(py::str(item.first))] =
              static_cast<std::string>(py::str(item.second));
        apply_kv(cfg, kv);
        RunRecord rec;
        {
          py::gil_scoped_release nogil;
          rec = run_experiment(cfg);
        }
        py::dict d;
        d["dataset"] = rec.dataset;
        d["task"] = rec.task;
        d["algorithm"] = rec.config.algorithm;
        d["report"] = report_to_dict(rec.report);
        d["labels_path"] = rec.labels_path;
        d["trace_path"] = rec.trace_path;
        d["time_total"] = rec.time_total;
        return d;
      },
      py::arg("manifest"), py::arg("algorithm") = "sdcn",
      "load -> train -> evaluate -> persist; extra kwargs override config keys");
}
