#include "deepclust/autoencoder.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "deepclust/rng.hpp"
#include "deepclust/tape.hpp"

namespace deepclust {

namespace {

void validate_config(const AEConfig& c) {
  if (c.input_dim == 0) throw std::invalid_argument("autoencoder: input_dim must be >= 1");
  if (c.latent_dim == 0) throw std::invalid_argument("autoencoder: latent size must be >= 1");
  for (std::size_t s : c.hidden_sizes)
    if (s == 0) throw std::invalid_argument("autoencoder: layer sizes must be positive");
}

// Shape chain d -> hiddens -> z for the encoder; reversed for the decoder.
std::vector<std::size_t> encoder_chain(const AEConfig& c) {
  std::vector<std::size_t> chain;
  chain.push_back(c.input_dim);
  for (std::size_t s : c.hidden_sizes) chain.push_back(s);
  chain.push_back(c.latent_dim);
  return chain;
}

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (auto& v : w.data()) v = rng.uniform(-limit, limit);
  return w;
}

Matrix forward_stack(const Matrix& x, const std::vector<Matrix>& ws,
                     const std::vector<Matrix>& bs, Activation hidden,
                     const char* what) {
  if (x.cols() != ws.front().rows())
    detail::throw_shape(what, x.shape_str() + " into layer " + ws.front().shape_str());
  Matrix cur = x;
  for (std::size_t l = 0; l < ws.size(); ++l) {
    Matrix lin = matmul(cur, ws[l]);
    for (std::size_t i = 0; i < lin.rows(); ++i)
      for (std::size_t j = 0; j < lin.cols(); ++j) lin(i, j) += bs[l](0, j);
    // last layer of either stack is linear
    cur = (l + 1 == ws.size()) ? std::move(lin) : apply_activation(lin, hidden);
  }
  return cur;
}

}  // namespace

AutoencoderParams init_params(const AEConfig& config) {
  validate_config(config);
  Rng rng(config.seed);
  const auto chain = encoder_chain(config);
  AutoencoderParams p;
  p.hidden_activation = config.hidden_activation;
  for (std::size_t l = 0; l + 1 < chain.size(); ++l) {
    p.enc_w.push_back(glorot(chain[l], chain[l + 1], rng));
    p.enc_b.emplace_back(1, chain[l + 1]);
  }
  for (std::size_t l = chain.size() - 1; l > 0; --l) {
    p.dec_w.push_back(glorot(chain[l], chain[l - 1], rng));
    p.dec_b.emplace_back(1, chain[l - 1]);
  }
  return p;
}

Matrix encode(const Matrix& x, const AutoencoderParams& params) {
  return forward_stack(x, params.enc_w, params.enc_b, params.hidden_activation,
                       "encode");
}

Matrix decode(const Matrix& h, const AutoencoderParams& params) {
  return forward_stack(h, params.dec_w, params.dec_b, params.hidden_activation,
                       "decode");
}

PretrainResult pretrain(const Matrix& x, const AEConfig& config) {
  validate_config(config);
  if (config.epochs == 0) throw std::invalid_argument("pretrain: epochs must be >= 1");
  if (x.cols() != config.input_dim)
    detail::throw_shape("pretrain", x.shape_str() + " vs input_dim " +
                                        std::to_string(config.input_dim));
  const Matrix xs = config.standardize_input ? standardize(x) : x;
  PretrainResult out;
  out.params = init_params(config);
  AutoencoderParams& p = out.params;

  std::vector<Matrix*> param_ptrs;
  for (std::size_t l = 0; l < p.enc_w.size(); ++l) {
    param_ptrs.push_back(&p.enc_w[l]);
    param_ptrs.push_back(&p.enc_b[l]);
  }
  for (std::size_t l = 0; l < p.dec_w.size(); ++l) {
    param_ptrs.push_back(&p.dec_w[l]);
    param_ptrs.push_back(&p.dec_b[l]);
  }

  const std::size_t n = xs.rows();
  const std::size_t batch =
      (config.batch_size == 0 || config.batch_size >= n) ? n : config.batch_size;
  Rng shuffle_rng(Rng::mix(config.seed, 0x70726574u));  // batching stream
  AdamState adam;

  auto step = [&](const Matrix& xb) {
    GradientTape t;
    auto xv = t.constant(xb);
    std::vector<GradientTape::Var> pv;
    for (Matrix* m : param_ptrs) pv.push_back(t.param(*m));
    auto cur = xv;
    std::size_t vi = 0;
    for (std::size_t l = 0; l < p.enc_w.size(); ++l, vi += 2) {
      auto lin = t.affine(cur, pv[vi], pv[vi + 1]);
      cur = (l + 1 == p.enc_w.size()) ? lin : t.act(lin, p.hidden_activation);
    }
    for (std::size_t l = 0; l < p.dec_w.size(); ++l, vi += 2) {
      auto lin = t.affine(cur, pv[vi], pv[vi + 1]);
      cur = (l + 1 == p.dec_w.size()) ? lin : t.act(lin, p.hidden_activation);
    }
    auto loss = t.mse_against(xb, cur);
    const double loss_val = t.value(loss)(0, 0);
    t.backward(loss);
    std::vector<Matrix> grads;
    for (auto v : pv) grads.push_back(t.grad(v));
    adam_step(param_ptrs, grads, adam, config.learning_rate);
    return loss_val;
  };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_loss;
    if (batch == n) {
      epoch_loss = step(xs);
    } else {
      shuffle_rng.shuffle(order);
      double sum = 0.0;
      std::size_t n_batches = 0;
      for (std::size_t start = 0; start < n; start += batch, ++n_batches) {
        const std::size_t stop = std::min(start + batch, n);
        Matrix xb(stop - start, xs.cols());
        for (std::size_t r = start; r < stop; ++r)
          std::copy(xs.row(order[r]), xs.row(order[r]) + xs.cols(),
                    xb.row(r - start));
        sum += step(xb);
      }
      epoch_loss = sum / static_cast<double>(n_batches);
    }
    if (!std::isfinite(epoch_loss))
      throw DivergenceError("pretrain diverged at epoch " + std::to_string(epoch) +
                            ": loss is non-finite");
    out.loss_trace.push_back(epoch_loss);
  }
  return out;
}

namespace {

void put_u32(std::FILE* f, std::uint32_t v) { std::fwrite(&v, 4, 1, f); }
void put_u64(std::FILE* f, std::uint64_t v) { std::fwrite(&v, 8, 1, f); }
void put_f64(std::FILE* f, double v) { std::fwrite(&v, 8, 1, f); }

std::uint32_t get_u32(std::FILE* f) {
  std::uint32_t v;
  if (std::fread(&v, 4, 1, f) != 1) throw IoError("checkpoint: truncated file");
  return v;
}
std::uint64_t get_u64(std::FILE* f) {
  std::uint64_t v;
  if (std::fread(&v, 8, 1, f) != 1) throw IoError("checkpoint: truncated file");
  return v;
}
double get_f64(std::FILE* f) {
  double v;
  if (std::fread(&v, 8, 1, f) != 1) throw IoError("checkpoint: truncated file");
  return v;
}

void put_matrix(std::FILE* f, const Matrix& m) {
  put_u64(f, m.rows());
  put_u64(f, m.cols());
  std::fwrite(m.data().data(), 8, m.size(), f);
}

Matrix get_matrix(std::FILE* f) {
  const std::uint64_t rows = get_u64(f), cols = get_u64(f);
  Matrix m(rows, cols);
  if (m.size() != 0 && std::fread(m.data().data(), 8, m.size(), f) != m.size())
    throw IoError("checkpoint: truncated matrix data");
  return m;
}

constexpr char kMagic[4] = {'D', 'C', 'A', 'E'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const std::string& path, const AEConfig& config,
                     const AutoencoderParams& params) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("checkpoint: cannot open for writing: " + path);
  std::fwrite(kMagic, 1, 4, f);
  put_u32(f, kVersion);
  put_u64(f, config.input_dim);
  put_u64(f, config.hidden_sizes.size());
  for (std::size_t s : config.hidden_sizes) put_u64(f, s);
  put_u64(f, config.latent_dim);
  put_u32(f, static_cast<std::uint32_t>(config.hidden_activation));
  put_u64(f, config.epochs);
  put_f64(f, config.learning_rate);
  put_u64(f, config.seed);
  put_u32(f, config.standardize_input ? 1 : 0);
  put_u64(f, config.batch_size);
  put_u32(f, static_cast<std::uint32_t>(params.hidden_activation));
  put_u64(f, params.enc_w.size());
  for (std::size_t l = 0; l < params.enc_w.size(); ++l) {
    put_matrix(f, params.enc_w[l]);
    put_matrix(f, params.enc_b[l]);
  }
  put_u64(f, params.dec_w.size());
  for (std::size_t l = 0; l < params.dec_w.size(); ++l) {
    put_matrix(f, params.dec_w[l]);
    put_matrix(f, params.dec_b[l]);
  }
  if (std::fclose(f) != 0) throw IoError("checkpoint: write failed: " + path);
}

std::pair<AEConfig, AutoencoderParams> load_checkpoint(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("checkpoint: cannot open: " + path);
  struct Closer {
    std::FILE* f;
    ~Closer() { std::fclose(f); }
  } closer{f};
  char magic[4];
  if (std::fread(magic, 1, 4, f) != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw IoError("checkpoint: bad magic in " + path);
  if (get_u32(f) != kVersion) throw IoError("checkpoint: unsupported version in " + path);
  AEConfig c;
  c.input_dim = get_u64(f);
  const std::uint64_t nh = get_u64(f);
  c.hidden_sizes.clear();
  for (std::uint64_t i = 0; i < nh; ++i) c.hidden_sizes.push_back(get_u64(f));
  c.latent_dim = get_u64(f);
  c.hidden_activation = static_cast<Activation>(get_u32(f));
  c.epochs = get_u64(f);
  c.learning_rate = get_f64(f);
  c.seed = get_u64(f);
  c.standardize_input = get_u32(f) != 0;
  c.batch_size = get_u64(f);
  AutoencoderParams p;
  p.hidden_activation = static_cast<Activation>(get_u32(f));
  const std::uint64_t ne = get_u64(f);
  for (std::uint64_t l = 0; l < ne; ++l) {
    p.enc_w.push_back(get_matrix(f));
    p.enc_b.push_back(get_matrix(f));
  }
  const std::uint64_t nd = get_u64(f);
  for (std::uint64_t l = 0; l < nd; ++l) {
    p.dec_w.push_back(get_matrix(f));
    p.dec_b.push_back(get_matrix(f));
  }
  return {std::move(c), std::move(p)};
}

}  // namespace deepclust
