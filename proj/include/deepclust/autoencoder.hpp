#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "deepclust/matrix.hpp"

namespace deepclust {

struct AEConfig {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_sizes = {1000, 1000};
  std::size_t latent_dim = 100;
  Activation hidden_activation = Activation::relu;
  std::size_t epochs = 30;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  bool standardize_input = true;
  std::size_t batch_size = 0;  // 0 = full batch
};

// Layer stacks. Encoder runs input_dim -> hidden_sizes... -> latent_dim,
// decoder mirrors it back. Biases are stored as 1 x fan_out rows.
struct AutoencoderParams {
  std::vector<Matrix> enc_w, enc_b;
  std::vector<Matrix> dec_w, dec_b;
  Activation hidden_activation = Activation::relu;
};

// Xavier/Glorot-uniform weights, zero biases, drawn in fixed layer order
// from the config seed.
AutoencoderParams init_params(const AEConfig& config);

// Hidden layers use the stored activation; the latent layer is linear.
Matrix encode(const Matrix& x, const AutoencoderParams& params);

// Mirror of encode; the reconstruction layer is linear.
Matrix decode(const Matrix& h, const AutoencoderParams& params);

struct PretrainResult {
  AutoencoderParams params;
  std::vector<double> loss_trace;  // one reconstruction-loss value per epoch
};

// Minimizes the mean squared reconstruction loss with Adam. Throws
// DivergenceError naming the epoch if the loss goes non-finite.
PretrainResult pretrain(const Matrix& x, const AEConfig& config);

// Versioned binary dump of config + all parameter matrices; round-trips
// bitwise. Format: magic "DCAE", u32 version, config fields, then the four
// layer stacks as (rows, cols, row-major f64 data) records. Little-endian.
void save_checkpoint(const std::string& path, const AEConfig& config,
                     const AutoencoderParams& params);
std::pair<AEConfig, AutoencoderParams> load_checkpoint(const std::string& path);

}  // namespace deepclust
