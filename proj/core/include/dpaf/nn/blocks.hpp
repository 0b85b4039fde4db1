#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpaf/nn/ops.hpp"
#include "dpaf/nn/params.hpp"

// Trainable building blocks. Each block registers its parameters in a
// ParamStore at construction, and exposes
//   forward(x, cache*)      -- cache may be null for inference
//   backward(cache, dy)     -- returns dx, accumulates into Param::grad
// Blocks are immutable apart from their parameter values, so one block can
// run several forwards concurrently as long as each uses its own cache.
namespace dpaf::nn {

template <typename T>
class Conv2d {
 public:
  struct Cache {
    Tensor<T> input;
  };

  Conv2d(ParamStore<T>& store, const std::string& name, std::size_t in_channels,
         std::size_t out_channels, std::size_t kernel, ConvGeometry geometry, std::uint64_t seed,
         bool with_bias = true);

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr) const;
  /// Skips the input gradient when `input_grad` is false (returns empty).
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy, bool input_grad = true) const;

  Param<T>& weight() const { return *weight_; }
  Param<T>* bias() const { return bias_; }
  std::size_t out_channels() const { return weight_->value.dim(0); }

 private:
  Param<T>* weight_;
  Param<T>* bias_ = nullptr;
  ConvGeometry geometry_;
};

/// y = conv3x3(relu(conv3x3(x))) + x
template <typename T>
class ResBlock {
 public:
  struct Cache {
    typename Conv2d<T>::Cache conv1, conv2;
    Tensor<T> hidden;  // pre-activation
  };

  ResBlock(ParamStore<T>& store, const std::string& name, std::size_t channels,
           std::uint64_t seed);

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const;

  std::size_t channels() const { return channels_; }
  Conv2d<T>& conv1() { return conv1_; }
  Conv2d<T>& conv2() { return conv2_; }

 private:
  std::size_t channels_;
  Conv2d<T> conv1_, conv2_;
};

/// F' = M_c(F) * F with M_c = sigmoid(W1 relu(W0 avg(F)) + W1 relu(W0 max(F))).
/// W0 is (C/r) x C and W1 is C x (C/r), shared by both pooled paths.
template <typename T>
class ChannelAttention {
 public:
  struct Cache {
    Tensor<T> input;
    Tensor<T> avg, max;          // N x C
    std::vector<std::size_t> argmax;
    Tensor<T> hidden_avg, hidden_max;  // W0 outputs before relu, N x C/r
    Tensor<T> gate;              // N x C
  };

  ChannelAttention(ParamStore<T>& store, const std::string& name, std::size_t channels,
                   std::size_t reduction, std::uint64_t seed);

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const;

  /// The N x C gate M_c(F) alone.
  Tensor<T> gate(const Tensor<T>& x) const;

  Param<T>& w0() const { return *w0_; }
  Param<T>& w1() const { return *w1_; }

 private:
  Param<T>* w0_;
  Param<T>* w1_;
};

template <typename T>
class Linear {
 public:
  struct Cache {
    Tensor<T> input;
  };

  Linear(ParamStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
         std::uint64_t seed, bool with_bias = true);

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const;

  Param<T>& weight() const { return *weight_; }
  Param<T>* bias() const { return bias_; }

 private:
  Param<T>* weight_;
  Param<T>* bias_ = nullptr;
};

template <typename T>
class LayerNorm {
 public:
  struct Cache {
    Tensor<T> input;
    LayerNormStats<T> stats;
  };

  static constexpr double kEps = 1e-5;

  LayerNorm(ParamStore<T>& store, const std::string& name, std::size_t features);

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const;

 private:
  Param<T>* gamma_;
  Param<T>* beta_;
};

/// Multi-head self-attention over N x n x d tokens (rank-2 n x d is taken as N = 1).
/// The key projection has no bias: a key offset shifts every logit of a query
/// by the same amount, which softmax ignores.
template <typename T>
class MultiHeadAttention {
 public:
  struct Cache {
    Shape input_shape;
    typename Linear<T>::Cache q_in, k_in, v_in, o_in;
    Tensor<T> q, k, v;
    std::vector<Tensor<T>> probs;  // per (batch, head)
  };

  MultiHeadAttention(ParamStore<T>& store, const std::string& name, std::size_t d_model,
                     std::size_t heads, std::uint64_t seed);

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const;

  std::size_t heads() const { return heads_; }
  Linear<T>& query() { return q_; }
  Linear<T>& key() { return k_; }
  Linear<T>& value() { return v_; }
  Linear<T>& output() { return o_; }

 private:
  std::size_t d_model_, heads_;
  Linear<T> q_, k_, v_, o_;
};

/// Pre-norm transformer block:
///   y = x + MSA(LN1(x));  out = y + fc2(gelu(fc1(LN2(y))))
template <typename T>
class TransformerBlock {
 public:
  struct Cache {
    typename LayerNorm<T>::Cache ln1, ln2;
    typename MultiHeadAttention<T>::Cache attn;
    typename Linear<T>::Cache fc1, fc2;
    Tensor<T> hidden;  // fc1 output before gelu
  };

  TransformerBlock(ParamStore<T>& store, const std::string& name, std::size_t d_model,
                   std::size_t heads, std::size_t mlp_ratio, std::uint64_t seed);

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const;

  MultiHeadAttention<T>& attention() { return attn_; }
  Linear<T>& fc2() { return fc2_; }

 private:
  LayerNorm<T> ln1_, ln2_;
  MultiHeadAttention<T> attn_;
  Linear<T> fc1_, fc2_;
};

/// N x C x H x W -> N x (H/p * W/p) x (C p^2); tokens in raster order, each
/// token laid out as (channel, row-in-patch, column-in-patch).
template <typename T>
Tensor<T> patchify(const Tensor<T>& x, std::size_t patch);

/// Inverse of patchify for a grid of grid_h x grid_w tokens.
template <typename T>
Tensor<T> unpatchify(const Tensor<T>& tokens, std::size_t channels, std::size_t grid_h,
                     std::size_t grid_w, std::size_t patch);

template <typename T>
class PatchEmbed {
 public:
  struct Cache {
    Shape input_shape;
    typename Linear<T>::Cache proj;
  };

  PatchEmbed(ParamStore<T>& store, const std::string& name, std::size_t in_channels,
             std::size_t patch, std::size_t d_model, std::uint64_t seed);

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const;

  std::size_t patch() const { return patch_; }
  Linear<T>& projection() { return proj_; }

 private:
  std::size_t in_channels_, patch_;
  Linear<T> proj_;
};

/// Projects each token to an out_patch x out_patch tile of out_channels and
/// folds the tiles back into a feature map.
template <typename T>
class PatchUnembed {
 public:
  struct Cache {
    typename Linear<T>::Cache proj;
  };

  PatchUnembed(ParamStore<T>& store, const std::string& name, std::size_t d_model,
               std::size_t out_channels, std::size_t out_patch, std::uint64_t seed);

  Tensor<T> forward(const Tensor<T>& tokens, std::size_t grid_h, std::size_t grid_w,
                    Cache* cache = nullptr) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const;

 private:
  std::size_t out_channels_, out_patch_;
  Linear<T> proj_;
};

/// Learned additive embeddings on a grid x grid token lattice. Other token
/// grids read the lattice by nearest-neighbour index (src = i * grid / grid_h).
template <typename T>
class PositionalEmbedding {
 public:
  PositionalEmbedding(ParamStore<T>& store, const std::string& name, std::size_t grid,
                      std::size_t d_model, std::uint64_t seed);

  Tensor<T> forward(const Tensor<T>& tokens, std::size_t grid_h, std::size_t grid_w) const;
  /// Returns dtokens (= dy) and accumulates the embedding gradient.
  Tensor<T> backward(const Tensor<T>& dy, std::size_t grid_h, std::size_t grid_w) const;

  Param<T>& table() const { return *table_; }

 private:
  std::size_t lattice_index(std::size_t i, std::size_t j, std::size_t gh, std::size_t gw) const;

  std::size_t grid_;
  Param<T>* table_;
};

/// bilinear x2 -> conv3x3 -> gelu -> conv3x3
template <typename T>
class RestorationLayer {
 public:
  struct Cache {
    Shape input_shape;
    typename Conv2d<T>::Cache conv1, conv2;
    Tensor<T> hidden;
  };

  RestorationLayer(ParamStore<T>& store, const std::string& name, std::size_t in_channels,
                   std::size_t out_channels, std::uint64_t seed);

  Tensor<T> forward(const Tensor<T>& x, Cache* cache = nullptr) const;
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dy) const;

 private:
  Conv2d<T> conv1_, conv2_;
};

}  // namespace dpaf::nn
