#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dpaf/net/config.hpp"
#include "dpaf/nn/blocks.hpp"

namespace dpaf::net {

/// The dual-path deraining network.
///
///   shallow = res(conv3x3(rainy))
///   cnn     = d x [stride-2 conv, res blocks]          (shallow -> H/2^d)
///   vit     = unembed(norm(blocks(embed(shallow) + pos)))  (same grid)
///   fused   = fuse(cnn, vit)
///   decoded = d x restoration layer                    (back to H x W)
///   merged  = conv3x3(concat(decoded, shallow))
///   output  = rainy + conv3x3(merged)
///
/// Parameter names are hierarchical ("cnn.stage0.res0.conv1.weight") and
/// their initial values depend only on (seed, name), so variants built
/// with the same seed share every common parameter.
template <typename T>
class Model {
 public:
  struct FusionCache {
    std::size_t cnn_channels = 0;
    typename nn::ResBlock<T>::Cache res0, res1;
    typename nn::ChannelAttention<T>::Cache attention;
    typename nn::Conv2d<T>::Cache proj;
  };

  struct Cache {
    typename nn::Conv2d<T>::Cache shallow_conv;
    typename nn::ResBlock<T>::Cache shallow_res;
    std::vector<typename nn::Conv2d<T>::Cache> down;
    std::vector<std::vector<typename nn::ResBlock<T>::Cache>> stage_res;
    typename nn::PatchEmbed<T>::Cache embed;
    std::vector<typename nn::TransformerBlock<T>::Cache> vit_blocks;
    typename nn::LayerNorm<T>::Cache vit_norm;
    typename nn::PatchUnembed<T>::Cache unembed;
    std::size_t grid_h = 0, grid_w = 0;
    FusionCache fusion;
    std::vector<typename nn::RestorationLayer<T>::Cache> decoder;
    std::size_t decoded_channels = 0;
    typename nn::Conv2d<T>::Cache merge, head;
  };

  /// Receives named intermediates during a forward pass.
  struct Recorder {
    std::set<std::string> wanted;
    std::map<std::string, Tensor<T>> captured;
    void record(const char* name, const Tensor<T>& t) {
      if (wanted.count(name) != 0) captured[name] = t;
    }
  };

  /// Throws ConfigError when the configuration is invalid.
  Model(const ModelConfig& config, std::uint64_t seed);

  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  const ModelConfig& config() const noexcept { return config_; }
  nn::ParamStore<T>& params() noexcept { return *store_; }
  const nn::ParamStore<T>& params() const noexcept { return *store_; }

  /// Training-mode forward: rainy + predicted residual, not clamped.
  /// Input is N x 3 x H x W with H, W divisible by 2^stages.
  Tensor<T> forward(const Tensor<T>& rainy, Cache* cache = nullptr,
                    Recorder* recorder = nullptr) const;
  /// forward() clamped to [0, 1].
  Tensor<T> infer(const Tensor<T>& rainy) const;
  /// Accumulates parameter gradients and returns the gradient w.r.t. the input.
  Tensor<T> backward(const Cache& cache, const Tensor<T>& dout) const;

  /// Fusion of the two branch outputs (each N x deep_channels x h x w). For
  /// the single-branch variants the present branch passes straight through.
  Tensor<T> fuse(const Tensor<T>& cnn_feat, const Tensor<T>& vit_feat,
                 FusionCache* cache = nullptr, Recorder* recorder = nullptr) const;
  /// Returns (d cnn_feat, d vit_feat).
  std::pair<Tensor<T>, Tensor<T>> fuse_backward(const FusionCache& cache,
                                                const Tensor<T>& dy) const;

  /// Probe names available for this variant, in pipeline order.
  std::vector<std::string> probe_names() const;
  /// Runs forward and returns the requested intermediates. Unknown probe
  /// names throw LookupError before any computation.
  std::map<std::string, Tensor<T>> capture_activations(const Tensor<T>& rainy,
                                                       const std::vector<std::string>& probes) const;

 private:
  void check_input(const Tensor<T>& rainy) const;
  Tensor<T> run_cnn(const Tensor<T>& shallow, Cache* cache) const;
  Tensor<T> run_vit(const Tensor<T>& shallow, Cache* cache, Recorder* recorder) const;
  Tensor<T> cnn_backward(const Cache& cache, Tensor<T> dy) const;
  Tensor<T> vit_backward(const Cache& cache, const Tensor<T>& dy) const;

  ModelConfig config_;
  std::unique_ptr<nn::ParamStore<T>> store_;

  std::unique_ptr<nn::Conv2d<T>> shallow_conv_;
  std::unique_ptr<nn::ResBlock<T>> shallow_res_;

  std::vector<nn::Conv2d<T>> down_;
  std::vector<std::vector<nn::ResBlock<T>>> stage_res_;

  std::unique_ptr<nn::PatchEmbed<T>> embed_;
  std::unique_ptr<nn::PositionalEmbedding<T>> pos_;
  std::vector<nn::TransformerBlock<T>> vit_blocks_;
  std::unique_ptr<nn::LayerNorm<T>> vit_norm_;
  std::unique_ptr<nn::PatchUnembed<T>> unembed_;

  std::unique_ptr<nn::ResBlock<T>> fuse_res0_, fuse_res1_;
  std::unique_ptr<nn::ChannelAttention<T>> fuse_attention_;
  std::unique_ptr<nn::Conv2d<T>> fuse_proj_;

  std::vector<nn::RestorationLayer<T>> decoder_;
  std::unique_ptr<nn::Conv2d<T>> merge_, head_;
};

}  // namespace dpaf::net
