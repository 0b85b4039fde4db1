#include "dpaf/net/model.hpp"

#include <algorithm>

#include "dpaf/errors.hpp"

namespace dpaf::net {

namespace {

std::string indexed(const std::string& prefix, std::size_t i) { return prefix + std::to_string(i); }

}  // namespace

template <typename T>
Model<T>::Model(const ModelConfig& config, std::uint64_t seed)
    : config_(config), store_(std::make_unique<nn::ParamStore<T>>()) {
  config_.validate();
  auto& s = *store_;
  const std::size_t base = config_.base_channels;
  const std::size_t deep = config_.deep_channels();

  shallow_conv_ = std::make_unique<nn::Conv2d<T>>(s, "shallow.conv", 3, base, 3, nn::ConvGeometry{1, 1}, seed);
  shallow_res_ = std::make_unique<nn::ResBlock<T>>(s, "shallow.res", base, seed);

  if (config_.has_cnn_branch()) {
    std::size_t width = base;
    for (std::size_t st = 0; st < config_.stages; ++st) {
      const std::string stage = indexed("cnn.stage", st);
      down_.emplace_back(s, stage + ".down", width, width * 2, 3, nn::ConvGeometry{2, 1}, seed);
      width *= 2;
      auto& blocks = stage_res_.emplace_back();
      for (std::size_t b = 0; b < config_.cnn_blocks_per_stage; ++b) {
        blocks.emplace_back(s, indexed(stage + ".res", b), width, seed);
      }
    }
  }

  if (config_.has_vit_branch()) {
    embed_ = std::make_unique<nn::PatchEmbed<T>>(s, "vit.embed", base, config_.patch, config_.vit_dim, seed);
    if (config_.positional_embedding) {
      pos_ = std::make_unique<nn::PositionalEmbedding<T>>(s, "vit.pos", config_.pos_grid, config_.vit_dim, seed);
    }
    for (std::size_t b = 0; b < config_.vit_depth; ++b) {
      vit_blocks_.emplace_back(s, indexed("vit.block", b), config_.vit_dim, config_.vit_heads, config_.mlp_ratio,
                               seed);
    }
    vit_norm_ = std::make_unique<nn::LayerNorm<T>>(s, "vit.norm", config_.vit_dim);
    unembed_ = std::make_unique<nn::PatchUnembed<T>>(s, "vit.unembed", config_.vit_dim, deep, 1, seed);
  }

  if (config_.variant == Variant::kFull) {
    fuse_res0_ = std::make_unique<nn::ResBlock<T>>(s, "fusion.res0", 2 * deep, seed);
    fuse_res1_ = std::make_unique<nn::ResBlock<T>>(s, "fusion.res1", 2 * deep, seed);
    fuse_attention_ =
        std::make_unique<nn::ChannelAttention<T>>(s, "fusion.attention", 2 * deep, config_.fusion_reduction, seed);
    fuse_proj_ = std::make_unique<nn::Conv2d<T>>(s, "fusion.proj", 2 * deep, deep, 1, nn::ConvGeometry{1, 0}, seed);
  } else if (config_.variant == Variant::kAdditiveFusion) {
    fuse_proj_ = std::make_unique<nn::Conv2d<T>>(s, "fusion.proj", deep, deep, 1, nn::ConvGeometry{1, 0}, seed);
  }

  std::size_t width = deep;
  for (std::size_t l = 0; l < config_.stages; ++l) {
    decoder_.emplace_back(s, indexed("decoder.layer", l), width, width / 2, seed);
    width /= 2;
  }
  merge_ = std::make_unique<nn::Conv2d<T>>(s, "merge", 2 * base, base, 3, nn::ConvGeometry{1, 1}, seed);
  head_ = std::make_unique<nn::Conv2d<T>>(s, "head", base, 3, 3, nn::ConvGeometry{1, 1}, seed);
  // A zero head makes the untrained network the identity map on its input.
  head_->weight().value.fill(T(0));
}

template <typename T>
void Model<T>::check_input(const Tensor<T>& rainy) const {
  if (rainy.rank() != 4 || rainy.dim(1) != 3) {
    throw ShapeError("model input must be N x 3 x H x W, got " + shape_string(rainy.shape()));
  }
  const std::size_t m = config_.downsample();
  if (rainy.dim(2) % m != 0 || rainy.dim(3) % m != 0 || rainy.dim(2) == 0 || rainy.dim(3) == 0) {
    throw ShapeError("model input " + std::to_string(rainy.dim(2)) + "x" + std::to_string(rainy.dim(3)) +
                     " is not divisible by " + std::to_string(m));
  }
}

template <typename T>
Tensor<T> Model<T>::run_cnn(const Tensor<T>& shallow, Cache* cache) const {
  if (cache) {
    cache->down.assign(down_.size(), {});
    cache->stage_res.assign(down_.size(), {});
  }
  Tensor<T> x = shallow;
  for (std::size_t st = 0; st < down_.size(); ++st) {
    x = down_[st].forward(x, cache ? &cache->down[st] : nullptr);
    if (cache) cache->stage_res[st].assign(stage_res_[st].size(), {});
    for (std::size_t b = 0; b < stage_res_[st].size(); ++b) {
      x = stage_res_[st][b].forward(x, cache ? &cache->stage_res[st][b] : nullptr);
    }
  }
  return x;
}

template <typename T>
Tensor<T> Model<T>::cnn_backward(const Cache& cache, Tensor<T> dy) const {
  for (std::size_t st = down_.size(); st-- > 0;) {
    for (std::size_t b = stage_res_[st].size(); b-- > 0;) {
      dy = stage_res_[st][b].backward(cache.stage_res[st][b], dy);
    }
    dy = down_[st].backward(cache.down[st], dy);
  }
  return dy;
}

template <typename T>
Tensor<T> Model<T>::run_vit(const Tensor<T>& shallow, Cache* cache, Recorder* recorder) const {
  const std::size_t gh = shallow.dim(2) / config_.patch;
  const std::size_t gw = shallow.dim(3) / config_.patch;
  Tensor<T> tokens = embed_->forward(shallow, cache ? &cache->embed : nullptr);
  if (pos_) tokens = pos_->forward(tokens, gh, gw);
  if (recorder) recorder->record("vit_embed", tokens);
  if (cache) {
    cache->grid_h = gh;
    cache->grid_w = gw;
    cache->vit_blocks.assign(vit_blocks_.size(), {});
  }
  for (std::size_t b = 0; b < vit_blocks_.size(); ++b) {
    tokens = vit_blocks_[b].forward(tokens, cache ? &cache->vit_blocks[b] : nullptr);
  }
  tokens = vit_norm_->forward(tokens, cache ? &cache->vit_norm : nullptr);
  if (recorder) recorder->record("vit_tokens", tokens);
  return unembed_->forward(tokens, gh, gw, cache ? &cache->unembed : nullptr);
}

template <typename T>
Tensor<T> Model<T>::vit_backward(const Cache& cache, const Tensor<T>& dy) const {
  Tensor<T> d = unembed_->backward(cache.unembed, dy);
  d = vit_norm_->backward(cache.vit_norm, d);
  for (std::size_t b = vit_blocks_.size(); b-- > 0;) d = vit_blocks_[b].backward(cache.vit_blocks[b], d);
  if (pos_) d = pos_->backward(d, cache.grid_h, cache.grid_w);
  return embed_->backward(cache.embed, d);
}

template <typename T>
Tensor<T> Model<T>::fuse(const Tensor<T>& cnn_feat, const Tensor<T>& vit_feat, FusionCache* cache,
                         Recorder* recorder) const {
  switch (config_.variant) {
    case Variant::kOnlyCnn:
      return cnn_feat;
    case Variant::kOnlyTransformer:
      return vit_feat;
    case Variant::kAdditiveFusion: {
      require_same_shape(cnn_feat, vit_feat, "additive fusion");
      return fuse_proj_->forward(add(cnn_feat, vit_feat), cache ? &cache->proj : nullptr);
    }
    case Variant::kFull:
      break;
  }
  if (cnn_feat.rank() != 4 || vit_feat.rank() != 4 || cnn_feat.dim(0) != vit_feat.dim(0) ||
      cnn_feat.dim(2) != vit_feat.dim(2) || cnn_feat.dim(3) != vit_feat.dim(3)) {
    throw ShapeError("fusion inputs disagree: " + shape_string(cnn_feat.shape()) + " vs " +
                     shape_string(vit_feat.shape()));
  }
  if (cache) cache->cnn_channels = cnn_feat.dim(1);
  Tensor<T> x = concat_channels(cnn_feat, vit_feat);
  x = fuse_res0_->forward(x, cache ? &cache->res0 : nullptr);
  x = fuse_res1_->forward(x, cache ? &cache->res1 : nullptr);
  if (recorder) recorder->record("fusion_gate", fuse_attention_->gate(x));
  x = fuse_attention_->forward(x, cache ? &cache->attention : nullptr);
  return fuse_proj_->forward(x, cache ? &cache->proj : nullptr);
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> Model<T>::fuse_backward(const FusionCache& cache, const Tensor<T>& dy) const {
  switch (config_.variant) {
    case Variant::kOnlyCnn:
      return {dy, Tensor<T>()};
    case Variant::kOnlyTransformer:
      return {Tensor<T>(), dy};
    case Variant::kAdditiveFusion: {
      Tensor<T> d = fuse_proj_->backward(cache.proj, dy);
      return {d, d};
    }
    case Variant::kFull:
      break;
  }
  Tensor<T> d = fuse_proj_->backward(cache.proj, dy);
  d = fuse_attention_->backward(cache.attention, d);
  d = fuse_res1_->backward(cache.res1, d);
  d = fuse_res0_->backward(cache.res0, d);
  std::pair<Tensor<T>, Tensor<T>> out;
  split_channels(d, cache.cnn_channels, out.first, out.second);
  return out;
}

template <typename T>
Tensor<T> Model<T>::forward(const Tensor<T>& rainy, Cache* cache, Recorder* recorder) const {
  check_input(rainy);
  if (recorder) recorder->record("input", rainy);
  Tensor<T> shallow = shallow_conv_->forward(rainy, cache ? &cache->shallow_conv : nullptr);
  shallow = shallow_res_->forward(shallow, cache ? &cache->shallow_res : nullptr);
  if (recorder) recorder->record("shallow", shallow);

  Tensor<T> cnn_feat, vit_feat;
  if (config_.has_cnn_branch()) {
    cnn_feat = run_cnn(shallow, cache);
    if (recorder) recorder->record("cnn_feat", cnn_feat);
  }
  if (config_.has_vit_branch()) {
    vit_feat = run_vit(shallow, cache, recorder);
    if (recorder) recorder->record("vit_feat", vit_feat);
  }
  Tensor<T> x = fuse(cnn_feat, vit_feat, cache ? &cache->fusion : nullptr, recorder);
  if (recorder) recorder->record("fused", x);

  if (cache) cache->decoder.assign(decoder_.size(), {});
  for (std::size_t l = 0; l < decoder_.size(); ++l) {
    x = decoder_[l].forward(x, cache ? &cache->decoder[l] : nullptr);
  }
  if (recorder) recorder->record("decoded", x);
  if (cache) cache->decoded_channels = x.dim(1);

  x = merge_->forward(concat_channels(x, shallow), cache ? &cache->merge : nullptr);
  if (recorder) recorder->record("merged", x);
  x = head_->forward(x, cache ? &cache->head : nullptr);
  if (recorder) recorder->record("head", x);
  add_inplace(x, rainy);
  if (recorder) recorder->record("output", x);
  return x;
}

template <typename T>
Tensor<T> Model<T>::infer(const Tensor<T>& rainy) const {
  Tensor<T> out = forward(rainy);
  for (auto& v : out.values()) v = std::clamp(v, T(0), T(1));
  return out;
}

template <typename T>
Tensor<T> Model<T>::backward(const Cache& cache, const Tensor<T>& dout) const {
  Tensor<T> d = head_->backward(cache.head, dout);
  d = merge_->backward(cache.merge, d);
  Tensor<T> d_decoded, d_shallow;
  split_channels(d, cache.decoded_channels, d_decoded, d_shallow);
  for (std::size_t l = decoder_.size(); l-- > 0;) d_decoded = decoder_[l].backward(cache.decoder[l], d_decoded);

  auto [d_cnn, d_vit] = fuse_backward(cache.fusion, d_decoded);
  if (config_.has_cnn_branch()) add_inplace(d_shallow, cnn_backward(cache, std::move(d_cnn)));
  if (config_.has_vit_branch()) add_inplace(d_shallow, vit_backward(cache, d_vit));

  d = shallow_res_->backward(cache.shallow_res, d_shallow);
  d = shallow_conv_->backward(cache.shallow_conv, d);
  add_inplace(d, dout);
  return d;
}

template <typename T>
std::vector<std::string> Model<T>::probe_names() const {
  std::vector<std::string> names = {"input", "shallow"};
  if (config_.has_cnn_branch()) names.push_back("cnn_feat");
  if (config_.has_vit_branch()) {
    names.push_back("vit_embed");
    names.push_back("vit_tokens");
    names.push_back("vit_feat");
  }
  if (config_.variant == Variant::kFull) names.push_back("fusion_gate");
  for (const char* n : {"fused", "decoded", "merged", "head", "output"}) names.push_back(n);
  return names;
}

template <typename T>
std::map<std::string, Tensor<T>> Model<T>::capture_activations(const Tensor<T>& rainy,
                                                               const std::vector<std::string>& probes) const {
  const auto known = probe_names();
  Recorder recorder;
  for (const auto& p : probes) {
    if (std::find(known.begin(), known.end(), p) == known.end()) {
      throw LookupError("unknown probe '" + p + "' for variant " + to_string(config_.variant));
    }
    recorder.wanted.insert(p);
  }
  forward(rainy, nullptr, &recorder);
  return std::move(recorder.captured);
}

template class Model<float>;
template class Model<double>;

}  // namespace dpaf::net
