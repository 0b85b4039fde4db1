#include "dpaf/nn/blocks.hpp"

#include <algorithm>
#include <limits>

namespace dpaf::nn {

// ---- Conv2d ---------------------------------------------------------------

template <typename T>
Conv2d<T>::Conv2d(ParamStore<T>& store, const std::string& name, std::size_t in_channels,
                  std::size_t out_channels, std::size_t kernel, ConvGeometry geometry,
                  std::uint64_t seed, bool with_bias)
    : weight_(&store.add(name + ".weight", {out_channels, in_channels, kernel, kernel})),
      geometry_(geometry) {
  init_uniform_fan_in(*weight_, in_channels * kernel * kernel, seed);
  if (with_bias) bias_ = &store.add(name + ".bias", {out_channels});
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, Cache* cache) const {
  static const Tensor<T> no_bias;
  Tensor<T> y = conv2d(x, weight_->value, bias_ ? bias_->value : no_bias, geometry_);
  if (cache) cache->input = x;
  return y;
}

template <typename T>
Tensor<T> Conv2d<T>::backward(const Cache& cache, const Tensor<T>& dy, bool input_grad) const {
  Tensor<T> dx;
  conv2d_backward(cache.input, weight_->value, dy, geometry_, input_grad ? &dx : nullptr,
                  &weight_->grad, bias_ ? &bias_->grad : nullptr);
  return dx;
}

// ---- ResBlock -------------------------------------------------------------

template <typename T>
ResBlock<T>::ResBlock(ParamStore<T>& store, const std::string& name, std::size_t channels,
                      std::uint64_t seed)
    : channels_(channels),
      conv1_(store, name + ".conv1", channels, channels, 3, {1, 1}, seed),
      conv2_(store, name + ".conv2", channels, channels, 3, {1, 1}, seed) {}

template <typename T>
Tensor<T> ResBlock<T>::forward(const Tensor<T>& x, Cache* cache) const {
  if (x.rank() != 4 || x.dim(1) != channels_) {
    throw ShapeError("resblock: expected " + std::to_string(channels_) + " channels, got " +
                     shape_string(x.shape()));
  }
  Tensor<T> hidden = conv1_.forward(x, cache ? &cache->conv1 : nullptr);
  Tensor<T> y = conv2_.forward(relu(hidden), cache ? &cache->conv2 : nullptr);
  add_inplace(y, x);
  if (cache) cache->hidden = std::move(hidden);
  return y;
}

template <typename T>
Tensor<T> ResBlock<T>::backward(const Cache& cache, const Tensor<T>& dy) const {
  Tensor<T> dact = conv2_.backward(cache.conv2, dy);
  Tensor<T> dx = conv1_.backward(cache.conv1, relu_backward(cache.hidden, dact));
  add_inplace(dx, dy);
  return dx;
}

// ---- ChannelAttention -----------------------------------------------------

template <typename T>
ChannelAttention<T>::ChannelAttention(ParamStore<T>& store, const std::string& name,
                                      std::size_t channels, std::size_t reduction,
                                      std::uint64_t seed) {
  if (reduction == 0 || channels % reduction != 0) {
    throw ConfigError("channel_attention: reduction " + std::to_string(reduction) +
                      " does not divide " + std::to_string(channels) + " channels");
  }
  const std::size_t hidden = channels / reduction;
  w0_ = &store.add(name + ".w0", {hidden, channels});
  w1_ = &store.add(name + ".w1", {channels, hidden});
  init_uniform_fan_in(*w0_, channels, seed);
  init_uniform_fan_in(*w1_, hidden, seed);
}

template <typename T>
Tensor<T> ChannelAttention<T>::forward(const Tensor<T>& x, Cache* cache) const {
  if (x.rank() != 4 || x.dim(1) != w0_->value.dim(1)) {
    throw ShapeError("channel_attention: channel mismatch for " + shape_string(x.shape()));
  }
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<T> avg({n, c}), mx({n, c});
  std::vector<std::size_t> argmax(n * c);
  for (std::size_t i = 0; i < n * c; ++i) {
    const T* plane = x.data() + i * hw;
    T s = 0;
    std::size_t best = 0;
    for (std::size_t p = 0; p < hw; ++p) {
      s += plane[p];
      if (plane[p] > plane[best]) best = p;
    }
    avg[i] = s / static_cast<T>(hw);
    mx[i] = plane[best];
    argmax[i] = i * hw + best;
  }
  static const Tensor<T> no_bias;
  Tensor<T> ha = linear(avg, w0_->value, no_bias);
  Tensor<T> hm = linear(mx, w0_->value, no_bias);
  Tensor<T> z = add(linear(relu(ha), w1_->value, no_bias), linear(relu(hm), w1_->value, no_bias));
  Tensor<T> gate(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) gate[i] = sigmoid(z[i]);

  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < n * c; ++i) {
    for (std::size_t p = 0; p < hw; ++p) y[i * hw + p] = gate[i] * x[i * hw + p];
  }
  if (cache) {
    cache->input = x;
    cache->avg = std::move(avg);
    cache->max = std::move(mx);
    cache->argmax = std::move(argmax);
    cache->hidden_avg = std::move(ha);
    cache->hidden_max = std::move(hm);
    cache->gate = std::move(gate);
  }
  return y;
}

template <typename T>
Tensor<T> ChannelAttention<T>::gate(const Tensor<T>& x) const {
  Cache cache;
  forward(x, &cache);
  return cache.gate;
}

template <typename T>
Tensor<T> ChannelAttention<T>::backward(const Cache& cache, const Tensor<T>& dy) const {
  const Tensor<T>& x = cache.input;
  const std::size_t n = x.dim(0), c = x.dim(1), hw = x.dim(2) * x.dim(3);
  Tensor<T> dx(x.shape());
  Tensor<T> dz({n, c});
  for (std::size_t i = 0; i < n * c; ++i) {
    T dgate = 0;
    for (std::size_t p = 0; p < hw; ++p) {
      dgate += dy[i * hw + p] * x[i * hw + p];
      dx[i * hw + p] = dy[i * hw + p] * cache.gate[i];
    }
    dz[i] = dgate * cache.gate[i] * (T(1) - cache.gate[i]);
  }
  Tensor<T> da, dm;
  Tensor<T> ra = relu(cache.hidden_avg), rm = relu(cache.hidden_max);
  linear_backward(ra, w1_->value, dz, &da, &w1_->grad, static_cast<Tensor<T>*>(nullptr));
  linear_backward(rm, w1_->value, dz, &dm, &w1_->grad, static_cast<Tensor<T>*>(nullptr));
  Tensor<T> davg, dmax;
  linear_backward(cache.avg, w0_->value, relu_backward(cache.hidden_avg, da), &davg, &w0_->grad,
                  static_cast<Tensor<T>*>(nullptr));
  linear_backward(cache.max, w0_->value, relu_backward(cache.hidden_max, dm), &dmax, &w0_->grad,
                  static_cast<Tensor<T>*>(nullptr));
  const T inv_hw = T(1) / static_cast<T>(hw);
  for (std::size_t i = 0; i < n * c; ++i) {
    for (std::size_t p = 0; p < hw; ++p) dx[i * hw + p] += davg[i] * inv_hw;
    dx[cache.argmax[i]] += dmax[i];
  }
  return dx;
}

// ---- Linear / LayerNorm ---------------------------------------------------

template <typename T>
Linear<T>::Linear(ParamStore<T>& store, const std::string& name, std::size_t in, std::size_t out,
                  std::uint64_t seed, bool with_bias)
    : weight_(&store.add(name + ".weight", {out, in})) {
  init_uniform_fan_in(*weight_, in, seed);
  if (with_bias) bias_ = &store.add(name + ".bias", {out});
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x, Cache* cache) const {
  static const Tensor<T> no_bias;
  Tensor<T> y = linear(x, weight_->value, bias_ ? bias_->value : no_bias);
  if (cache) cache->input = x;
  return y;
}

template <typename T>
Tensor<T> Linear<T>::backward(const Cache& cache, const Tensor<T>& dy) const {
  Tensor<T> dx;
  linear_backward(cache.input, weight_->value, dy, &dx, &weight_->grad,
                  bias_ ? &bias_->grad : nullptr);
  return dx;
}

template <typename T>
LayerNorm<T>::LayerNorm(ParamStore<T>& store, const std::string& name, std::size_t features)
    : gamma_(&store.add(name + ".gamma", {features})), beta_(&store.add(name + ".beta", {features})) {
  gamma_->value.fill(T(1));
}

template <typename T>
Tensor<T> LayerNorm<T>::forward(const Tensor<T>& x, Cache* cache) const {
  if (cache) {
    cache->input = x;
    return layer_norm(x, gamma_->value, beta_->value, static_cast<T>(kEps), &cache->stats);
  }
  return layer_norm<T>(x, gamma_->value, beta_->value, static_cast<T>(kEps), nullptr);
}

template <typename T>
Tensor<T> LayerNorm<T>::backward(const Cache& cache, const Tensor<T>& dy) const {
  return layer_norm_backward(cache.input, gamma_->value, cache.stats, dy, &gamma_->grad,
                             &beta_->grad);
}

// ---- MultiHeadAttention ---------------------------------------------------

namespace {

// Copies columns [offset, offset + width) of token matrix `batch` out of an N x n x d tensor.
template <typename T>
Tensor<T> head_slice(const Tensor<T>& x, std::size_t batch, std::size_t offset, std::size_t width) {
  const std::size_t n = x.dim(1), d = x.dim(2);
  Tensor<T> out({n, width});
  for (std::size_t t = 0; t < n; ++t) {
    std::copy_n(x.data() + (batch * n + t) * d + offset, width, out.data() + t * width);
  }
  return out;
}

template <typename T>
void head_scatter(Tensor<T>& x, const Tensor<T>& part, std::size_t batch, std::size_t offset) {
  const std::size_t n = x.dim(1), d = x.dim(2), width = part.dim(1);
  for (std::size_t t = 0; t < n; ++t) {
    std::copy_n(part.data() + t * width, width, x.data() + (batch * n + t) * d + offset);
  }
}

}  // namespace

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(ParamStore<T>& store, const std::string& name,
                                          std::size_t d_model, std::size_t heads,
                                          std::uint64_t seed)
    : d_model_(d_model),
      heads_(heads),
      q_(store, name + ".q", d_model, d_model, seed),
      k_(store, name + ".k", d_model, d_model, seed, /*with_bias=*/false),
      v_(store, name + ".v", d_model, d_model, seed),
      o_(store, name + ".o", d_model, d_model, seed) {
  if (heads == 0 || d_model % heads != 0) {
    throw ConfigError("multi_head_attention: heads " + std::to_string(heads) +
                      " does not divide d_model " + std::to_string(d_model));
  }
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::forward(const Tensor<T>& x, Cache* cache) const {
  const bool rank2 = x.rank() == 2;
  if ((x.rank() != 2 && x.rank() != 3) || x.shape().back() != d_model_) {
    throw ShapeError("multi_head_attention: expected tokens of width " + std::to_string(d_model_) +
                     ", got " + shape_string(x.shape()));
  }
  const Tensor<T> tokens = rank2 ? x.reshaped({1, x.dim(0), x.dim(1)}) : x;
  const std::size_t batch = tokens.dim(0), dk = d_model_ / heads_;
  Tensor<T> q = q_.forward(tokens, cache ? &cache->q_in : nullptr);
  Tensor<T> k = k_.forward(tokens, cache ? &cache->k_in : nullptr);
  Tensor<T> v = v_.forward(tokens, cache ? &cache->v_in : nullptr);
  Tensor<T> mixed(tokens.shape());
  if (cache) cache->probs.assign(batch * heads_, Tensor<T>{});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads_; ++h) {
      Tensor<T> probs;
      Tensor<T> out = scaled_dot_attention(head_slice(q, b, h * dk, dk), head_slice(k, b, h * dk, dk),
                                           head_slice(v, b, h * dk, dk), cache ? &probs : nullptr);
      head_scatter(mixed, out, b, h * dk);
      if (cache) cache->probs[b * heads_ + h] = std::move(probs);
    }
  }
  Tensor<T> y = o_.forward(mixed, cache ? &cache->o_in : nullptr);
  if (cache) {
    cache->input_shape = x.shape();
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
  }
  return rank2 ? std::move(y).reshaped(x.shape()) : y;
}

template <typename T>
Tensor<T> MultiHeadAttention<T>::backward(const Cache& cache, const Tensor<T>& dy) const {
  const Tensor<T>& q = cache.q;
  const std::size_t batch = q.dim(0), dk = d_model_ / heads_;
  Tensor<T> dmixed = o_.backward(cache.o_in, dy.reshaped(q.shape()));
  Tensor<T> dq(q.shape()), dk_all(q.shape()), dv(q.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads_; ++h) {
      Tensor<T> gq, gk, gv;
      scaled_dot_attention_backward(head_slice(q, b, h * dk, dk), head_slice(cache.k, b, h * dk, dk),
                                    head_slice(cache.v, b, h * dk, dk), cache.probs[b * heads_ + h],
                                    head_slice(dmixed, b, h * dk, dk), gq, gk, gv);
      head_scatter(dq, gq, b, h * dk);
      head_scatter(dk_all, gk, b, h * dk);
      head_scatter(dv, gv, b, h * dk);
    }
  }
  Tensor<T> dx = q_.backward(cache.q_in, dq);
  add_inplace(dx, k_.backward(cache.k_in, dk_all));
  add_inplace(dx, v_.backward(cache.v_in, dv));
  return std::move(dx).reshaped(cache.input_shape);
}

// ---- TransformerBlock -----------------------------------------------------

template <typename T>
TransformerBlock<T>::TransformerBlock(ParamStore<T>& store, const std::string& name,
                                      std::size_t d_model, std::size_t heads,
                                      std::size_t mlp_ratio, std::uint64_t seed)
    : ln1_(store, name + ".ln1", d_model),
      ln2_(store, name + ".ln2", d_model),
      attn_(store, name + ".attn", d_model, heads, seed),
      fc1_(store, name + ".fc1", d_model, d_model * mlp_ratio, seed),
      fc2_(store, name + ".fc2", d_model * mlp_ratio, d_model, seed) {}

template <typename T>
Tensor<T> TransformerBlock<T>::forward(const Tensor<T>& x, Cache* cache) const {
  Tensor<T> y = add(x, attn_.forward(ln1_.forward(x, cache ? &cache->ln1 : nullptr),
                                     cache ? &cache->attn : nullptr));
  Tensor<T> hidden = fc1_.forward(ln2_.forward(y, cache ? &cache->ln2 : nullptr),
                                  cache ? &cache->fc1 : nullptr);
  add_inplace(y, fc2_.forward(gelu(hidden), cache ? &cache->fc2 : nullptr));
  if (cache) cache->hidden = std::move(hidden);
  return y;
}

template <typename T>
Tensor<T> TransformerBlock<T>::backward(const Cache& cache, const Tensor<T>& dy) const {
  Tensor<T> dhidden = gelu_backward(cache.hidden, fc2_.backward(cache.fc2, dy));
  Tensor<T> dmid = ln2_.backward(cache.ln2, fc1_.backward(cache.fc1, dhidden));
  add_inplace(dmid, dy);
  Tensor<T> dx = ln1_.backward(cache.ln1, attn_.backward(cache.attn, dmid));
  add_inplace(dx, dmid);
  return dx;
}

// ---- Patches --------------------------------------------------------------

template <typename T>
Tensor<T> patchify(const Tensor<T>& x, std::size_t patch) {
  if (x.rank() != 4) throw ShapeError("patchify: expected NCHW");
  if (patch == 0 || x.dim(2) % patch != 0 || x.dim(3) % patch != 0) {
    throw ShapeError("patch size " + std::to_string(patch) + " does not divide " +
                     shape_string(x.shape()));
  }
  const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t gh = h / patch, gw = w / patch, width = c * patch * patch;
  Tensor<T> tokens({n, gh * gw, width});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t gy = 0; gy < gh; ++gy) {
      for (std::size_t gx = 0; gx < gw; ++gx) {
        T* dst = tokens.data() + (b * gh * gw + gy * gw + gx) * width;
        for (std::size_t ch = 0; ch < c; ++ch) {
          for (std::size_t py = 0; py < patch; ++py) {
            const T* src = &x.at(b, ch, gy * patch + py, gx * patch);
            std::copy_n(src, patch, dst + (ch * patch + py) * patch);
          }
        }
      }
    }
  }
  return tokens;
}

template <typename T>
Tensor<T> unpatchify(const Tensor<T>& tokens, std::size_t channels, std::size_t grid_h,
                     std::size_t grid_w, std::size_t patch) {
  const std::size_t width = channels * patch * patch;
  if (tokens.rank() != 3 || tokens.dim(1) != grid_h * grid_w || tokens.dim(2) != width) {
    throw ShapeError("unpatchify: tokens " + shape_string(tokens.shape()) + " do not form a " +
                     std::to_string(grid_h) + "x" + std::to_string(grid_w) + " grid");
  }
  const std::size_t n = tokens.dim(0);
  Tensor<T> x({n, channels, grid_h * patch, grid_w * patch});
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t gy = 0; gy < grid_h; ++gy) {
      for (std::size_t gx = 0; gx < grid_w; ++gx) {
        const T* src = tokens.data() + (b * grid_h * grid_w + gy * grid_w + gx) * width;
        for (std::size_t ch = 0; ch < channels; ++ch) {
          for (std::size_t py = 0; py < patch; ++py) {
            std::copy_n(src + (ch * patch + py) * patch, patch,
                        &x.at(b, ch, gy * patch + py, gx * patch));
          }
        }
      }
    }
  }
  return x;
}

template <typename T>
PatchEmbed<T>::PatchEmbed(ParamStore<T>& store, const std::string& name, std::size_t in_channels,
                          std::size_t patch, std::size_t d_model, std::uint64_t seed)
    : in_channels_(in_channels),
      patch_(patch),
      proj_(store, name + ".proj", in_channels * patch * patch, d_model, seed) {}

template <typename T>
Tensor<T> PatchEmbed<T>::forward(const Tensor<T>& x, Cache* cache) const {
  if (x.rank() != 4 || x.dim(1) != in_channels_) {
    throw ShapeError("patch_embed: expected " + std::to_string(in_channels_) + " channels, got " +
                     shape_string(x.shape()));
  }
  Tensor<T> tokens = proj_.forward(patchify(x, patch_), cache ? &cache->proj : nullptr);
  if (cache) cache->input_shape = x.shape();
  return tokens;
}

template <typename T>
Tensor<T> PatchEmbed<T>::backward(const Cache& cache, const Tensor<T>& dy) const {
  const Shape& s = cache.input_shape;
  return unpatchify(proj_.backward(cache.proj, dy), s[1], s[2] / patch_, s[3] / patch_, patch_);
}

template <typename T>
PatchUnembed<T>::PatchUnembed(ParamStore<T>& store, const std::string& name, std::size_t d_model,
                              std::size_t out_channels, std::size_t out_patch, std::uint64_t seed)
    : out_channels_(out_channels),
      out_patch_(out_patch),
      proj_(store, name + ".proj", d_model, out_channels * out_patch * out_patch, seed) {}

template <typename T>
Tensor<T> PatchUnembed<T>::forward(const Tensor<T>& tokens, std::size_t grid_h,
                                   std::size_t grid_w, Cache* cache) const {
  return unpatchify(proj_.forward(tokens, cache ? &cache->proj : nullptr), out_channels_, grid_h,
                    grid_w, out_patch_);
}

template <typename T>
Tensor<T> PatchUnembed<T>::backward(const Cache& cache, const Tensor<T>& dy) const {
  return proj_.backward(cache.proj, patchify(dy, out_patch_));
}

// ---- PositionalEmbedding --------------------------------------------------

template <typename T>
PositionalEmbedding<T>::PositionalEmbedding(ParamStore<T>& store, const std::string& name,
                                            std::size_t grid, std::size_t d_model,
                                            std::uint64_t seed)
    : grid_(grid), table_(&store.add(name, {grid * grid, d_model})) {
  init_uniform(*table_, 0.02, seed);
}

template <typename T>
std::size_t PositionalEmbedding<T>::lattice_index(std::size_t i, std::size_t j, std::size_t gh,
                                                  std::size_t gw) const {
  return (i * grid_ / gh) * grid_ + (j * grid_ / gw);
}

template <typename T>
Tensor<T> PositionalEmbedding<T>::forward(const Tensor<T>& tokens, std::size_t grid_h,
                                          std::size_t grid_w) const {
  const std::size_t d = table_->value.dim(1);
  if (tokens.rank() != 3 || tokens.dim(1) != grid_h * grid_w || tokens.dim(2) != d) {
    throw ShapeError("positional_embedding: token shape " + shape_string(tokens.shape()));
  }
  Tensor<T> y = tokens;
  for (std::size_t b = 0; b < tokens.dim(0); ++b) {
    for (std::size_t i = 0; i < grid_h; ++i) {
      for (std::size_t j = 0; j < grid_w; ++j) {
        const T* row = table_->value.data() + lattice_index(i, j, grid_h, grid_w) * d;
        T* dst = y.data() + ((b * grid_h + i) * grid_w + j) * d;
        for (std::size_t f = 0; f < d; ++f) dst[f] += row[f];
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> PositionalEmbedding<T>::backward(const Tensor<T>& dy, std::size_t grid_h,
                                           std::size_t grid_w) const {
  const std::size_t d = table_->value.dim(1);
  for (std::size_t b = 0; b < dy.dim(0); ++b) {
    for (std::size_t i = 0; i < grid_h; ++i) {
      for (std::size_t j = 0; j < grid_w; ++j) {
        T* row = table_->grad.data() + lattice_index(i, j, grid_h, grid_w) * d;
        const T* src = dy.data() + ((b * grid_h + i) * grid_w + j) * d;
        for (std::size_t f = 0; f < d; ++f) row[f] += src[f];
      }
    }
  }
  return dy;
}

// ---- RestorationLayer -----------------------------------------------------

template <typename T>
RestorationLayer<T>::RestorationLayer(ParamStore<T>& store, const std::string& name,
                                      std::size_t in_channels, std::size_t out_channels,
                                      std::uint64_t seed)
    : conv1_(store, name + ".conv1", in_channels, out_channels, 3, {1, 1}, seed),
      conv2_(store, name + ".conv2", out_channels, out_channels, 3, {1, 1}, seed) {}

template <typename T>
Tensor<T> RestorationLayer<T>::forward(const Tensor<T>& x, Cache* cache) const {
  Tensor<T> hidden = conv1_.forward(upsample_bilinear2x(x), cache ? &cache->conv1 : nullptr);
  Tensor<T> y = conv2_.forward(gelu(hidden), cache ? &cache->conv2 : nullptr);
  if (cache) {
    cache->input_shape = x.shape();
    cache->hidden = std::move(hidden);
  }
  return y;
}

template <typename T>
Tensor<T> RestorationLayer<T>::backward(const Cache& cache, const Tensor<T>& dy) const {
  Tensor<T> dhidden = gelu_backward(cache.hidden, conv2_.backward(cache.conv2, dy));
  return upsample_bilinear2x_backward(cache.input_shape, conv1_.backward(cache.conv1, dhidden));
}

#define DPAF_INSTANTIATE(T)                                                                 \
  template class Conv2d<T>;                                                                 \
  template class ResBlock<T>;                                                               \
  template class ChannelAttention<T>;                                                       \
  template class Linear<T>;                                                                 \
  template class LayerNorm<T>;                                                              \
  template class MultiHeadAttention<T>;                                                     \
  template class TransformerBlock<T>;                                                       \
  template class PatchEmbed<T>;                                                             \
  template class PatchUnembed<T>;                                                           \
  template class PositionalEmbedding<T>;                                                    \
  template class RestorationLayer<T>;                                                       \
  template Tensor<T> patchify(const Tensor<T>&, std::size_t);                               \
  template Tensor<T> unpatchify(const Tensor<T>&, std::size_t, std::size_t, std::size_t,    \
                                std::size_t);

DPAF_INSTANTIATE(float)
DPAF_INSTANTIATE(double)
#undef DPAF_INSTANTIATE

}  // namespace dpaf::nn
