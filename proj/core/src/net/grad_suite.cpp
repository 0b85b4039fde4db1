#include "dpaf/net/grad_suite.hpp"

#include <functional>

#include "dpaf/errors.hpp"
#include "dpaf/net/model.hpp"
#include "dpaf/nn/blocks.hpp"
#include "dpaf/nn/grad_check.hpp"
#include "dpaf/objective/losses.hpp"
#include "dpaf/rng.hpp"

namespace dpaf::net {

namespace {

using Rows = std::vector<GradSuiteRow>;
using D = double;

Tensor<D> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<D> t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

void jitter_params(nn::ParamStore<D>& store, Rng& rng, double amount) {
  for (std::size_t i = 0; i < store.entries(); ++i) {
    for (auto& v : store.at(i).value.values()) v += rng.uniform(-amount, amount);
  }
}

void push(Rows& rows, const std::string& scope, const nn::GradCheckRow& r, double tol) {
  rows.push_back({scope, r.name, r.rel_error, tol, r.elements});
}

// Checks d sum(R * f(x)) / d{x, params} for a block with a cache type.
template <typename Cache>
void check_module(Rows& rows, const std::string& scope, double tol, nn::ParamStore<D>& store, Tensor<D>& x,
                  Rng& rng, const std::function<Tensor<D>(const Tensor<D>&, Cache*)>& fwd,
                  const std::function<Tensor<D>(const Cache&, const Tensor<D>&)>& bwd,
                  const std::string& input_name = "input") {
  Cache cache;
  const Tensor<D> y = fwd(x, &cache);
  const Tensor<D> weight = random_tensor(y.shape(), rng);
  store.zero_grad();
  const Tensor<D> dx = bwd(cache, weight);
  const std::function<D()> loss = [&] { return dot(fwd(x, nullptr), weight); };
  push(rows, scope, nn::check_gradient<D>(input_name, x, dx, loss), tol);
  for (std::size_t i = 0; i < store.entries(); ++i) {
    auto& p = store.at(i);
    push(rows, scope, nn::check_gradient<D>(p.name, p.value, p.grad, loss), tol);
  }
}

void conv2d_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t stride : {1u, 2u}) {
    nn::ParamStore<D> store;
    const std::string name = stride == 1 ? "conv" : "conv_stride2";
    nn::Conv2d<D> conv(store, name, 2, 3, 3, nn::ConvGeometry{stride, 1}, seed);
    jitter_params(store, rng, 0.1);
    Tensor<D> x = random_tensor({1, 2, 5, 5}, rng);
    check_module<nn::Conv2d<D>::Cache>(
        rows, "conv2d", kBlockTolerance, store, x, rng,
        [&](const Tensor<D>& in, nn::Conv2d<D>::Cache* c) { return conv.forward(in, c); },
        [&](const nn::Conv2d<D>::Cache& c, const Tensor<D>& dy) { return conv.backward(c, dy); }, name + ".input");
  }
}

void resblock_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore<D> store;
  nn::ResBlock<D> block(store, "res", 2, seed);
  jitter_params(store, rng, 0.1);
  Tensor<D> x = random_tensor({1, 2, 4, 4}, rng);
  check_module<nn::ResBlock<D>::Cache>(
      rows, "resblock", kBlockTolerance, store, x, rng,
      [&](const Tensor<D>& in, nn::ResBlock<D>::Cache* c) { return block.forward(in, c); },
      [&](const nn::ResBlock<D>::Cache& c, const Tensor<D>& dy) { return block.backward(c, dy); });
}

void channel_attention_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore<D> store;
  nn::ChannelAttention<D> ca(store, "ca", 4, 2, seed);
  jitter_params(store, rng, 0.1);
  Tensor<D> x = random_tensor({2, 4, 3, 3}, rng);
  check_module<nn::ChannelAttention<D>::Cache>(
      rows, "channel_attention", kBlockTolerance, store, x, rng,
      [&](const Tensor<D>& in, nn::ChannelAttention<D>::Cache* c) { return ca.forward(in, c); },
      [&](const nn::ChannelAttention<D>::Cache& c, const Tensor<D>& dy) { return ca.backward(c, dy); });
}

void attention_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<D> q = random_tensor({3, 2}, rng), k = random_tensor({4, 2}, rng), v = random_tensor({4, 3}, rng);
  Tensor<D> probs;
  const Tensor<D> y = nn::scaled_dot_attention(q, k, v, &probs);
  const Tensor<D> weight = random_tensor(y.shape(), rng);
  Tensor<D> dq, dk, dv;
  nn::scaled_dot_attention_backward(q, k, v, probs, weight, dq, dk, dv);
  const std::function<D()> loss = [&] { return dot(nn::scaled_dot_attention<D>(q, k, v, nullptr), weight); };
  push(rows, "scaled_dot_attention", nn::check_gradient<D>("q", q, dq, loss), kBlockTolerance);
  push(rows, "scaled_dot_attention", nn::check_gradient<D>("k", k, dk, loss), kBlockTolerance);
  push(rows, "scaled_dot_attention", nn::check_gradient<D>("v", v, dv, loss), kBlockTolerance);
}

void mha_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore<D> store;
  nn::MultiHeadAttention<D> mha(store, "mha", 4, 2, seed);
  jitter_params(store, rng, 0.1);
  Tensor<D> x = random_tensor({1, 4, 4}, rng);
  check_module<nn::MultiHeadAttention<D>::Cache>(
      rows, "multi_head_attention", kBlockTolerance, store, x, rng,
      [&](const Tensor<D>& in, nn::MultiHeadAttention<D>::Cache* c) { return mha.forward(in, c); },
      [&](const nn::MultiHeadAttention<D>::Cache& c, const Tensor<D>& dy) { return mha.backward(c, dy); });
}

void transformer_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore<D> store;
  nn::TransformerBlock<D> block(store, "block", 8, 2, 2, seed);
  jitter_params(store, rng, 0.1);
  Tensor<D> x = random_tensor({1, 4, 8}, rng);
  check_module<nn::TransformerBlock<D>::Cache>(
      rows, "transformer_block", kBlockTolerance, store, x, rng,
      [&](const Tensor<D>& in, nn::TransformerBlock<D>::Cache* c) { return block.forward(in, c); },
      [&](const nn::TransformerBlock<D>::Cache& c, const Tensor<D>& dy) { return block.backward(c, dy); });
}

void layer_norm_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore<D> store;
  nn::LayerNorm<D> ln(store, "ln", 5);
  jitter_params(store, rng, 0.3);
  Tensor<D> x = random_tensor({3, 5}, rng);
  check_module<nn::LayerNorm<D>::Cache>(
      rows, "layer_norm", kBlockTolerance, store, x, rng,
      [&](const Tensor<D>& in, nn::LayerNorm<D>::Cache* c) { return ln.forward(in, c); },
      [&](const nn::LayerNorm<D>::Cache& c, const Tensor<D>& dy) { return ln.backward(c, dy); });
}

void linear_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore<D> store;
  nn::Linear<D> lin(store, "linear", 3, 4, seed);
  jitter_params(store, rng, 0.1);
  Tensor<D> x = random_tensor({2, 3}, rng);
  check_module<nn::Linear<D>::Cache>(
      rows, "linear", kBlockTolerance, store, x, rng,
      [&](const Tensor<D>& in, nn::Linear<D>::Cache* c) { return lin.forward(in, c); },
      [&](const nn::Linear<D>::Cache& c, const Tensor<D>& dy) { return lin.backward(c, dy); });
}

void patch_embed_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore<D> store;
  nn::PatchEmbed<D> embed(store, "embed", 2, 2, 5, seed);
  jitter_params(store, rng, 0.1);
  Tensor<D> x = random_tensor({1, 2, 4, 4}, rng);
  check_module<nn::PatchEmbed<D>::Cache>(
      rows, "patch_embed", kBlockTolerance, store, x, rng,
      [&](const Tensor<D>& in, nn::PatchEmbed<D>::Cache* c) { return embed.forward(in, c); },
      [&](const nn::PatchEmbed<D>::Cache& c, const Tensor<D>& dy) { return embed.backward(c, dy); });
}

void patch_unembed_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore<D> store;
  nn::PatchUnembed<D> unembed(store, "unembed", 5, 2, 2, seed);
  jitter_params(store, rng, 0.1);
  Tensor<D> x = random_tensor({1, 4, 5}, rng);
  check_module<nn::PatchUnembed<D>::Cache>(
      rows, "patch_unembed", kBlockTolerance, store, x, rng,
      [&](const Tensor<D>& in, nn::PatchUnembed<D>::Cache* c) { return unembed.forward(in, 2, 2, c); },
      [&](const nn::PatchUnembed<D>::Cache& c, const Tensor<D>& dy) { return unembed.backward(c, dy); });
}

void positional_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore<D> store;
  nn::PositionalEmbedding<D> pos(store, "pos", 2, 3, seed);
  Tensor<D> x = random_tensor({1, 9, 3}, rng);
  struct Empty {};
  check_module<Empty>(
      rows, "positional_embedding", kBlockTolerance, store, x, rng,
      [&](const Tensor<D>& in, Empty*) { return pos.forward(in, 3, 3); },
      [&](const Empty&, const Tensor<D>& dy) { return pos.backward(dy, 3, 3); });
}

void restoration_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  nn::ParamStore<D> store;
  nn::RestorationLayer<D> layer(store, "restore", 4, 2, seed);
  jitter_params(store, rng, 0.1);
  Tensor<D> x = random_tensor({1, 4, 3, 3}, rng);
  check_module<nn::RestorationLayer<D>::Cache>(
      rows, "restoration_layer", kBlockTolerance, store, x, rng,
      [&](const Tensor<D>& in, nn::RestorationLayer<D>::Cache* c) { return layer.forward(in, c); },
      [&](const nn::RestorationLayer<D>::Cache& c, const Tensor<D>& dy) { return layer.backward(c, dy); });
}

void model_scope(Rows& rows, std::uint64_t seed) {
  Rng rng(seed);
  ModelConfig cfg;
  cfg.base_channels = 4;
  cfg.stages = 1;
  cfg.patch = 2;
  cfg.cnn_blocks_per_stage = 1;
  cfg.vit_depth = 1;
  cfg.vit_heads = 1;
  cfg.vit_dim = 8;
  cfg.pos_grid = 2;
  Model<D> model(cfg, seed);
  jitter_params(model.params(), rng, 0.05);
  Tensor<D> x = random_tensor({1, 3, 4, 4}, rng, 0.0, 1.0);
  check_module<Model<D>::Cache>(
      rows, "model", kModelTolerance, model.params(), x, rng,
      [&](const Tensor<D>& in, Model<D>::Cache* c) { return model.forward(in, c); },
      [&](const Model<D>::Cache& c, const Tensor<D>& dy) { return model.backward(c, dy); });
}

void loss_scope(Rows& rows, const std::string& scope, std::uint64_t seed) {
  Rng rng(seed);
  Tensor<D> target = random_tensor({1, 3, 12, 12}, rng, 0.0, 1.0);
  Tensor<D> pred = random_tensor({1, 3, 12, 12}, rng, 0.0, 1.0);
  objective::PerceptualConfig pcfg;
  pcfg.widths = {4, 4};
  pcfg.tap = 2;
  pcfg.seed = seed;
  const objective::PerceptualExtractor<D> extractor(pcfg);
  std::function<D(Tensor<D>*)> eval;
  if (scope == "mse_loss") {
    eval = [&](Tensor<D>* g) { return objective::mse_loss(pred, target, g); };
  } else if (scope == "ssim_loss") {
    eval = [&](Tensor<D>* g) { return objective::ssim_loss(pred, target, objective::SsimConfig{}, g); };
  } else {
    eval = [&](Tensor<D>* g) { return extractor.loss(pred, target, g); };
  }
  Tensor<D> grad;
  eval(&grad);
  push(rows, scope, nn::check_gradient<D>("pred", pred, grad, [&] { return eval(nullptr); }), kModelTolerance);
}

using ScopeFn = std::function<void(Rows&, std::uint64_t)>;

const std::vector<std::pair<std::string, ScopeFn>>& registry() {
  static const std::vector<std::pair<std::string, ScopeFn>> r = {
      {"conv2d", conv2d_scope},
      {"resblock", resblock_scope},
      {"channel_attention", channel_attention_scope},
      {"scaled_dot_attention", attention_scope},
      {"multi_head_attention", mha_scope},
      {"transformer_block", transformer_scope},
      {"layer_norm", layer_norm_scope},
      {"linear", linear_scope},
      {"patch_embed", patch_embed_scope},
      {"patch_unembed", patch_unembed_scope},
      {"positional_embedding", positional_scope},
      {"restoration_layer", restoration_scope},
      {"model", model_scope},
      {"mse_loss", [](Rows& r, std::uint64_t s) { loss_scope(r, "mse_loss", s); }},
      {"ssim_loss", [](Rows& r, std::uint64_t s) { loss_scope(r, "ssim_loss", s); }},
      {"perceptual_loss", [](Rows& r, std::uint64_t s) { loss_scope(r, "perceptual_loss", s); }},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& grad_check_scopes() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : registry()) n.push_back(name);
    return n;
  }();
  return names;
}

std::vector<GradSuiteRow> run_grad_check(const std::string& scope, std::uint64_t seed) {
  Rows rows;
  bool found = false;
  for (const auto& [name, fn] : registry()) {
    if (scope == "all" || scope == name) {
      fn(rows, seed);
      found = true;
    }
  }
  if (!found) throw LookupError("unknown grad-check scope '" + scope + "'");
  return rows;
}

}  // namespace dpaf::net
