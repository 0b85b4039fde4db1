#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numeric>

#include "dpaf/net/grad_suite.hpp"
#include "dpaf/nn/blocks.hpp"
#include "dpaf/nn/grad_check.hpp"
#include "dpaf/nn/serialize.hpp"
#include "oracles.hpp"

using namespace dpaf;
using namespace dpaf::nn;
using dpaf::oracle::max_abs_diff;
using dpaf::oracle::random_tensor;
using D = double;

namespace {

double sigmoid_d(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void zero_all(Param<D>& p) { p.value.fill(0.0); }

}  // namespace

TEST(Conv2d, OutputSizeFormula) {
  EXPECT_EQ(conv_output_size(5, 3, {1, 1}), 5u);
  EXPECT_EQ(conv_output_size(5, 3, {2, 1}), 3u);
  EXPECT_EQ(conv_output_size(8, 3, {2, 1}), 4u);
  EXPECT_EQ(conv_output_size(4, 1, {1, 0}), 4u);
}

TEST(Conv2d, IdentityKernel) {
  const auto x = random_tensor({2, 3, 4, 5}, 1);
  Tensor<D> w({3, 3, 1, 1});
  for (std::size_t c = 0; c < 3; ++c) w.at(c, c, 0, 0) = 1.0;
  EXPECT_EQ(conv2d(x, w, Tensor<D>{}, {1, 0}), x);
}

TEST(Conv2d, CountingKernel) {
  const Tensor<D> x({1, 1, 5, 5}, 1.0);
  const Tensor<D> w({1, 1, 3, 3}, 1.0);
  const auto y = conv2d(x, w, Tensor<D>{}, {1, 1});
  EXPECT_EQ(y.at(0, 0, 2, 2), 9.0);
  EXPECT_EQ(y.at(0, 0, 0, 0), 4.0);
  EXPECT_EQ(y.at(0, 0, 4, 4), 4.0);
  EXPECT_EQ(y.at(0, 0, 0, 2), 6.0);
}

TEST(Conv2d, MatchesNestedLoopOracle) {
  const auto x = random_tensor({1, 2, 5, 5}, 2);
  const auto w = random_tensor({3, 2, 3, 3}, 3);
  const auto b = random_tensor({3}, 4);
  for (std::size_t stride : {1u, 2u})
    for (std::size_t pad : {0u, 1u}) {
      EXPECT_LT(max_abs_diff(conv2d(x, w, b, {stride, pad}), oracle::naive_conv2d(x, w, b, stride, pad)), 1e-12);
    }
  EXPECT_THROW(conv2d(x, random_tensor({3, 4, 3, 3}, 1), b, {1, 1}), ShapeError);
}

TEST(Conv2d, BackwardMatchesFiniteDifferencesInFloat) {
  auto x = random_tensor<float>({1, 2, 4, 4}, 5);
  auto w = random_tensor<float>({2, 2, 3, 3}, 6);
  const auto b = random_tensor<float>({2}, 7);
  const auto r = random_tensor<float>({1, 2, 4, 4}, 8);
  Tensor<float> dx, dw(w.shape());
  conv2d_backward(x, w, r, {1, 1}, &dx, &dw, static_cast<Tensor<float>*>(nullptr));
  const std::function<float()> loss = [&] { return dot(conv2d(x, w, b, {1, 1}), r); };
  EXPECT_LT(check_gradient<float>("x", x, dx, loss, 1e-2).rel_error, 1e-2);
  EXPECT_LT(check_gradient<float>("w", w, dw, loss, 1e-2).rel_error, 1e-2);
}

TEST(ResBlock, ZeroWeightsIsIdentity) {
  ParamStore<D> store;
  ResBlock<D> block(store, "res", 3, 1);
  for (std::size_t i = 0; i < store.entries(); ++i) zero_all(store.at(i));
  const auto x = random_tensor({2, 3, 4, 4}, 9);
  ResBlock<D>::Cache cache;
  EXPECT_EQ(block.forward(x, &cache), x);
  const auto dy = random_tensor({2, 3, 4, 4}, 10);
  EXPECT_EQ(block.backward(cache, dy), dy);
  EXPECT_THROW(block.forward(random_tensor({1, 2, 4, 4}, 1)), ShapeError);
}

TEST(ChannelAttention, MatchesPooledMlpOracle) {
  ParamStore<D> store;
  ChannelAttention<D> ca(store, "ca", 4, 2, 11);
  const auto x = random_tensor({1, 4, 3, 3}, 12);
  const auto& w0 = ca.w0().value;  // 2 x 4
  const auto& w1 = ca.w1().value;  // 4 x 2
  std::vector<double> avg(4, 0.0), mx(4, -1e300);
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t p = 0; p < 9; ++p) {
      avg[c] += x[c * 9 + p] / 9.0;
      mx[c] = std::max(mx[c], x[c * 9 + p]);
    }
  auto mlp = [&](const std::vector<double>& v) {
    std::vector<double> hidden(2, 0.0), out(4, 0.0);
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t c = 0; c < 4; ++c) hidden[j] += w0[j * 4 + c] * v[c];
      hidden[j] = std::max(hidden[j], 0.0);
    }
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t j = 0; j < 2; ++j) out[c] += w1[c * 2 + j] * hidden[j];
    return out;
  };
  const auto a = mlp(avg), m = mlp(mx);
  const auto y = ca.forward(x);
  const auto gate = ca.gate(x);
  for (std::size_t c = 0; c < 4; ++c) {
    const double g = sigmoid_d(a[c] + m[c]);
    EXPECT_NEAR(gate[c], g, 1e-12);
    for (std::size_t p = 0; p < 9; ++p) EXPECT_NEAR(y[c * 9 + p], g * x[c * 9 + p], 1e-12);
  }
}

TEST(ChannelAttention, ConstantInputDoublesThePooledPath) {
  ParamStore<D> store;
  ChannelAttention<D> ca(store, "ca", 4, 4, 3);
  Tensor<D> x({1, 4, 2, 2});
  for (std::size_t c = 0; c < 4; ++c)
    for (std::size_t p = 0; p < 4; ++p) x[c * 4 + p] = 0.3 * c - 0.5;
  const auto& w0 = ca.w0().value;
  const auto& w1 = ca.w1().value;
  double hidden = 0.0;
  for (std::size_t c = 0; c < 4; ++c) hidden += w0[c] * (0.3 * c - 0.5);
  hidden = std::max(hidden, 0.0);
  const auto gate = ca.gate(x);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(gate[c], sigmoid_d(2.0 * w1[c] * hidden), 1e-12);
}

TEST(ChannelAttention, GateInUnitIntervalAndChannelEquivariant) {
  ParamStore<D> s1, s2;
  ChannelAttention<D> a(s1, "ca", 4, 2, 5), b(s2, "ca", 4, 2, 6);
  const std::array<std::size_t, 4> perm{2, 0, 3, 1};
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t c = 0; c < 4; ++c) {
      b.w0().value[j * 4 + c] = a.w0().value[j * 4 + perm[c]];
      b.w1().value[c * 2 + j] = a.w1().value[perm[c] * 2 + j];
    }
  const auto x = random_tensor({2, 4, 3, 3}, 7, -3, 3);
  Tensor<D> xp(x.shape());
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t p = 0; p < 9; ++p) xp[(n * 4 + c) * 9 + p] = x[(n * 4 + perm[c]) * 9 + p];
  const auto ga = a.gate(x), gb = b.gate(xp);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 4; ++c) {
      EXPECT_GT(ga[n * 4 + c], 0.0);
      EXPECT_LT(ga[n * 4 + c], 1.0);
      EXPECT_NEAR(gb[n * 4 + c], ga[n * 4 + perm[c]], 1e-14);
    }
  ParamStore<D> s3;
  EXPECT_THROW(ChannelAttention<D>(s3, "bad", 6, 4, 1), ConfigError);
}

TEST(ScaledDotAttention, ZeroQueryAveragesValues) {
  const Tensor<D> q({3, 2}, 0.0);
  const auto k = random_tensor({4, 2}, 1), v = random_tensor({4, 3}, 2);
  const auto y = scaled_dot_attention(q, k, v);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t t = 0; t < 3; ++t) {
      double mean = 0.0;
      for (std::size_t j = 0; j < 4; ++j) mean += v[j * 3 + t] / 4.0;
      EXPECT_NEAR(y[i * 3 + t], mean, 1e-15);
    }
}

TEST(ScaledDotAttention, SingleTokenReturnsValue) {
  const auto q = random_tensor({1, 2}, 3), k = random_tensor({1, 2}, 4), v = random_tensor({1, 5}, 5);
  EXPECT_EQ(scaled_dot_attention(q, k, v), v);
}

TEST(ScaledDotAttention, MatchesDirectFormulaAndRowsSumToOne) {
  const auto q = random_tensor({3, 2}, 6, -3, 3), k = random_tensor({3, 2}, 7, -3, 3), v = random_tensor({3, 2}, 8);
  Tensor<D> probs;
  EXPECT_LT(max_abs_diff(scaled_dot_attention(q, k, v, &probs), oracle::naive_attention(q, k, v)), 1e-12);
  for (std::size_t i = 0; i < 3; ++i) {
    const double row = probs[i * 3] + probs[i * 3 + 1] + probs[i * 3 + 2];
    EXPECT_NEAR(row, 1.0, 1e-12);
  }
  EXPECT_THROW(scaled_dot_attention(q, random_tensor({3, 3}, 1), v), ShapeError);
}

TEST(MultiHeadAttention, SingleHeadIsProjectedAttention) {
  ParamStore<D> store;
  MultiHeadAttention<D> mha(store, "mha", 4, 1, 3);
  const auto x = random_tensor({5, 4}, 9);
  const auto q = mha.query().forward(x), k = mha.key().forward(x), v = mha.value().forward(x);
  const auto expected = mha.output().forward(oracle::naive_attention(q, k, v));
  EXPECT_LT(max_abs_diff(mha.forward(x), expected), 1e-12);
}

TEST(MultiHeadAttention, MatchesPerHeadOracle) {
  ParamStore<D> store;
  MultiHeadAttention<D> mha(store, "mha", 4, 2, 13);
  for (std::size_t i = 0; i < store.entries(); ++i) {
    auto& p = store.at(i);
    if (p.name.ends_with("bias")) p.value = random_tensor(p.value.shape(), 100 + i);
  }
  const auto x = random_tensor({4, 4}, 14);
  const auto q = mha.query().forward(x), k = mha.key().forward(x), v = mha.value().forward(x);
  Tensor<D> mixed({4, 4});
  for (std::size_t h = 0; h < 2; ++h) {
    Tensor<D> qh({4, 2}), kh({4, 2}), vh({4, 2});
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t t = 0; t < 2; ++t) {
        qh[i * 2 + t] = q[i * 4 + h * 2 + t];
        kh[i * 2 + t] = k[i * 4 + h * 2 + t];
        vh[i * 2 + t] = v[i * 4 + h * 2 + t];
      }
    const auto out = oracle::naive_attention(qh, kh, vh);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t t = 0; t < 2; ++t) mixed[i * 4 + h * 2 + t] = out[i * 2 + t];
  }
  EXPECT_LT(max_abs_diff(mha.forward(x), mha.output().forward(mixed)), 1e-12);
}

TEST(MultiHeadAttention, TokenPermutationEquivariant) {
  ParamStore<D> store;
  MultiHeadAttention<D> mha(store, "mha", 8, 2, 15);
  const auto x = random_tensor({6, 8}, 16);
  const std::array<std::size_t, 6> perm{3, 5, 0, 1, 4, 2};
  Tensor<D> xp(x.shape());
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t t = 0; t < 8; ++t) xp[i * 8 + t] = x[perm[i] * 8 + t];
  const auto y = mha.forward(x), yp = mha.forward(xp);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t t = 0; t < 8; ++t) EXPECT_NEAR(yp[i * 8 + t], y[perm[i] * 8 + t], 1e-13);
  ParamStore<D> s2;
  EXPECT_THROW(MultiHeadAttention<D>(s2, "bad", 6, 4, 1), ConfigError);
}

TEST(TransformerBlock, ZeroResidualBranchesAreIdentity) {
  ParamStore<D> store;
  TransformerBlock<D> block(store, "tb", 8, 2, 2, 17);
  zero_all(block.attention().output().weight());
  zero_all(*block.attention().output().bias());
  zero_all(block.fc2().weight());
  zero_all(*block.fc2().bias());
  for (std::size_t n : {1u, 3u, 7u}) {
    const auto x = random_tensor({n, 8}, 18 + n);
    EXPECT_EQ(block.forward(x), x);
  }
}

TEST(TransformerBlock, ShapeContract) {
  ParamStore<D> store;
  TransformerBlock<D> block(store, "tb", 8, 4, 2, 19);
  for (std::size_t n : {1u, 2u, 9u}) EXPECT_EQ(block.forward(random_tensor({2, n, 8}, n)).shape(), (Shape{2, n, 8}));
  EXPECT_THROW(block.forward(random_tensor({3, 6}, 1)), ShapeError);
}

TEST(PatchEmbed, TokenCountAndWholeImagePatch) {
  ParamStore<D> store;
  PatchEmbed<D> embed(store, "pe", 3, 2, 5, 20);
  EXPECT_EQ(embed.forward(random_tensor({2, 3, 6, 4}, 1)).shape(), (Shape{2, 6, 5}));
  ParamStore<D> s2;
  PatchEmbed<D> whole(s2, "pe", 3, 4, 5, 20);
  EXPECT_EQ(whole.forward(random_tensor({1, 3, 4, 4}, 2)).shape(), (Shape{1, 1, 5}));
  EXPECT_THROW(embed.forward(random_tensor({1, 3, 5, 4}, 3)), ShapeError);
}

TEST(PatchEmbed, IdentityProjectionFlattensPixels) {
  ParamStore<D> store;
  PatchEmbed<D> embed(store, "pe", 1, 2, 4, 21);
  auto& w = embed.projection().weight().value;
  w.fill(0.0);
  for (std::size_t i = 0; i < 4; ++i) w[i * 4 + i] = 1.0;
  embed.projection().bias()->value.fill(0.0);
  const Tensor<D> x({1, 1, 2, 2}, std::vector<D>{0.1, 0.2, 0.3, 0.4});
  const auto tokens = embed.forward(x);
  ASSERT_EQ(tokens.shape(), (Shape{1, 1, 4}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(tokens[i], x[i]);
}

TEST(PatchEmbed, PatchifyRoundTrip) {
  const auto x = random_tensor({2, 3, 8, 4}, 22);
  EXPECT_EQ(unpatchify(patchify(x, 2), 3, 4, 2, 2), x);
}

TEST(PatchUnembed, RestoresSpatialShape) {
  ParamStore<D> store;
  PatchEmbed<D> embed(store, "pe", 3, 2, 6, 23);
  PatchUnembed<D> unembed(store, "pu", 6, 3, 2, 24);
  const auto x = random_tensor({1, 3, 6, 8}, 25);
  EXPECT_EQ(unembed.forward(embed.forward(x), 3, 4).shape(), x.shape());
}

TEST(RestorationLayer, UpsamplePreservesConstants) {
  const Tensor<D> x({1, 2, 3, 5}, 0.37);
  const auto y = upsample_bilinear2x(x);
  ASSERT_EQ(y.shape(), (Shape{1, 2, 6, 10}));
  for (double v : y.values()) EXPECT_NEAR(v, 0.37, 1e-15);
}

TEST(RestorationLayer, UpsampleMatchesHalfPixelWeights) {
  const Tensor<D> x({1, 1, 2, 2}, std::vector<D>{1.0, 2.0, 3.0, 5.0});
  const std::array<std::array<double, 2>, 4> taps{{{1.0, 0.0}, {0.75, 0.25}, {0.25, 0.75}, {0.0, 1.0}}};
  const auto y = upsample_bilinear2x(x);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double expected = 0.0;
      for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t b = 0; b < 2; ++b) expected += taps[i][a] * taps[j][b] * x[a * 2 + b];
      EXPECT_NEAR(y.at(0, 0, i, j), expected, 1e-15);
    }
}

TEST(RestorationLayer, DoublesResolutionAndHalvesChannels) {
  ParamStore<D> store;
  RestorationLayer<D> layer(store, "rl", 8, 4, 26);
  EXPECT_EQ(layer.forward(random_tensor({2, 8, 3, 5}, 1)).shape(), (Shape{2, 4, 6, 10}));
}

TEST(Gelu, TanhApproximationConstants) {
  const Tensor<D> x({3}, std::vector<D>{-1.0, 0.0, 2.0});
  const auto y = gelu(x);
  for (std::size_t i = 0; i < 3; ++i) {
    const double v = x[i];
    EXPECT_NEAR(y[i], 0.5 * v * (1 + std::tanh(std::sqrt(2 / M_PI) * (v + 0.044715 * v * v * v))), 1e-15);
  }
}

TEST(Blocks, ForwardIsDeterministic) {
  ParamStore<D> s1, s2;
  TransformerBlock<D> a(s1, "tb", 8, 2, 2, 31), b(s2, "tb", 8, 2, 2, 31);
  const auto x = random_tensor({5, 8}, 32);
  EXPECT_EQ(a.forward(x), b.forward(x));
  for (std::size_t i = 0; i < s1.entries(); ++i) EXPECT_EQ(s1.at(i).value, s2.at(i).value);
}

TEST(ParamStore, RejectsDuplicatesAndUnknownNames) {
  ParamStore<D> store;
  store.add("a", {2, 2});
  EXPECT_THROW(store.add("a", {1}), ConfigError);
  EXPECT_THROW(store.get("b"), LookupError);
  EXPECT_EQ(store.scalar_count(), 4u);
}

TEST(Container, BitExactRoundTrip) {
  Container c;
  const auto f = random_tensor<float>({3, 2, 2}, 40);
  auto d = random_tensor<double>({5}, 41);
  d[0] = -0.0;
  d[1] = 1e-310;
  c.add_tensor("f", f);
  c.add_tensor("d", d);
  c.add_text("t", "hello");
  const auto back = Container::decode(c.encode());
  EXPECT_EQ(back.tensor<float>("f"), f);
  const auto d2 = back.tensor<double>("d");
  EXPECT_EQ(std::memcmp(d2.data(), d.data(), d.size() * sizeof(double)), 0);
  EXPECT_EQ(back.text("t"), "hello");
  EXPECT_EQ(back.encode(), c.encode());
  EXPECT_THROW(back.tensor<double>("f"), ConfigError);
  EXPECT_THROW(back.entry("missing"), LookupError);
  EXPECT_THROW(Container::decode("NOTMAGIC"), ConfigError);
  const std::string bytes = c.encode();
  EXPECT_THROW(Container::decode(bytes.substr(0, bytes.size() - 1)), ConfigError);
}

TEST(Container, RestoreNamesTheOffendingEntry) {
  ParamStore<D> src, dst;
  src.add("w", {2, 3});
  dst.add("w", {3, 2});
  Container c;
  store_params(c, src);
  try {
    restore_params(c, dst);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'w'"), std::string::npos);
  }
}

TEST(GradSuite, EveryScopePassesAndIsRepeatable) {
  for (const auto& scope : net::grad_check_scopes()) {
    if (scope == "model") continue;  // covered by the acceptance suite
    const auto rows = net::run_grad_check(scope, 3);
    ASSERT_FALSE(rows.empty()) << scope;
    const auto again = net::run_grad_check(scope, 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      EXPECT_TRUE(rows[i].pass()) << rows[i].scope << " " << rows[i].tensor << " " << rows[i].rel_error;
      EXPECT_EQ(rows[i].rel_error, again[i].rel_error);
    }
  }
  EXPECT_THROW(net::run_grad_check("no_such_block"), LookupError);
}
