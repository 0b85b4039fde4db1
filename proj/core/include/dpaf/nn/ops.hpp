#pragma once

#include <cstddef>

#include "dpaf/tensor.hpp"

// Stateless differentiable primitives. Every forward has a matching
// backward that returns the input gradient and *accumulates* parameter
// gradients into caller-provided buffers.
namespace dpaf::nn {

struct ConvGeometry {
  std::size_t stride = 1;
  std::size_t padding = 0;
};

/// Output extent of a convolution: floor((in + 2p - k) / s) + 1.
std::size_t conv_output_size(std::size_t in, std::size_t kernel, ConvGeometry g);

/// Cross-correlation of x (N x C x H x W) with weight (O x C x k x k).
/// `bias` is either empty or has O entries.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 ConvGeometry g);

/// Writes dx (if non-null) and adds into dweight / dbias (if non-null).
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                     ConvGeometry g, Tensor<T>* dx, Tensor<T>* dweight, Tensor<T>* dbias);

template <typename T>
Tensor<T> relu(const Tensor<T>& x);
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& x, const Tensor<T>& dy);

// GELU, tanh form: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3))).
inline constexpr double kGeluSqrt2OverPi = 0.7978845608028654;
inline constexpr double kGeluCubic = 0.044715;

template <typename T>
Tensor<T> gelu(const Tensor<T>& x);
template <typename T>
Tensor<T> gelu_backward(const Tensor<T>& x, const Tensor<T>& dy);

/// Bilinear x2 upsampling with half-pixel centers (source coordinate
/// (dst + 0.5) / 2 - 0.5, clamped at the border).
template <typename T>
Tensor<T> upsample_bilinear2x(const Tensor<T>& x);
template <typename T>
Tensor<T> upsample_bilinear2x_backward(const Shape& input_shape, const Tensor<T>& dy);

/// y = x W^T + b over the last axis. W is out x in; b empty or out.
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);
template <typename T>
void linear_backward(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& dy,
                     Tensor<T>* dx, Tensor<T>* dweight, Tensor<T>* dbias);

template <typename T>
struct LayerNormStats {
  std::vector<T> mean;
  std::vector<T> rstd;
};

/// Normalizes over the last axis; gamma and beta have that axis's length.
template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     T eps, LayerNormStats<T>* stats);
template <typename T>
Tensor<T> layer_norm_backward(const Tensor<T>& x, const Tensor<T>& gamma,
                              const LayerNormStats<T>& stats, const Tensor<T>& dy,
                              Tensor<T>* dgamma, Tensor<T>* dbeta);

/// softmax(Q K^T / sqrt(d_k)) V for rank-2 Q (n x d_k), K (m x d_k), V (m x d_v).
/// Rows are max-shifted before exponentiation. `probs`, if given, receives
/// the n x m attention matrix.
template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                               Tensor<T>* probs = nullptr);

template <typename T>
void scaled_dot_attention_backward(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                                   const Tensor<T>& probs, const Tensor<T>& dy, Tensor<T>& dq,
                                   Tensor<T>& dk, Tensor<T>& dv);

/// 2x2 stride-2 max pooling (floor on odd sizes); `argmax` stores flat input indices.
template <typename T>
Tensor<T> max_pool2x2(const Tensor<T>& x, std::vector<std::size_t>* argmax);
template <typename T>
Tensor<T> max_pool2x2_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                               const Tensor<T>& dy);

template <typename T>
T sigmoid(T x);

}  // namespace dpaf::nn
