#ifndef DILO_NN_HPP
#define DILO_NN_HPP

#include <array>
#include <cstdint>
#include <functional>

#include "dilo/rng.hpp"
#include "dilo/tensor.hpp"

namespace dilo {

/// Encoder architecture: [conv3x3 pad1 -> ReLU -> maxpool2x2] x3 on a
/// 64x64x3 input (channels 16/32/64), global average pool over the 8x8
/// feature map, then a fully connected layer to the embedding.
namespace nn {

constexpr int kInputSize = 64;
constexpr int kInputChannels = 3;
constexpr std::array<int, 3> kStageChannels = {16, 32, 64};
constexpr int kFeatureMapSize = 8;
constexpr int kDefaultEmbedDim = 128;

template <typename T> struct EncoderParamsT {
  TensorT<T> conv1_w, conv1_b;
  TensorT<T> conv2_w, conv2_b;
  TensorT<T> conv3_w, conv3_b;
  TensorT<T> fc_w, fc_b;
  int embed_dim = kDefaultEmbedDim;
  std::uint64_t revision = 0; // bumped on every in-place update

  static EncoderParamsT zeros(int embed_dim = kDefaultEmbedDim);
  /// Kaiming-uniform fan-in weights, zero biases, seed controlled.
  static EncoderParamsT kaiming(std::uint64_t seed,
                                int embed_dim = kDefaultEmbedDim);

  std::array<TensorT<T> *, 8> tensors();
  std::array<const TensorT<T> *, 8> tensors() const;
  static std::array<const char *, 8> tensor_names();

  std::size_t parameter_count() const;
  std::vector<T> flatten() const;
  void unflatten(const std::vector<T> &flat);

  template <typename U> EncoderParamsT<U> cast() const {
    EncoderParamsT<U> out;
    out.embed_dim = embed_dim;
    out.conv1_w = conv1_w.template cast<U>();
    out.conv1_b = conv1_b.template cast<U>();
    out.conv2_w = conv2_w.template cast<U>();
    out.conv2_b = conv2_b.template cast<U>();
    out.conv3_w = conv3_w.template cast<U>();
    out.conv3_b = conv3_b.template cast<U>();
    out.fc_w = fc_w.template cast<U>();
    out.fc_b = fc_b.template cast<U>();
    return out;
  }
};

using EncoderParams = EncoderParamsT<float>;

/// Activations retained by the forward pass for the exact backward pass.
template <typename T> struct EncoderCacheT {
  int batch = 0;
  TensorT<T> input;
  TensorT<T> pre1, pre2, pre3;    // conv outputs, pre-ReLU
  TensorT<T> pool1, pool2, pool3; // post-ReLU, post-pool
  std::vector<std::uint8_t> arg1, arg2, arg3; // pool argmax, 0..3 per cell
  TensorT<T> gap;                 // N x 64
  std::uint64_t params_revision = 0;
};

using EncoderCache = EncoderCacheT<float>;

/// batch: N x 3 x 64 x 64 in [0,1]. Returns N x D embeddings (not yet
/// normalized); cache.pool3 is the N x 64 x 8 x 8 feature map used by the
/// masked-pooling baseline. Parallel over samples, deterministic.
template <typename T>
TensorT<T> encoder_forward(const EncoderParamsT<T> &params,
                           const TensorT<T> &batch, EncoderCacheT<T> &cache,
                           const T *gap_center = nullptr);

/// The linear head on one pooled 64-vector. Shared between the standard
/// forward pass and the masked-pooling path so both produce identical bits
/// for identical pooled inputs.
template <typename T>
void fc_apply(const EncoderParamsT<T> &params, const T *pooled, T *embedding);

/// Exact reverse-mode gradients. Maxpool routes to the argmax (first index
/// on ties); ReLU has zero gradient at zero. grad_input may be null when
/// input gradients are not needed. Throws internal_error if params changed
/// since the forward pass that built the cache.
/// gap_center, when given, is a constant vector subtracted from the pooled
/// features before the linear head (and must match the forward call). The
/// contrastive trainer uses it to keep the embedding geometry centered;
/// the offset folds into the fc bias for checkpoints, so a saved encoder
/// is always the plain architecture.
template <typename T>
void encoder_backward(const EncoderParamsT<T> &params,
                      const EncoderCacheT<T> &cache,
                      const TensorT<T> &grad_embeddings,
                      EncoderParamsT<T> &grad_params, TensorT<T> *grad_input,
                      const T *gap_center = nullptr);

/// v <- momentum*v + grad + weight_decay*param; param <- param - lr*v.
template <typename T> struct SgdStateT {
  EncoderParamsT<T> velocity;
};
using SgdState = SgdStateT<float>;

template <typename T>
void sgd_step(EncoderParamsT<T> &params, const EncoderParamsT<T> &grads,
              SgdStateT<T> &state, T lr, T momentum = T(0.9),
              T weight_decay = T(1e-4));

/// Central-difference gradient check over randomly sampled coordinates:
/// returns the max of |analytic-numeric| / max(|analytic|,|numeric|,1e-8).
double finite_diff_check(
    const std::function<double(const std::vector<double> &)> &loss_fn,
    const std::vector<double> &params,
    const std::vector<double> &analytic_grad, double epsilon = 1e-4,
    int num_coordinates = 200, std::uint64_t seed = 0);

} // namespace nn
} // namespace dilo

#endif
