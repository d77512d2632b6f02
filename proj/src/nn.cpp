#include "dilo/nn.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dilo {
namespace nn {

namespace {

// ---- per-sample kernels --------------------------------------------------

/// 3x3 convolution, zero padding 1, stride 1. in: C x H x W,
/// w: OC x C x 3 x 3, out: OC x H x W. Accumulates each output row across
/// every tap before storing, which keeps the row in registers and roughly
/// halves the memory traffic of a per-tap sweep.
template <typename T>
void conv3x3_forward(const T *__restrict__ in, const T *__restrict__ w,
                     const T *__restrict__ bias, T *__restrict__ out,
                     int channels_in, int channels_out, int h, int wd) {
  const std::size_t plane = static_cast<std::size_t>(h) * wd;
  std::vector<T> acc(wd);
  for (int oc = 0; oc < channels_out; ++oc) {
    T *__restrict__ outp = out + oc * plane;
    for (int y = 0; y < h; ++y) {
      T *__restrict__ a = acc.data();
      for (int x = 0; x < wd; ++x)
        a[x] = bias[oc];
      for (int ic = 0; ic < channels_in; ++ic) {
        const T *__restrict__ inp = in + ic * plane;
        const T *__restrict__ wk = w + ((oc * channels_in + ic) * 9);
        for (int ky = 0; ky < 3; ++ky) {
          const int yy = y + ky - 1;
          if (yy < 0 || yy >= h)
            continue;
          const T *__restrict__ irow = inp + static_cast<std::size_t>(yy) * wd;
          const T w0 = wk[ky * 3 + 0], w1 = wk[ky * 3 + 1], w2 = wk[ky * 3 + 2];
          a[0] += w1 * irow[0] + w2 * irow[1];
          for (int x = 1; x < wd - 1; ++x)
            a[x] += w0 * irow[x - 1] + w1 * irow[x] + w2 * irow[x + 1];
          a[wd - 1] += w0 * irow[wd - 2] + w1 * irow[wd - 1];
        }
      }
      std::copy(a, a + wd, outp + static_cast<std::size_t>(y) * wd);
    }
  }
}

/// Backward through the same convolution: input gradients (the transposed
/// convolution with the kernel mirrored), same row-buffered layout.
template <typename T>
void conv3x3_backward_input(const T *__restrict__ grad_out,
                            const T *__restrict__ w, T *__restrict__ grad_in,
                            int channels_in, int channels_out, int h, int wd) {
  const std::size_t plane = static_cast<std::size_t>(h) * wd;
  std::vector<T> acc(wd);
  for (int ic = 0; ic < channels_in; ++ic) {
    T *__restrict__ ginp = grad_in + ic * plane;
    for (int y = 0; y < h; ++y) {
      T *__restrict__ a = acc.data();
      for (int x = 0; x < wd; ++x)
        a[x] = T(0);
      for (int oc = 0; oc < channels_out; ++oc) {
        const T *__restrict__ gout = grad_out + oc * plane;
        const T *__restrict__ wk = w + ((oc * channels_in + ic) * 9);
        for (int ky = 0; ky < 3; ++ky) {
          const int gy = y - (ky - 1);
          if (gy < 0 || gy >= h)
            continue;
          const T *__restrict__ grow = gout + static_cast<std::size_t>(gy) * wd;
          const T w0 = wk[ky * 3 + 0], w1 = wk[ky * 3 + 1], w2 = wk[ky * 3 + 2];
          // grad_in[x] += sum_kx w[kx] * grad_out[x - (kx-1)]
          a[0] += w1 * grow[0] + w0 * grow[1];
          for (int x = 1; x < wd - 1; ++x)
            a[x] += w2 * grow[x - 1] + w1 * grow[x] + w0 * grow[x + 1];
          a[wd - 1] += w2 * grow[wd - 2] + w1 * grow[wd - 1];
        }
      }
      T *__restrict__ orow = ginp + static_cast<std::size_t>(y) * wd;
      for (int x = 0; x < wd; ++x)
        orow[x] += a[x];
    }
  }
}

/// Backward: weight and bias gradients (accumulated). One sweep per
/// (oc, ic, y, ky) gathers all three kx taps at once.
template <typename T>
void conv3x3_backward_params(const T *__restrict__ grad_out,
                             const T *__restrict__ in, T *__restrict__ grad_w,
                             T *__restrict__ grad_b, int channels_in,
                             int channels_out, int h, int wd) {
  const std::size_t plane = static_cast<std::size_t>(h) * wd;
  for (int oc = 0; oc < channels_out; ++oc) {
    const T *__restrict__ gout = grad_out + oc * plane;
    T bacc = T(0);
    for (std::size_t i = 0; i < plane; ++i)
      bacc += gout[i];
    grad_b[oc] += bacc;
    for (int ic = 0; ic < channels_in; ++ic) {
      const T *__restrict__ inp = in + ic * plane;
      T *__restrict__ gw = grad_w + ((oc * channels_in + ic) * 9);
      T a[9] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
      for (int y = 0; y < h; ++y) {
        const T *__restrict__ grow = gout + static_cast<std::size_t>(y) * wd;
        for (int ky = 0; ky < 3; ++ky) {
          const int yy = y + ky - 1;
          if (yy < 0 || yy >= h)
            continue;
          const T *__restrict__ irow = inp + static_cast<std::size_t>(yy) * wd;
          T a0 = T(0), a1 = T(0), a2 = T(0);
          a1 += grow[0] * irow[0];
          a2 += grow[0] * irow[1];
          for (int x = 1; x < wd - 1; ++x) {
            a0 += grow[x] * irow[x - 1];
            a1 += grow[x] * irow[x];
            a2 += grow[x] * irow[x + 1];
          }
          a0 += grow[wd - 1] * irow[wd - 2];
          a1 += grow[wd - 1] * irow[wd - 1];
          a[ky * 3 + 0] += a0;
          a[ky * 3 + 1] += a1;
          a[ky * 3 + 2] += a2;
        }
      }
      for (int k = 0; k < 9; ++k)
        gw[k] += a[k];
    }
  }
}

/// ReLU then 2x2 maxpool. Ties go to the first window index in row-major
/// order, matching the backward routing.
template <typename T>
void relu_pool_forward(const T *pre, T *pooled, std::uint8_t *argmax,
                       int channels, int h, int wd) {
  const int ph = h / 2, pw = wd / 2;
  for (int c = 0; c < channels; ++c) {
    const T *p = pre + static_cast<std::size_t>(c) * h * wd;
    T *o = pooled + static_cast<std::size_t>(c) * ph * pw;
    std::uint8_t *a = argmax + static_cast<std::size_t>(c) * ph * pw;
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x) {
        T best = T(0);
        int besti = 0;
        bool found = false;
        for (int i = 0; i < 4; ++i) {
          int yy = 2 * y + i / 2, xx = 2 * x + i % 2;
          T v = p[static_cast<std::size_t>(yy) * wd + xx];
          v = v > T(0) ? v : T(0);
          if (!found || v > best) {
            best = v;
            besti = i;
            found = true;
          }
        }
        o[static_cast<std::size_t>(y) * pw + x] = best;
        a[static_cast<std::size_t>(y) * pw + x] =
            static_cast<std::uint8_t>(besti);
      }
  }
}

template <typename T>
void relu_pool_backward(const T *grad_pooled, const T *pre,
                        const std::uint8_t *argmax, T *grad_pre, int channels,
                        int h, int wd) {
  const int ph = h / 2, pw = wd / 2;
  for (int c = 0; c < channels; ++c) {
    const T *g = grad_pooled + static_cast<std::size_t>(c) * ph * pw;
    const T *p = pre + static_cast<std::size_t>(c) * h * wd;
    const std::uint8_t *a = argmax + static_cast<std::size_t>(c) * ph * pw;
    T *gp = grad_pre + static_cast<std::size_t>(c) * h * wd;
    for (int y = 0; y < ph; ++y)
      for (int x = 0; x < pw; ++x) {
        int i = a[static_cast<std::size_t>(y) * pw + x];
        int yy = 2 * y + i / 2, xx = 2 * x + i % 2;
        // ReLU gradient is zero at and below zero.
        if (p[static_cast<std::size_t>(yy) * wd + xx] > T(0))
          gp[static_cast<std::size_t>(yy) * wd + xx] +=
              g[static_cast<std::size_t>(y) * pw + x];
      }
  }
}

struct StageDims {
  int cin, cout, h, w;
};
constexpr StageDims kStages[3] = {
    {kInputChannels, kStageChannels[0], 64, 64},
    {kStageChannels[0], kStageChannels[1], 32, 32},
    {kStageChannels[1], kStageChannels[2], 16, 16},
};

template <typename T> std::size_t plane(const StageDims &s) {
  return static_cast<std::size_t>(s.h) * s.w;
}

} // namespace

// ---- parameter containers --------------------------------------------------

template <typename T>
EncoderParamsT<T> EncoderParamsT<T>::zeros(int embed_dim) {
  EncoderParamsT<T> p;
  p.embed_dim = embed_dim;
  p.conv1_w = TensorT<T>({kStageChannels[0], kInputChannels, 3, 3});
  p.conv1_b = TensorT<T>({kStageChannels[0]});
  p.conv2_w = TensorT<T>({kStageChannels[1], kStageChannels[0], 3, 3});
  p.conv2_b = TensorT<T>({kStageChannels[1]});
  p.conv3_w = TensorT<T>({kStageChannels[2], kStageChannels[1], 3, 3});
  p.conv3_b = TensorT<T>({kStageChannels[2]});
  p.fc_w = TensorT<T>({embed_dim, kStageChannels[2]});
  p.fc_b = TensorT<T>({embed_dim});
  return p;
}

template <typename T>
EncoderParamsT<T> EncoderParamsT<T>::kaiming(std::uint64_t seed,
                                             int embed_dim) {
  EncoderParamsT<T> p = zeros(embed_dim);
  Rng rng(seed);
  auto init = [&](TensorT<T> &w, int fan_in) {
    double bound = std::sqrt(6.0 / fan_in);
    for (auto &v : w.data)
      v = static_cast<T>(rng.uniform(-bound, bound));
  };
  init(p.conv1_w, kInputChannels * 9);
  init(p.conv2_w, kStageChannels[0] * 9);
  init(p.conv3_w, kStageChannels[1] * 9);
  init(p.fc_w, kStageChannels[2]);
  return p;
}

template <typename T> std::array<TensorT<T> *, 8> EncoderParamsT<T>::tensors() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b,
          &conv3_w, &conv3_b, &fc_w,    &fc_b};
}

template <typename T>
std::array<const TensorT<T> *, 8> EncoderParamsT<T>::tensors() const {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b,
          &conv3_w, &conv3_b, &fc_w,    &fc_b};
}

template <typename T>
std::array<const char *, 8> EncoderParamsT<T>::tensor_names() {
  return {"conv1_w", "conv1_b", "conv2_w", "conv2_b",
          "conv3_w", "conv3_b", "fc_w",    "fc_b"};
}

template <typename T> std::size_t EncoderParamsT<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto *t : tensors())
    n += t->size();
  return n;
}

template <typename T> std::vector<T> EncoderParamsT<T>::flatten() const {
  std::vector<T> flat;
  flat.reserve(parameter_count());
  for (const auto *t : tensors())
    flat.insert(flat.end(), t->data.begin(), t->data.end());
  return flat;
}

template <typename T>
void EncoderParamsT<T>::unflatten(const std::vector<T> &flat) {
  if (flat.size() != parameter_count())
    throw dimension_error("EncoderParams::unflatten: size mismatch");
  std::size_t off = 0;
  for (auto *t : tensors()) {
    std::copy(flat.begin() + off, flat.begin() + off + t->size(),
              t->data.begin());
    off += t->size();
  }
  ++revision;
}

// ---- forward / backward ----------------------------------------------------

template <typename T>
TensorT<T> encoder_forward(const EncoderParamsT<T> &params,
                           const TensorT<T> &batch, EncoderCacheT<T> &cache,
                           const T *gap_center) {
  if (batch.shape.size() != 4 || batch.shape[1] != kInputChannels ||
      batch.shape[2] != kInputSize || batch.shape[3] != kInputSize)
    throw dimension_error("encoder_forward: expected N x 3 x 64 x 64 input");
  const int n = batch.shape[0];
  cache.batch = n;
  cache.params_revision = params.revision;
  cache.input = batch;
  cache.pre1 = TensorT<T>({n, kStages[0].cout, 64, 64});
  cache.pool1 = TensorT<T>({n, kStages[0].cout, 32, 32});
  cache.pre2 = TensorT<T>({n, kStages[1].cout, 32, 32});
  cache.pool2 = TensorT<T>({n, kStages[1].cout, 16, 16});
  cache.pre3 = TensorT<T>({n, kStages[2].cout, 16, 16});
  cache.pool3 = TensorT<T>({n, kStages[2].cout, 8, 8});
  cache.arg1.assign(cache.pool1.size(), 0);
  cache.arg2.assign(cache.pool2.size(), 0);
  cache.arg3.assign(cache.pool3.size(), 0);
  cache.gap = TensorT<T>({n, kStageChannels[2]});
  TensorT<T> emb({n, params.embed_dim});

  const std::size_t in_stride = batch.size() / n;
  const std::size_t pre1_s = cache.pre1.size() / n, pool1_s = cache.pool1.size() / n;
  const std::size_t pre2_s = cache.pre2.size() / n, pool2_s = cache.pool2.size() / n;
  const std::size_t pre3_s = cache.pre3.size() / n, pool3_s = cache.pool3.size() / n;

#pragma omp parallel for schedule(static)
  for (int s = 0; s < n; ++s) {
    const T *in = batch.ptr() + s * in_stride;
    T *pre1 = cache.pre1.ptr() + s * pre1_s;
    T *pool1 = cache.pool1.ptr() + s * pool1_s;
    T *pre2 = cache.pre2.ptr() + s * pre2_s;
    T *pool2 = cache.pool2.ptr() + s * pool2_s;
    T *pre3 = cache.pre3.ptr() + s * pre3_s;
    T *pool3 = cache.pool3.ptr() + s * pool3_s;

    conv3x3_forward(in, params.conv1_w.ptr(), params.conv1_b.ptr(), pre1,
                    kStages[0].cin, kStages[0].cout, 64, 64);
    relu_pool_forward(pre1, pool1, cache.arg1.data() + s * pool1_s,
                      kStages[0].cout, 64, 64);

    conv3x3_forward(pool1, params.conv2_w.ptr(), params.conv2_b.ptr(), pre2,
                    kStages[1].cin, kStages[1].cout, 32, 32);
    relu_pool_forward(pre2, pool2, cache.arg2.data() + s * pool2_s,
                      kStages[1].cout, 32, 32);

    conv3x3_forward(pool2, params.conv3_w.ptr(), params.conv3_b.ptr(), pre3,
                    kStages[2].cin, kStages[2].cout, 16, 16);
    relu_pool_forward(pre3, pool3, cache.arg3.data() + s * pool3_s,
                      kStages[2].cout, 16, 16);

    // Global average pool over the 8x8 map, then the linear head.
    T *gap = cache.gap.ptr() + static_cast<std::size_t>(s) * kStageChannels[2];
    for (int c = 0; c < kStageChannels[2]; ++c) {
      T acc = T(0);
      const T *cell = pool3 + static_cast<std::size_t>(c) * 64;
      for (int i = 0; i < 64; ++i)
        acc += cell[i];
      gap[c] = acc / T(64);
    }
    if (gap_center) {
      T centered[kStageChannels[2]];
      for (int c = 0; c < kStageChannels[2]; ++c)
        centered[c] = gap[c] - gap_center[c];
      fc_apply(params, centered,
               emb.ptr() + static_cast<std::size_t>(s) * params.embed_dim);
    } else {
      fc_apply(params, gap,
               emb.ptr() + static_cast<std::size_t>(s) * params.embed_dim);
    }
  }
  return emb;
}

template <typename T>
void fc_apply(const EncoderParamsT<T> &params, const T *pooled, T *embedding) {
  for (int d = 0; d < params.embed_dim; ++d) {
    T acc = params.fc_b.data[d];
    const T *wrow =
        params.fc_w.ptr() + static_cast<std::size_t>(d) * kStageChannels[2];
    for (int c = 0; c < kStageChannels[2]; ++c)
      acc += wrow[c] * pooled[c];
    embedding[d] = acc;
  }
}

template <typename T>
void encoder_backward(const EncoderParamsT<T> &params,
                      const EncoderCacheT<T> &cache,
                      const TensorT<T> &grad_embeddings,
                      EncoderParamsT<T> &grad_params, TensorT<T> *grad_input,
                      const T *gap_center) {
  if (cache.params_revision != params.revision)
    throw internal_error("encoder_backward: cache is stale (params changed "
                         "since the forward pass)");
  const int n = cache.batch;
  if (grad_embeddings.shape.size() != 2 || grad_embeddings.shape[0] != n ||
      grad_embeddings.shape[1] != params.embed_dim)
    throw dimension_error("encoder_backward: bad grad_embeddings shape");

  grad_params = EncoderParamsT<T>::zeros(params.embed_dim);
  if (grad_input)
    *grad_input = TensorT<T>({n, kInputChannels, kInputSize, kInputSize});

  const std::size_t in_stride = cache.input.size() / n;
  const std::size_t pre1_s = cache.pre1.size() / n, pool1_s = cache.pool1.size() / n;
  const std::size_t pre2_s = cache.pre2.size() / n, pool2_s = cache.pool2.size() / n;
  const std::size_t pre3_s = cache.pre3.size() / n, pool3_s = cache.pool3.size() / n;

  // Per-sample gradient buffers reduced in index order afterwards, so the
  // result does not depend on the thread count.
  std::vector<EncoderParamsT<T>> partial(
      static_cast<std::size_t>(n), EncoderParamsT<T>::zeros(params.embed_dim));

#pragma omp parallel
  {
    TensorT<T> gpool3({kStageChannels[2], 8, 8});
    TensorT<T> gpre3({kStageChannels[2], 16, 16});
    TensorT<T> gpool2({kStageChannels[1], 16, 16});
    TensorT<T> gpre2({kStageChannels[1], 32, 32});
    TensorT<T> gpool1({kStageChannels[0], 32, 32});
    TensorT<T> gpre1({kStageChannels[0], 64, 64});

#pragma omp for schedule(static)
    for (int s = 0; s < n; ++s) {
      EncoderParamsT<T> &g = partial[s];
      const T *gemb =
          grad_embeddings.ptr() + static_cast<std::size_t>(s) * params.embed_dim;
      const T *gap = cache.gap.ptr() + static_cast<std::size_t>(s) * kStageChannels[2];

      // FC backward; the weight gradient sees the centered input when a
      // center is in effect.
      std::vector<T> ggap(kStageChannels[2], T(0));
      for (int d = 0; d < params.embed_dim; ++d) {
        g.fc_b.data[d] += gemb[d];
        const T *wrow =
            params.fc_w.ptr() + static_cast<std::size_t>(d) * kStageChannels[2];
        T *gwrow =
            g.fc_w.ptr() + static_cast<std::size_t>(d) * kStageChannels[2];
        for (int c = 0; c < kStageChannels[2]; ++c) {
          T x = gap_center ? gap[c] - gap_center[c] : gap[c];
          gwrow[c] += gemb[d] * x;
          ggap[c] += gemb[d] * wrow[c];
        }
      }

      // GAP backward: spread evenly over the 8x8 cells.
      gpool3.fill(T(0));
      for (int c = 0; c < kStageChannels[2]; ++c) {
        T v = ggap[c] / T(64);
        T *cell = gpool3.ptr() + static_cast<std::size_t>(c) * 64;
        for (int i = 0; i < 64; ++i)
          cell[i] = v;
      }

      gpre3.fill(T(0));
      relu_pool_backward(gpool3.ptr(), cache.pre3.ptr() + s * pre3_s,
                         cache.arg3.data() + s * pool3_s, gpre3.ptr(),
                         kStageChannels[2], 16, 16);
      conv3x3_backward_params(gpre3.ptr(), cache.pool2.ptr() + s * pool2_s,
                              g.conv3_w.ptr(), g.conv3_b.ptr(), kStages[2].cin,
                              kStages[2].cout, 16, 16);
      gpool2.fill(T(0));
      conv3x3_backward_input(gpre3.ptr(), params.conv3_w.ptr(), gpool2.ptr(),
                             kStages[2].cin, kStages[2].cout, 16, 16);

      gpre2.fill(T(0));
      relu_pool_backward(gpool2.ptr(), cache.pre2.ptr() + s * pre2_s,
                         cache.arg2.data() + s * pool2_s, gpre2.ptr(),
                         kStageChannels[1], 32, 32);
      conv3x3_backward_params(gpre2.ptr(), cache.pool1.ptr() + s * pool1_s,
                              g.conv2_w.ptr(), g.conv2_b.ptr(), kStages[1].cin,
                              kStages[1].cout, 32, 32);
      gpool1.fill(T(0));
      conv3x3_backward_input(gpre2.ptr(), params.conv2_w.ptr(), gpool1.ptr(),
                             kStages[1].cin, kStages[1].cout, 32, 32);

      gpre1.fill(T(0));
      relu_pool_backward(gpool1.ptr(), cache.pre1.ptr() + s * pre1_s,
                         cache.arg1.data() + s * pool1_s, gpre1.ptr(),
                         kStageChannels[0], 64, 64);
      conv3x3_backward_params(gpre1.ptr(), cache.input.ptr() + s * in_stride,
                              g.conv1_w.ptr(), g.conv1_b.ptr(), kStages[0].cin,
                              kStages[0].cout, 64, 64);
      if (grad_input)
        conv3x3_backward_input(gpre1.ptr(), params.conv1_w.ptr(),
                               grad_input->ptr() + s * in_stride,
                               kStages[0].cin, kStages[0].cout, 64, 64);
    }
  }

  // Deterministic reduction in sample order.
  auto out = grad_params.tensors();
  for (int s = 0; s < n; ++s) {
    auto part = partial[s].tensors();
    for (std::size_t t = 0; t < out.size(); ++t)
      for (std::size_t i = 0; i < out[t]->size(); ++i)
        out[t]->data[i] += part[t]->data[i];
  }
}

template <typename T>
void sgd_step(EncoderParamsT<T> &params, const EncoderParamsT<T> &grads,
              SgdStateT<T> &state, T lr, T momentum, T weight_decay) {
  if (state.velocity.parameter_count() != params.parameter_count())
    state.velocity = EncoderParamsT<T>::zeros(params.embed_dim);
  auto p = params.tensors();
  auto g = grads.tensors();
  auto v = state.velocity.tensors();
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (!p[t]->same_shape(*g[t]))
      throw dimension_error("sgd_step: gradient shape mismatch");
    T *pp = p[t]->ptr();
    const T *gg = g[t]->ptr();
    T *vv = v[t]->ptr();
    const std::size_t m = p[t]->size();
    for (std::size_t i = 0; i < m; ++i) {
      vv[i] = momentum * vv[i] + gg[i] + weight_decay * pp[i];
      pp[i] -= lr * vv[i];
    }
  }
  ++params.revision;
}

double finite_diff_check(
    const std::function<double(const std::vector<double> &)> &loss_fn,
    const std::vector<double> &params,
    const std::vector<double> &analytic_grad, double epsilon,
    int num_coordinates, std::uint64_t seed) {
  if (params.size() != analytic_grad.size())
    throw dimension_error("finite_diff_check: grad size mismatch");
  Rng rng(seed);
  std::vector<int> coords(num_coordinates);
  for (int i = 0; i < num_coordinates; ++i)
    coords[i] = rng.uniform_int(0, static_cast<int>(params.size()) - 1);

  double max_rel = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : max_rel)
  for (int i = 0; i < num_coordinates; ++i) {
    std::vector<double> p = params;
    p[coords[i]] = params[coords[i]] + epsilon;
    double f_plus = loss_fn(p);
    p[coords[i]] = params[coords[i]] - epsilon;
    double f_minus = loss_fn(p);
    double numeric = (f_plus - f_minus) / (2.0 * epsilon);
    double analytic = analytic_grad[coords[i]];
    double rel = std::abs(analytic - numeric) /
                 std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

// Explicit instantiations: float for training, double for gradient checks.
template struct EncoderParamsT<float>;
template struct EncoderParamsT<double>;
template TensorT<float> encoder_forward<float>(const EncoderParamsT<float> &,
                                               const TensorT<float> &,
                                               EncoderCacheT<float> &,
                                               const float *);
template TensorT<double> encoder_forward<double>(const EncoderParamsT<double> &,
                                                 const TensorT<double> &,
                                                 EncoderCacheT<double> &,
                                                 const double *);
template void encoder_backward<float>(const EncoderParamsT<float> &,
                                      const EncoderCacheT<float> &,
                                      const TensorT<float> &,
                                      EncoderParamsT<float> &,
                                      TensorT<float> *, const float *);
template void encoder_backward<double>(const EncoderParamsT<double> &,
                                       const EncoderCacheT<double> &,
                                       const TensorT<double> &,
                                       EncoderParamsT<double> &,
                                       TensorT<double> *, const double *);
template void fc_apply<float>(const EncoderParamsT<float> &, const float *,
                              float *);
template void fc_apply<double>(const EncoderParamsT<double> &, const double *,
                               double *);
template void sgd_step<float>(EncoderParamsT<float> &,
                              const EncoderParamsT<float> &,
                              SgdStateT<float> &, float, float, float);
template void sgd_step<double>(EncoderParamsT<double> &,
                               const EncoderParamsT<double> &,
                               SgdStateT<double> &, double, double, double);

} // namespace nn
} // namespace dilo
