#include "dilo/diagnose.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dilo/contrastive.hpp"
#include "dilo/trainer.hpp"

namespace dilo {

std::vector<float> embed_images(const nn::EncoderParams &params,
                                const std::vector<const Image *> &images,
                                bool normalize) {
  const int n = static_cast<int>(images.size());
  const int dim = params.embed_dim;
  std::vector<float> out(static_cast<std::size_t>(n) * dim);
  const int bs = 64;
  for (int start = 0; start < n; start += bs) {
    int count = std::min(bs, n - start);
    Tensor batch({count, 3, nn::kInputSize, nn::kInputSize});
    const std::size_t stride =
        static_cast<std::size_t>(3) * nn::kInputSize * nn::kInputSize;
    for (int j = 0; j < count; ++j) {
      const Image &img = *images[start + j];
      if (img.height != nn::kInputSize || img.width != nn::kInputSize ||
          img.channels != 3)
        throw dimension_error("embed_images: expected 64x64x3 images");
      image_to_chw(img, batch.ptr() + j * stride);
    }
    nn::EncoderCache cache;
    Tensor emb = nn::encoder_forward(params, batch, cache);
    for (int j = 0; j < count; ++j) {
      float *dst = out.data() + static_cast<std::size_t>(start + j) * dim;
      std::copy(emb.ptr() + static_cast<std::size_t>(j) * dim,
                emb.ptr() + static_cast<std::size_t>(j + 1) * dim, dst);
      if (normalize)
        l2_normalize_inplace(dst, dim);
    }
  }
  return out;
}

EmbeddingBank embed_scenes(const nn::EncoderParams &params,
                           const shapesworld::Dataset &dataset,
                           const std::vector<int> &indices) {
  EmbeddingBank bank;
  bank.count = static_cast<int>(indices.size());
  bank.dim = params.embed_dim;
  std::vector<const Image *> images;
  images.reserve(indices.size());
  for (int i : indices) {
    images.push_back(&dataset.scenes[i].image);
    bank.shape_class.push_back(dataset.scenes[i].shape_class);
    bank.background_family.push_back(dataset.scenes[i].background_family);
  }
  bank.data = embed_images(params, images, true);
  return bank;
}

std::vector<std::pair<int, float>> knn_retrieve(const EmbeddingBank &bank,
                                                const float *query, int k) {
  if (bank.count == 0)
    throw parameter_error("knn_retrieve: empty bank");
  if (k < 1 || k > bank.count)
    throw parameter_error("knn_retrieve: k out of range");
  std::vector<std::pair<int, float>> scored(bank.count);
  for (int i = 0; i < bank.count; ++i) {
    const float *r = bank.row(i);
    double s = 0.0;
    for (int d = 0; d < bank.dim; ++d)
      s += static_cast<double>(query[d]) * r[d];
    scored[i] = {i, static_cast<float>(s)};
  }
  // Descending similarity, ties to the lower index.
  std::partial_sort(scored.begin(), scored.begin() + k, scored.end(),
                    [](const auto &a, const auto &b) {
                      if (a.second != b.second)
                        return a.second > b.second;
                      return a.first < b.first;
                    });
  scored.resize(k);
  return scored;
}

double knn_classify(const EmbeddingBank &bank, const std::vector<int> &bank_labels,
                    const EmbeddingBank &queries,
                    const std::vector<int> &query_labels,
                    const KnnOptions &opts) {
  if (static_cast<int>(bank_labels.size()) != bank.count ||
      static_cast<int>(query_labels.size()) != queries.count)
    throw dimension_error("knn_classify: label count mismatch");
  int classes = 0;
  for (int l : bank_labels)
    classes = std::max(classes, l + 1);

  std::size_t correct = 0;
  for (int qi = 0; qi < queries.count; ++qi) {
    int k = opts.k;
    int fetch = opts.exclude_self ? std::min(bank.count, k + 1) : k;
    auto top = knn_retrieve(bank, queries.row(qi), fetch);
    std::vector<double> votes(classes, 0.0);
    int used = 0;
    for (const auto &[idx, sim] : top) {
      if (opts.exclude_self && idx == qi)
        continue;
      if (used == k)
        break;
      double w = opts.similarity_weighted ? std::exp(sim / opts.tau) : 1.0;
      votes[bank_labels[idx]] += w;
      ++used;
    }
    int best = static_cast<int>(std::max_element(votes.begin(), votes.end()) -
                                votes.begin());
    if (best == query_labels[qi])
      ++correct;
  }
  return static_cast<double>(correct) / queries.count;
}

// ---------------------------------------------------------------------------
// linear probe

namespace {

double probe_accuracy(const std::vector<float> &w, const std::vector<float> &b,
                      int dim, int classes, const std::vector<float> &x,
                      const std::vector<int> &y) {
  const int n = static_cast<int>(y.size());
  if (n == 0)
    return 0.0;
  std::size_t correct = 0;
  for (int i = 0; i < n; ++i) {
    const float *xi = x.data() + static_cast<std::size_t>(i) * dim;
    int best = 0;
    double best_score = -1e300;
    for (int c = 0; c < classes; ++c) {
      const float *wc = w.data() + static_cast<std::size_t>(c) * dim;
      double s = b[c];
      for (int d = 0; d < dim; ++d)
        s += static_cast<double>(wc[d]) * xi[d];
      if (s > best_score) {
        best_score = s;
        best = c;
      }
    }
    if (best == y[i])
      ++correct;
  }
  return static_cast<double>(correct) / n;
}

} // namespace

ProbeResult linear_probe(const std::vector<float> &train_x,
                         const std::vector<int> &train_y,
                         const std::vector<float> &val_x,
                         const std::vector<int> &val_y, int dim, int classes,
                         const ProbeConfig &cfg) {
  const int n = static_cast<int>(train_y.size());
  if (n == 0)
    throw parameter_error("linear_probe: empty training set");
  if (train_x.size() != static_cast<std::size_t>(n) * dim)
    throw dimension_error("linear_probe: training matrix size mismatch");
  {
    int distinct = 0;
    std::vector<std::uint8_t> seen(classes, 0);
    for (int y : train_y) {
      if (y < 0 || y >= classes)
        throw parameter_error("linear_probe: label out of range");
      if (!seen[y]) {
        seen[y] = 1;
        ++distinct;
      }
    }
    if (distinct < 2)
      throw parameter_error("linear_probe: training labels are a single class");
  }

  ProbeResult res;
  res.classes = classes;
  res.dim = dim;
  res.weights.assign(static_cast<std::size_t>(classes) * dim, 0.0f);
  res.bias.assign(classes, 0.0f);
  std::vector<float> vw(res.weights.size(), 0.0f), vb(classes, 0.0f);

  res.best_val_accuracy =
      probe_accuracy(res.weights, res.bias, dim, classes, val_x, val_y);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> logits(classes);
  std::vector<float> gw(res.weights.size());
  std::vector<float> gb(classes);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng(mix64(cfg.seed ^ (0x9b0beULL + epoch)));
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[rng.uniform_int(0, i)]);
    double lr = cfg.lr * std::pow(cfg.decay_factor, epoch / cfg.decay_every);

    for (int start = 0; start < n; start += cfg.batch_size) {
      int count = std::min(cfg.batch_size, n - start);
      std::fill(gw.begin(), gw.end(), 0.0f);
      std::fill(gb.begin(), gb.end(), 0.0f);
      for (int j = 0; j < count; ++j) {
        int i = order[start + j];
        const float *xi = train_x.data() + static_cast<std::size_t>(i) * dim;
        for (int c = 0; c < classes; ++c) {
          const float *wc = res.weights.data() + static_cast<std::size_t>(c) * dim;
          double s = res.bias[c];
          for (int d = 0; d < dim; ++d)
            s += static_cast<double>(wc[d]) * xi[d];
          logits[c] = s;
        }
        double mx = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (auto &l : logits) {
          l = std::exp(l - mx);
          z += l;
        }
        for (int c = 0; c < classes; ++c) {
          double p = logits[c] / z;
          double g = (p - (c == train_y[i] ? 1.0 : 0.0)) / count;
          gb[c] += static_cast<float>(g);
          float *gwc = gw.data() + static_cast<std::size_t>(c) * dim;
          for (int d = 0; d < dim; ++d)
            gwc[d] += static_cast<float>(g * xi[d]);
        }
      }
      const float m = static_cast<float>(cfg.momentum);
      const float lrf = static_cast<float>(lr);
      for (std::size_t idx = 0; idx < gw.size(); ++idx) {
        vw[idx] = m * vw[idx] + gw[idx];
        res.weights[idx] -= lrf * vw[idx];
      }
      for (int c = 0; c < classes; ++c) {
        vb[c] = m * vb[c] + gb[c];
        res.bias[c] -= lrf * vb[c];
      }
    }
    res.best_val_accuracy =
        std::max(res.best_val_accuracy,
                 probe_accuracy(res.weights, res.bias, dim, classes, val_x, val_y));
  }
  return res;
}

// ---------------------------------------------------------------------------
// gradient saliency

CnnEmbedder::CnnEmbedder(const nn::EncoderParamsT<double> &params,
                         bool normalize)
    : params_(params), normalize_(normalize) {}

int CnnEmbedder::dim() const { return params_.embed_dim; }

std::vector<double> CnnEmbedder::embed(const Image &img) {
  if (img.height != nn::kInputSize || img.width != nn::kInputSize ||
      img.channels != 3)
    throw dimension_error("CnnEmbedder: expected 64x64x3 input");
  TensorT<double> batch({1, 3, nn::kInputSize, nn::kInputSize});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < nn::kInputSize; ++y)
      for (int x = 0; x < nn::kInputSize; ++x)
        batch.data[(static_cast<std::size_t>(c) * nn::kInputSize + y) *
                       nn::kInputSize +
                   x] = img.at(y, x, c);
  TensorT<double> emb = nn::encoder_forward(params_, batch, cache_);
  raw_embedding_.assign(emb.data.begin(), emb.data.end());
  has_forward_ = true;
  if (!normalize_)
    return raw_embedding_;
  return l2_normalize(raw_embedding_);
}

std::vector<double>
CnnEmbedder::input_gradient_chw(const std::vector<double> &grad_embedding) {
  if (!has_forward_)
    throw internal_error("CnnEmbedder: input_gradient before embed");
  std::vector<double> g = grad_embedding;
  if (normalize_)
    g = l2_normalize_backward(raw_embedding_, grad_embedding);
  TensorT<double> grad_emb({1, params_.embed_dim});
  std::copy(g.begin(), g.end(), grad_emb.data.begin());
  nn::EncoderParamsT<double> grad_params;
  TensorT<double> grad_input;
  nn::encoder_backward(params_, cache_, grad_emb, grad_params, &grad_input);
  return grad_input.data;
}

Mask gradient_saliency(Embedder &embedder, const std::vector<float> &probe_weights,
                       int classes, const Image &img, int target_class) {
  const int dim = embedder.dim();
  if (static_cast<int>(probe_weights.size()) != classes * dim)
    throw dimension_error("gradient_saliency: probe weight size mismatch");
  if (target_class < 0 || target_class >= classes)
    throw parameter_error("gradient_saliency: class out of range");

  embedder.embed(img);
  std::vector<double> grad_emb(dim);
  const float *wc =
      probe_weights.data() + static_cast<std::size_t>(target_class) * dim;
  for (int d = 0; d < dim; ++d)
    grad_emb[d] = wc[d]; // d(score)/d(embedding) of the linear class score
  std::vector<double> gin = embedder.input_gradient_chw(grad_emb);

  const int h = img.height, w = img.width, c = img.channels;
  Mask map(h, w);
  double mx = 0.0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double best = 0.0;
      for (int ch = 0; ch < c; ++ch)
        best = std::max(best,
                        std::abs(gin[(static_cast<std::size_t>(ch) * h + y) * w + x]));
      map.at(y, x) = static_cast<float>(best);
      mx = std::max(mx, best);
    }
  if (mx < 1e-300) {
    std::fill(map.data.begin(), map.data.end(), 0.0f);
    return map;
  }
  float mn = *std::min_element(map.data.begin(), map.data.end());
  float span = static_cast<float>(mx) - mn;
  if (span <= 0.0f) {
    std::fill(map.data.begin(), map.data.end(), 0.0f);
    return map;
  }
  for (auto &v : map.data)
    v = (v - mn) / span;
  return map;
}

// ---------------------------------------------------------------------------
// masked pooling

std::vector<float> saliency_to_grid(const Mask &saliency) {
  const int g = nn::kFeatureMapSize;
  if (saliency.height % g != 0 || saliency.width % g != 0)
    throw dimension_error("saliency_to_grid: mask not divisible by grid");
  const int by = saliency.height / g, bx = saliency.width / g;
  std::vector<float> grid(static_cast<std::size_t>(g) * g, 0.0f);
  for (int gy = 0; gy < g; ++gy)
    for (int gx = 0; gx < g; ++gx) {
      float acc = 0.0f;
      for (int y = 0; y < by; ++y)
        for (int x = 0; x < bx; ++x)
          acc += saliency.at(gy * by + y, gx * bx + x);
      grid[static_cast<std::size_t>(gy) * g + gx] = acc / static_cast<float>(by * bx);
    }
  return grid;
}

std::vector<float> masked_pool_embeddings(const nn::EncoderParams &params,
                                          const std::vector<const Image *> &images,
                                          const std::vector<const Mask *> &saliency,
                                          bool normalize) {
  if (images.size() != saliency.size())
    throw dimension_error("masked_pool_embeddings: count mismatch");
  const int n = static_cast<int>(images.size());
  const int dim = params.embed_dim;
  const int channels = nn::kStageChannels[2];
  const int cells = nn::kFeatureMapSize * nn::kFeatureMapSize;
  std::vector<float> out(static_cast<std::size_t>(n) * dim);

  const int bs = 64;
  for (int start = 0; start < n; start += bs) {
    int count = std::min(bs, n - start);
    Tensor batch({count, 3, nn::kInputSize, nn::kInputSize});
    const std::size_t stride =
        static_cast<std::size_t>(3) * nn::kInputSize * nn::kInputSize;
    for (int j = 0; j < count; ++j)
      image_to_chw(*images[start + j], batch.ptr() + j * stride);
    nn::EncoderCache cache;
    nn::encoder_forward(params, batch, cache);

    for (int j = 0; j < count; ++j) {
      std::vector<float> grid = saliency_to_grid(*saliency[start + j]);
      float wsum = 0.0f;
      for (float v : grid)
        wsum += v;
      const float *fmap = cache.pool3.ptr() +
                          (static_cast<std::size_t>(j) * channels) * cells;
      std::vector<float> pooled(channels);
      if (wsum < 1e-6f) {
        // Declared fallback: plain global average.
        std::copy(cache.gap.ptr() + static_cast<std::size_t>(j) * channels,
                  cache.gap.ptr() + static_cast<std::size_t>(j + 1) * channels,
                  pooled.begin());
      } else {
        for (int ch = 0; ch < channels; ++ch) {
          float acc = 0.0f;
          const float *cell = fmap + static_cast<std::size_t>(ch) * cells;
          for (int i = 0; i < cells; ++i)
            acc += grid[i] * cell[i];
          pooled[ch] = acc / wsum;
        }
      }
      float *dst = out.data() + static_cast<std::size_t>(start + j) * dim;
      nn::fc_apply(params, pooled.data(), dst);
      if (normalize)
        l2_normalize_inplace(dst, dim);
    }
  }
  return out;
}

double masked_pool_eval(const nn::EncoderParams &params,
                        const shapesworld::Dataset &dataset,
                        const std::vector<const Mask *> &saliency_per_scene,
                        const ProbeConfig &probe) {
  if (saliency_per_scene.size() != dataset.scenes.size())
    throw dimension_error("masked_pool_eval: saliency count mismatch");
  std::vector<const Image *> images;
  images.reserve(dataset.scenes.size());
  for (const auto &s : dataset.scenes)
    images.push_back(&s.image);
  std::vector<float> emb =
      masked_pool_embeddings(params, images, saliency_per_scene, true);

  const int dim = params.embed_dim;
  std::vector<float> train_x, val_x;
  std::vector<int> train_y, val_y;
  for (std::size_t i = 0; i < dataset.scenes.size(); ++i) {
    const float *row = emb.data() + i * dim;
    if (dataset.is_train[i]) {
      train_x.insert(train_x.end(), row, row + dim);
      train_y.push_back(dataset.scenes[i].shape_class);
    } else {
      val_x.insert(val_x.end(), row, row + dim);
      val_y.push_back(dataset.scenes[i].shape_class);
    }
  }
  return linear_probe(train_x, train_y, val_x, val_y, dim,
                      shapesworld::kShapeClasses, probe)
      .best_val_accuracy;
}

InvarianceReport invariance_report(const nn::EncoderParams &params,
                                   const shapesworld::Dataset &dataset,
                                   const ProbeConfig &probe,
                                   const KnnOptions &knn) {
  EmbeddingBank train_bank = embed_scenes(params, dataset, dataset.train_indices());
  EmbeddingBank val_bank = embed_scenes(params, dataset, dataset.val_indices());

  auto flatten_labels = [](const EmbeddingBank &b, bool shapes) {
    return shapes ? b.shape_class : b.background_family;
  };

  InvarianceReport rep;
  rep.shape_probe_acc =
      linear_probe(train_bank.data, flatten_labels(train_bank, true),
                   val_bank.data, flatten_labels(val_bank, true), train_bank.dim,
                   shapesworld::kShapeClasses, probe)
          .best_val_accuracy;
  rep.bg_probe_acc =
      linear_probe(train_bank.data, flatten_labels(train_bank, false),
                   val_bank.data, flatten_labels(val_bank, false), train_bank.dim,
                   shapesworld::kBackgroundFamilies, probe)
          .best_val_accuracy;
  KnnOptions ko = knn;
  ko.k = std::min(ko.k, train_bank.count);
  rep.knn_shape_acc = knn_classify(train_bank, train_bank.shape_class, val_bank,
                                   val_bank.shape_class, ko);
  return rep;
}

std::string invariance_csv(const std::string &run_id,
                           const std::string &config_hash,
                           const InvarianceReport &report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%s,%.9g,%.9g,%.9g\n", run_id.c_str(),
                config_hash.c_str(), report.shape_probe_acc,
                report.bg_probe_acc, report.knn_shape_acc);
  return std::string("run_id,config_hash,shape_probe_acc,bg_probe_acc,"
                     "knn_shape_acc\n") +
         buf;
}

} // namespace dilo
