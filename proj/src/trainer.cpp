#include "dilo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "dilo/checkpoint.hpp"
#include "dilo/png_io.hpp"

namespace dilo {

double TrainSchedule::lr_at(int epoch) const {
  double v = lr;
  for (int d : decay_epochs)
    if (epoch >= d)
      v *= decay_factor;
  return v;
}

std::vector<SaliencyMap> precompute_saliency(const std::vector<const Image *> &images,
                                             SaliencyMethod method,
                                             const SaliencyParams &params) {
  std::vector<SaliencyMap> maps(images.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < images.size(); ++i) {
    maps[i] = compute_saliency(method, *images[i], params);
    maps[i].mask = quantize8(maps[i].mask);
  }
  return maps;
}

BackgroundProvider make_background_provider(const AugmentationConfig &cfg) {
  switch (cfg.background) {
  case BackgroundKind::Grayscale:
    return BackgroundProvider::grayscale();
  case BackgroundKind::TextureDir:
    return BackgroundProvider::texture_dir(cfg.background_dir);
  case BackgroundKind::DatasetCrops:
    return BackgroundProvider::dataset_crops(harvest_no_saliency_crops(
        cfg.background_dir, 256, mix64(cfg.seed ^ 0xb6c0f4f5u)));
  }
  throw config_error("make_background_provider: bad background kind");
}

void image_to_chw(const Image &img, float *dst) {
  const int h = img.height, w = img.width, c = img.channels;
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        dst[(static_cast<std::size_t>(ch) * h + y) * w + x] = img.at(y, x, ch);
}

ContrastiveTrainer::ContrastiveTrainer(const TrainOptions &opts)
    : opts_(opts), provider_(make_background_provider(opts.aug)),
      query_(nn::EncoderParams::kaiming(mix64(opts.seed ^ 0x1d1c0ffeeULL),
                                        opts.contrastive.dim)),
      key_(query_), sgd_state_(),
      queue_(opts.contrastive.queue_capacity, opts.contrastive.dim),
      gap_center_(nn::kStageChannels[2], 0.0f) {
  opts_.aug.validate();
  opts_.contrastive.validate(opts.schedule.batch_size);
}

void ContrastiveTrainer::init_feature_center(
    const std::vector<const Image *> &probe_images) {
  if (probe_images.empty())
    return;
  const int n = static_cast<int>(probe_images.size());
  Tensor batch({n, 3, nn::kInputSize, nn::kInputSize});
  const std::size_t stride =
      static_cast<std::size_t>(3) * nn::kInputSize * nn::kInputSize;
  for (int j = 0; j < n; ++j)
    image_to_chw(*probe_images[j], batch.ptr() + j * stride);
  nn::EncoderCache cache;
  nn::encoder_forward(query_, batch, cache);
  const int channels = nn::kStageChannels[2];
  for (int c = 0; c < channels; ++c) {
    double mu = 0.0;
    for (int j = 0; j < n; ++j)
      mu += cache.gap.data[static_cast<std::size_t>(j) * channels + c];
    gap_center_[c] = static_cast<float>(mu / n);
  }
}

nn::EncoderParams ContrastiveTrainer::folded_query_params() const {
  nn::EncoderParams folded = query_;
  const int channels = nn::kStageChannels[2];
  for (int d = 0; d < folded.embed_dim; ++d) {
    double shift = 0.0;
    for (int c = 0; c < channels; ++c)
      shift += static_cast<double>(
                   folded.fc_w.data[static_cast<std::size_t>(d) * channels + c]) *
               gap_center_[c];
    folded.fc_b.data[d] -= static_cast<float>(shift);
  }
  return folded;
}

StepMetrics ContrastiveTrainer::train_step(const std::vector<TrainSample> &batch,
                                           double lr) {
  const int n = static_cast<int>(batch.size());
  if (n == 0)
    throw parameter_error("train_step: empty batch");
  const int dim = opts_.contrastive.dim;
  const int sz = opts_.aug.output_size;
  if (sz != nn::kInputSize)
    throw parameter_error("train_step: encoder expects 64x64 views");

  Tensor qviews({n, 3, sz, sz});
  Tensor kviews({n, 3, sz, sz});
  const std::size_t stride = static_cast<std::size_t>(3) * sz * sz;

  // Per-sample derived RNG streams keep parallel and serial augmentation
  // bit-identical.
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < n; ++j) {
    Rng rng = Rng::derived(opts_.seed, batch[j].sample_index);
    auto [vq, vk] = augment_pair(*batch[j].image, *batch[j].saliency,
                                 opts_.aug, provider_, rng);
    image_to_chw(vq, qviews.ptr() + j * stride);
    image_to_chw(vk, kviews.ptr() + j * stride);
  }

  nn::EncoderCache qcache, kcache;
  Tensor qemb = nn::encoder_forward(query_, qviews, qcache, gap_center_.data());
  Tensor kemb = nn::encoder_forward(key_, kviews, kcache,
                                    gap_center_.data()); // grad-free path

  for (int j = 0; j < n; ++j) {
    l2_normalize_inplace(kemb.ptr() + static_cast<std::size_t>(j) * dim, dim);
  }

  Tensor grad_emb({n, dim});
  double loss_sum = 0.0, ppos_sum = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : loss_sum, ppos_sum)
  for (int j = 0; j < n; ++j) {
    const float *qrow = qemb.ptr() + static_cast<std::size_t>(j) * dim;
    const float *krow = kemb.ptr() + static_cast<std::size_t>(j) * dim;
    std::vector<double> raw(qrow, qrow + dim);
    std::vector<double> unit = l2_normalize(raw);
    std::vector<float> unitf(dim);
    for (int d = 0; d < dim; ++d)
      unitf[d] = static_cast<float>(unit[d]);
    NceResult nce = nce_loss_grad(unitf.data(), krow, queue_, opts_.contrastive.tau);
    // Through the normalization Jacobian, then average over the batch.
    std::vector<double> graw = l2_normalize_backward(raw, nce.grad_query);
    float *g = grad_emb.ptr() + static_cast<std::size_t>(j) * dim;
    for (int d = 0; d < dim; ++d)
      g[d] = static_cast<float>(graw[d] / n);
    loss_sum += nce.loss;
    ppos_sum += nce.p_positive;
  }

  nn::EncoderParams grads;
  nn::encoder_backward(query_, qcache, grad_emb, grads,
                       static_cast<Tensor *>(nullptr), gap_center_.data());
  nn::sgd_step(query_, grads, sgd_state_, static_cast<float>(lr),
               static_cast<float>(opts_.schedule.sgd_momentum),
               static_cast<float>(opts_.schedule.weight_decay));
  momentum_update(key_, query_, opts_.contrastive.momentum);
  for (int j = 0; j < n; ++j)
    queue_.push(kemb.ptr() + static_cast<std::size_t>(j) * dim);

  // Track the pooled-feature mean of this batch (query side).
  const int channels = nn::kStageChannels[2];
  const float ema = 0.95f;
  for (int c = 0; c < channels; ++c) {
    double mu = 0.0;
    for (int j = 0; j < n; ++j)
      mu += qcache.gap.data[static_cast<std::size_t>(j) * channels + c];
    gap_center_[c] =
        ema * gap_center_[c] + (1.0f - ema) * static_cast<float>(mu / n);
  }

  StepMetrics m;
  m.step = static_cast<int>(++step_);
  m.loss = loss_sum / n;
  m.p_positive = ppos_sum / n;
  m.lr = lr;
  return m;
}

TrainResult train_model(const shapesworld::Dataset &dataset,
                        const TrainOptions &opts,
                        const std::vector<SaliencyMap> *precomputed) {
  std::vector<int> train_idx = dataset.train_indices();
  if (train_idx.empty())
    throw parameter_error("train_model: dataset has no training scenes");

  std::vector<const Image *> images;
  images.reserve(train_idx.size());
  for (int i : train_idx)
    images.push_back(&dataset.scenes[i].image);

  std::vector<SaliencyMap> maps;
  if (precomputed) {
    if (precomputed->size() != train_idx.size())
      throw dimension_error("train_model: precomputed saliency count mismatch");
  } else {
    maps = precompute_saliency(images, opts.aug.saliency_method, opts.saliency);
  }
  const std::vector<SaliencyMap> &sal = precomputed ? *precomputed : maps;

  ContrastiveTrainer trainer(opts);
  {
    std::vector<const Image *> probe(
        images.begin(),
        images.begin() + std::min<std::size_t>(images.size(), 256));
    trainer.init_feature_center(probe);
  }
  TrainResult result;
  const int n = static_cast<int>(train_idx.size());
  const int bs = opts.schedule.batch_size;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 0; epoch < opts.schedule.epochs; ++epoch) {
    // Fisher-Yates with an epoch-derived stream.
    Rng shuffle_rng(mix64(opts.seed ^ (0x5e55ULL + epoch)));
    for (int i = n - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<int>(shuffle_rng.uniform_int(0, i))]);

    double lr = opts.schedule.lr_at(epoch);
    for (int start = 0; start < n; start += bs) {
      int count = std::min(bs, n - start);
      std::vector<TrainSample> batch(count);
      for (int j = 0; j < count; ++j) {
        int local = order[start + j];
        batch[j].image = images[local];
        batch[j].saliency = &sal[local];
        batch[j].sample_index = static_cast<std::uint64_t>(epoch) * n +
                                static_cast<std::uint64_t>(start + j);
      }
      StepMetrics m = trainer.train_step(batch, lr);
      m.epoch = epoch;
      result.log.push_back(m);
    }
  }
  result.params = trainer.folded_query_params();
  return result;
}

std::string format_log_csv(const std::vector<StepMetrics> &log) {
  std::string out = "step,epoch,loss,p_positive,lr\n";
  char buf[160];
  for (const auto &m : log) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%.9g\n", m.step, m.epoch,
                  m.loss, m.p_positive, m.lr);
    out += buf;
  }
  return out;
}

void write_training_outputs(const std::string &out_dir, const TrainResult &result,
                            std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  CheckpointMeta meta;
  meta.global_seed = seed;
  meta.step = result.log.empty() ? 0 : static_cast<std::uint64_t>(result.log.back().step);
  save_checkpoint(out_dir, result.params, meta);
  std::ofstream csv(fs::path(out_dir) / "training_log.csv");
  if (!csv)
    throw io_error("write_training_outputs: cannot write log in " + out_dir);
  csv << format_log_csv(result.log);
}

} // namespace dilo
