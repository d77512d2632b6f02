#ifndef DILO_TRAINER_HPP
#define DILO_TRAINER_HPP

#include <memory>
#include <string>
#include <vector>

#include "dilo/augment.hpp"
#include "dilo/contrastive.hpp"
#include "dilo/shapesworld.hpp"

namespace dilo {

struct TrainSchedule {
  int epochs = 20;
  double lr = 0.03;
  std::vector<int> decay_epochs = {12, 16};
  double decay_factor = 0.1;
  int batch_size = 64;
  double sgd_momentum = 0.9;
  double weight_decay = 1e-4;

  double lr_at(int epoch) const;
};

struct TrainOptions {
  AugmentationConfig aug;
  ContrastiveConfig contrastive;
  SaliencyParams saliency;
  TrainSchedule schedule;
  std::uint64_t seed = 1;
};

struct StepMetrics {
  int step = 0;
  int epoch = 0;
  double loss = 0.0;
  double p_positive = 0.0;
  double lr = 0.0;
};

/// Saliency for every image, quantized to 8-bit levels exactly as a PNG
/// round trip would, so cached and freshly computed maps are
/// interchangeable bit for bit.
std::vector<SaliencyMap> precompute_saliency(const std::vector<const Image *> &images,
                                             SaliencyMethod method,
                                             const SaliencyParams &params);

/// One (image, saliency) pair of a training batch.
struct TrainSample {
  const Image *image = nullptr;
  const SaliencyMap *saliency = nullptr;
  std::uint64_t sample_index = 0; // global index deriving the RNG stream
};

/// Momentum-contrast trainer: query encoder updated by SGD, key encoder by
/// momentum, FIFO queue of key embeddings as negatives. Loss during queue
/// warmup is computed over the current contents.
class ContrastiveTrainer {
public:
  explicit ContrastiveTrainer(const TrainOptions &opts);

  /// Estimate the initial pooled-feature center from unaugmented images.
  /// Without normalization layers the ReLU stack gives every image a large
  /// shared pooled-feature component; centering the linear head's input on
  /// a running mean removes it, which keeps the cosine geometry spread and
  /// stops InfoNCE training from collapsing into the common mode. The
  /// center folds into the fc bias when parameters leave the trainer.
  void init_feature_center(const std::vector<const Image *> &probe_images);

  StepMetrics train_step(const std::vector<TrainSample> &batch, double lr);

  const nn::EncoderParams &query_params() const { return query_; }
  const nn::EncoderParams &key_params() const { return key_; }
  const MemoryQueue &queue() const { return queue_; }
  std::uint64_t steps_taken() const { return step_; }

  /// Query parameters with the feature center folded into the fc bias:
  /// a plain encoder computing the same function.
  nn::EncoderParams folded_query_params() const;

private:
  TrainOptions opts_;
  BackgroundProvider provider_;
  nn::EncoderParams query_;
  nn::EncoderParams key_;
  nn::SgdState sgd_state_;
  MemoryQueue queue_;
  std::vector<float> gap_center_;
  std::uint64_t step_ = 0;
};

struct TrainResult {
  nn::EncoderParams params;
  std::vector<StepMetrics> log;
};

/// Full training loop over the dataset's train split: per-epoch shuffle,
/// the schedule's step decay, deterministic in (dataset, opts).
TrainResult train_model(const shapesworld::Dataset &dataset,
                        const TrainOptions &opts,
                        const std::vector<SaliencyMap> *precomputed = nullptr);

std::string format_log_csv(const std::vector<StepMetrics> &log);

/// Writes checkpoint.f32/checkpoint.json and training_log.csv to out_dir.
void write_training_outputs(const std::string &out_dir, const TrainResult &result,
                            std::uint64_t seed);

/// Build the background provider an AugmentationConfig asks for.
BackgroundProvider make_background_provider(const AugmentationConfig &cfg);

/// HWC [0,1] image into a CHW tensor slice.
void image_to_chw(const Image &img, float *dst);

} // namespace dilo

#endif
