#ifndef DILO_DIAGNOSE_HPP
#define DILO_DIAGNOSE_HPP

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "dilo/nn.hpp"
#include "dilo/shapesworld.hpp"

namespace dilo {

/// N unit-norm embedding rows with aligned scene metadata.
struct EmbeddingBank {
  int count = 0;
  int dim = 0;
  std::vector<float> data; // row major
  std::vector<int> shape_class;
  std::vector<int> background_family;

  const float *row(int i) const {
    return data.data() + static_cast<std::size_t>(i) * dim;
  }
};

/// L2-normalized embeddings for a set of images, batched through the
/// encoder.
std::vector<float> embed_images(const nn::EncoderParams &params,
                                const std::vector<const Image *> &images,
                                bool normalize = true);

EmbeddingBank embed_scenes(const nn::EncoderParams &params,
                           const shapesworld::Dataset &dataset,
                           const std::vector<int> &indices);

/// Exact top-k by cosine similarity (dot product of unit vectors),
/// descending, ties broken toward the lower index.
std::vector<std::pair<int, float>> knn_retrieve(const EmbeddingBank &bank,
                                                const float *query, int k);

struct KnnOptions {
  int k = 20;
  bool similarity_weighted = true; // vote weight exp(sim/tau)
  double tau = 0.07;
  bool exclude_self = false; // skip bank row == query index (leave-one-out)
};

/// Accuracy of the top-k vote over the queries. Labels are whichever
/// metadata column the caller passes.
double knn_classify(const EmbeddingBank &bank, const std::vector<int> &bank_labels,
                    const EmbeddingBank &queries,
                    const std::vector<int> &query_labels,
                    const KnnOptions &opts = {});

struct ProbeConfig {
  int epochs = 30;
  double lr = 0.3;
  int decay_every = 10;
  double decay_factor = 0.1;
  int batch_size = 64;
  double momentum = 0.9;
  std::uint64_t seed = 0;
};

struct ProbeResult {
  int classes = 0;
  int dim = 0;
  std::vector<float> weights; // classes x dim, final epoch
  std::vector<float> bias;
  double best_val_accuracy = 0.0;
};

/// Multinomial logistic regression on frozen embeddings, zero-initialized,
/// SGD with momentum and step decay. Returns the best validation accuracy
/// seen across epochs (the initialized classifier counts for epochs = 0).
ProbeResult linear_probe(const std::vector<float> &train_x,
                         const std::vector<int> &train_y,
                         const std::vector<float> &val_x,
                         const std::vector<int> &val_y, int dim, int classes,
                         const ProbeConfig &cfg = {});

/// Anything that can produce an embedding for an image and push a gradient
/// back to the input raster; lets the class-gradient map run against the
/// real encoder or against test stubs.
class Embedder {
public:
  virtual ~Embedder() = default;
  virtual int dim() const = 0;
  virtual std::vector<double> embed(const Image &img) = 0;
  /// Gradient w.r.t. the input of the last embed() call, CHW layout.
  virtual std::vector<double>
  input_gradient_chw(const std::vector<double> &grad_embedding) = 0;
};

/// The CNN encoder in double precision, optionally followed by L2
/// normalization (matching how probes are trained).
class CnnEmbedder : public Embedder {
public:
  CnnEmbedder(const nn::EncoderParamsT<double> &params, bool normalize);
  int dim() const override;
  std::vector<double> embed(const Image &img) override;
  std::vector<double>
  input_gradient_chw(const std::vector<double> &grad_embedding) override;

private:
  nn::EncoderParamsT<double> params_;
  bool normalize_;
  nn::EncoderCacheT<double> cache_;
  std::vector<double> raw_embedding_;
  bool has_forward_ = false;
};

/// Class-score gradient magnitude in pixel space: backprop w_c . embed(x)
/// to the input, take the per-pixel max of |grad| over channels, span
/// normalize.
Mask gradient_saliency(Embedder &embedder, const std::vector<float> &probe_weights,
                       int classes, const Image &img, int target_class);

/// Area-average a saliency mask onto the 8x8 feature grid.
std::vector<float> saliency_to_grid(const Mask &saliency);

/// Embeddings where global average pooling is replaced by
/// saliency-weighted pooling (fallback to the plain average when the
/// weights sum below 1e-6). With all-ones saliency this is bit-identical
/// to the standard embeddings.
std::vector<float> masked_pool_embeddings(const nn::EncoderParams &params,
                                          const std::vector<const Image *> &images,
                                          const std::vector<const Mask *> &saliency,
                                          bool normalize = true);

/// Linear-probe accuracy for shape class using masked-pool embeddings.
double masked_pool_eval(const nn::EncoderParams &params,
                        const shapesworld::Dataset &dataset,
                        const std::vector<const Mask *> &saliency_per_scene,
                        const ProbeConfig &probe = {});

struct InvarianceReport {
  double shape_probe_acc = 0.0;
  double bg_probe_acc = 0.0;
  double knn_shape_acc = 0.0;
};

/// Probes trained on the train split, reported on the val split; the kNN
/// bank is the train split. High shape accuracy with low background
/// accuracy is the background-invariance signature.
InvarianceReport invariance_report(const nn::EncoderParams &params,
                                   const shapesworld::Dataset &dataset,
                                   const ProbeConfig &probe = {},
                                   const KnnOptions &knn = {});

std::string invariance_csv(const std::string &run_id,
                           const std::string &config_hash,
                           const InvarianceReport &report);

} // namespace dilo

#endif
