#ifndef DILO_CONTRASTIVE_HPP
#define DILO_CONTRASTIVE_HPP

#include <vector>

#include "dilo/nn.hpp"

namespace dilo {

struct ContrastiveConfig {
  double tau = 0.07;       // temperature
  int dim = 128;           // embedding dimension D
  int queue_capacity = 4096; // desk default; the reference setting is 65536
  double momentum = 0.999; // key-encoder coefficient m

  void validate(int batch_size) const;
};

/// FIFO bank of L2-normalized key embeddings serving as negatives.
class MemoryQueue {
public:
  MemoryQueue(int capacity, int dim);

  /// Vectors must be unit norm; oldest entries are evicted at capacity.
  void push(const float *vec);
  void push_batch(const float *vecs, int count);

  int size() const { return size_; }
  int capacity() const { return capacity_; }
  int dim() const { return dim_; }

  /// Row in storage order (the order probs/nce iterate).
  const float *row(int i) const { return data_.data() + static_cast<std::size_t>(i) * dim_; }

  /// Contents oldest-first; convenience for tests and inspection.
  std::vector<std::vector<float>> fifo_snapshot() const;

private:
  int capacity_ = 0;
  int dim_ = 0;
  int size_ = 0;
  int cursor_ = 0;
  std::vector<float> data_;
};

/// v / ||v||2; throws parameter_error on (near-)zero input.
std::vector<double> l2_normalize(const std::vector<double> &v);
void l2_normalize_inplace(float *v, int dim);

/// Backward through u = v/||v||: grad_v = (g - (g.u)u)/||v||.
std::vector<double> l2_normalize_backward(const std::vector<double> &v,
                                          const std::vector<double> &grad_unit);

/// Full classification distribution over {positive} followed by the
/// negatives, softmax of the scaled similarities with max-subtraction.
/// All vectors must be unit norm.
std::vector<double> probs(const std::vector<double> &query,
                          const std::vector<double> &positive,
                          const std::vector<std::vector<double>> &negatives,
                          double tau);

struct NceResult {
  double loss = 0.0;          // -log P(positive)
  double p_positive = 0.0;
  std::vector<double> grad_query; // d loss / d query (unit-space)
};

/// loss = -log P(positive); grad wrt the (unit) query is
/// (sum_j P(j) k_j - k_positive)/tau. The normalization Jacobian is
/// applied by the caller when composing with the encoder.
NceResult nce_loss_grad(const std::vector<double> &query,
                        const std::vector<double> &positive,
                        const std::vector<std::vector<double>> &negatives,
                        double tau);

/// Training-path variant reading negatives straight from the queue;
/// logits and gradient are accumulated in double.
NceResult nce_loss_grad(const float *query, const float *positive,
                        const MemoryQueue &queue, double tau);

/// theta_key <- m*theta_key + (1-m)*theta_query, element-wise.
void momentum_update(nn::EncoderParams &key, const nn::EncoderParams &query,
                     double m);

} // namespace dilo

#endif
