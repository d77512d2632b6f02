#include "dilo/contrastive.hpp"

#include <algorithm>
#include <cmath>

namespace dilo {

void ContrastiveConfig::validate(int batch_size) const {
  if (tau <= 0.0)
    throw parameter_error("ContrastiveConfig: tau must be positive");
  if (dim <= 0)
    throw parameter_error("ContrastiveConfig: dim must be positive");
  if (momentum < 0.0 || momentum > 1.0)
    throw parameter_error("ContrastiveConfig: momentum must be in [0,1]");
  if (queue_capacity < batch_size)
    throw parameter_error("ContrastiveConfig: queue capacity below batch size");
}

MemoryQueue::MemoryQueue(int capacity, int dim)
    : capacity_(capacity), dim_(dim),
      data_(static_cast<std::size_t>(capacity) * dim, 0.0f) {
  if (capacity <= 0 || dim <= 0)
    throw parameter_error("MemoryQueue: capacity and dim must be positive");
}

void MemoryQueue::push(const float *vec) {
  double norm2 = 0.0;
  for (int d = 0; d < dim_; ++d)
    norm2 += static_cast<double>(vec[d]) * vec[d];
  if (std::abs(std::sqrt(norm2) - 1.0) > 1e-4)
    throw parameter_error("MemoryQueue::push: vector is not unit norm");
  std::copy(vec, vec + dim_,
            data_.begin() + static_cast<std::size_t>(cursor_) * dim_);
  cursor_ = (cursor_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

void MemoryQueue::push_batch(const float *vecs, int count) {
  for (int i = 0; i < count; ++i)
    push(vecs + static_cast<std::size_t>(i) * dim_);
}

std::vector<std::vector<float>> MemoryQueue::fifo_snapshot() const {
  std::vector<std::vector<float>> out;
  out.reserve(size_);
  int start = size_ < capacity_ ? 0 : cursor_;
  for (int i = 0; i < size_; ++i) {
    int r = (start + i) % capacity_;
    out.emplace_back(row(r), row(r) + dim_);
  }
  return out;
}

std::vector<double> l2_normalize(const std::vector<double> &v) {
  double n2 = 0.0;
  for (double x : v)
    n2 += x * x;
  double n = std::sqrt(n2);
  if (n < 1e-12)
    throw parameter_error("l2_normalize: zero vector");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = v[i] / n;
  return out;
}

void l2_normalize_inplace(float *v, int dim) {
  double n2 = 0.0;
  for (int d = 0; d < dim; ++d)
    n2 += static_cast<double>(v[d]) * v[d];
  double n = std::sqrt(n2);
  if (n < 1e-12)
    throw parameter_error("l2_normalize: zero vector");
  for (int d = 0; d < dim; ++d)
    v[d] = static_cast<float>(v[d] / n);
}

std::vector<double> l2_normalize_backward(const std::vector<double> &v,
                                          const std::vector<double> &grad_unit) {
  if (v.size() != grad_unit.size())
    throw dimension_error("l2_normalize_backward: size mismatch");
  double n2 = 0.0;
  for (double x : v)
    n2 += x * x;
  double n = std::sqrt(n2);
  if (n < 1e-12)
    throw parameter_error("l2_normalize_backward: zero vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    dot += grad_unit[i] * v[i] / n;
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out[i] = (grad_unit[i] - dot * v[i] / n) / n;
  return out;
}

namespace {

void check_unit(const std::vector<double> &v, const char *what) {
  double n2 = 0.0;
  for (double x : v)
    n2 += x * x;
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-6)
    throw parameter_error(std::string(what) + " is not unit norm");
}

} // namespace

std::vector<double> probs(const std::vector<double> &query,
                          const std::vector<double> &positive,
                          const std::vector<std::vector<double>> &negatives,
                          double tau) {
  if (tau <= 0.0)
    throw parameter_error("probs: tau must be positive");
  if (query.empty() || query.size() != positive.size())
    throw parameter_error("probs: query/positive dimension mismatch");
  check_unit(query, "probs: query");
  check_unit(positive, "probs: positive");

  const std::size_t k = negatives.size();
  std::vector<double> logits(1 + k);
  double dot = 0.0;
  for (std::size_t d = 0; d < query.size(); ++d)
    dot += query[d] * positive[d];
  logits[0] = dot / tau;
  for (std::size_t i = 0; i < k; ++i) {
    if (negatives[i].size() != query.size())
      throw dimension_error("probs: negative dimension mismatch");
    double s = 0.0;
    for (std::size_t d = 0; d < query.size(); ++d)
      s += query[d] * negatives[i][d];
    logits[1 + i] = s / tau;
  }
  double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (auto &l : logits) {
    l = std::exp(l - mx);
    z += l;
  }
  for (auto &l : logits)
    l /= z;
  return logits;
}

NceResult nce_loss_grad(const std::vector<double> &query,
                        const std::vector<double> &positive,
                        const std::vector<std::vector<double>> &negatives,
                        double tau) {
  std::vector<double> p = probs(query, positive, negatives, tau);
  NceResult res;
  res.p_positive = p[0];
  res.loss = -std::log(p[0]);
  res.grad_query.assign(query.size(), 0.0);
  for (std::size_t d = 0; d < query.size(); ++d)
    res.grad_query[d] += (p[0] - 1.0) * positive[d];
  for (std::size_t i = 0; i < negatives.size(); ++i)
    for (std::size_t d = 0; d < query.size(); ++d)
      res.grad_query[d] += p[1 + i] * negatives[i][d];
  for (auto &g : res.grad_query)
    g /= tau;
  return res;
}

NceResult nce_loss_grad(const float *query, const float *positive,
                        const MemoryQueue &queue, double tau) {
  if (tau <= 0.0)
    throw parameter_error("nce_loss_grad: tau must be positive");
  const int dim = queue.dim();
  const int k = queue.size();

  std::vector<double> logits(1 + k);
  double dot = 0.0;
  for (int d = 0; d < dim; ++d)
    dot += static_cast<double>(query[d]) * positive[d];
  logits[0] = dot / tau;
  for (int i = 0; i < k; ++i) {
    const float *r = queue.row(i);
    double s = 0.0;
    for (int d = 0; d < dim; ++d)
      s += static_cast<double>(query[d]) * r[d];
    logits[1 + i] = s / tau;
  }
  double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (auto &l : logits) {
    l = std::exp(l - mx);
    z += l;
  }
  for (auto &l : logits)
    l /= z;

  NceResult res;
  res.p_positive = logits[0];
  res.loss = -std::log(logits[0]);
  res.grad_query.assign(dim, 0.0);
  for (int d = 0; d < dim; ++d)
    res.grad_query[d] += (logits[0] - 1.0) * positive[d];
  for (int i = 0; i < k; ++i) {
    const float *r = queue.row(i);
    double pi = logits[1 + i];
    for (int d = 0; d < dim; ++d)
      res.grad_query[d] += pi * r[d];
  }
  for (auto &g : res.grad_query)
    g /= tau;
  return res;
}

void momentum_update(nn::EncoderParams &key, const nn::EncoderParams &query,
                     double m) {
  if (m < 0.0 || m > 1.0)
    throw parameter_error("momentum_update: m must be in [0,1]");
  auto kt = key.tensors();
  auto qt = query.tensors();
  for (std::size_t t = 0; t < kt.size(); ++t) {
    if (!kt[t]->same_shape(*qt[t]))
      throw dimension_error("momentum_update: parameter shape mismatch");
    float *kp = kt[t]->ptr();
    const float *qp = qt[t]->ptr();
    const float mf = static_cast<float>(m);
    for (std::size_t i = 0; i < kt[t]->size(); ++i)
      kp[i] = mf * kp[i] + (1.0f - mf) * qp[i];
  }
  ++key.revision;
}

} // namespace dilo
