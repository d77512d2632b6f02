#ifndef DILO_TESTS_FD_HARNESS_HPP
#define DILO_TESTS_FD_HARNESS_HPP

// Full-pipeline gradient check: encoder -> L2 normalize -> NCE loss, in
// double precision, against central differences on sampled coordinates.

#include <vector>

#include "dilo/contrastive.hpp"
#include "dilo/nn.hpp"
#include "dilo/rng.hpp"

namespace dilo_tests {

struct FdProblem {
  dilo::nn::EncoderParamsT<double> params;
  dilo::TensorT<double> input; // 1 x 3 x 64 x 64
  std::vector<double> positive;
  std::vector<std::vector<double>> negatives;
  double tau = 0.07;
};

inline FdProblem make_fd_problem(std::uint64_t seed, int num_negatives = 16,
                                 int embed_dim = 32) {
  FdProblem prob;
  prob.params = dilo::nn::EncoderParamsT<double>::kaiming(seed, embed_dim);
  dilo::Rng rng(dilo::mix64(seed ^ 0xfdf00dULL));
  prob.input = dilo::TensorT<double>({1, 3, 64, 64});
  for (auto &v : prob.input.data)
    v = rng.uniform();
  auto random_unit = [&]() {
    std::vector<double> v(embed_dim);
    for (auto &x : v)
      x = rng.normal();
    return dilo::l2_normalize(v);
  };
  prob.positive = random_unit();
  for (int i = 0; i < num_negatives; ++i)
    prob.negatives.push_back(random_unit());
  return prob;
}

inline double fd_loss(const FdProblem &prob,
                      const dilo::nn::EncoderParamsT<double> &params) {
  dilo::nn::EncoderCacheT<double> cache;
  dilo::TensorT<double> emb = dilo::nn::encoder_forward(params, prob.input, cache);
  std::vector<double> unit = dilo::l2_normalize(emb.data);
  return dilo::nce_loss_grad(unit, prob.positive, prob.negatives, prob.tau).loss;
}

inline std::vector<double> fd_analytic_grad(const FdProblem &prob) {
  dilo::nn::EncoderCacheT<double> cache;
  dilo::TensorT<double> emb =
      dilo::nn::encoder_forward(prob.params, prob.input, cache);
  std::vector<double> unit = dilo::l2_normalize(emb.data);
  dilo::NceResult nce =
      dilo::nce_loss_grad(unit, prob.positive, prob.negatives, prob.tau);
  std::vector<double> graw = dilo::l2_normalize_backward(emb.data, nce.grad_query);
  dilo::TensorT<double> grad_emb({1, prob.params.embed_dim});
  grad_emb.data = graw;
  dilo::nn::EncoderParamsT<double> grad_params;
  dilo::nn::encoder_backward(prob.params, cache, grad_emb, grad_params,
                             static_cast<dilo::TensorT<double> *>(nullptr));
  return grad_params.flatten();
}

/// Max relative error of the analytic full-pipeline gradient against
/// central differences on `coords` sampled parameter coordinates. The
/// 1e-5 step balances truncation against roundoff for this loss: the
/// tau = 0.07 softmax has third derivatives large enough that 1e-4 steps
/// leave visible O(eps^2) truncation.
inline double full_pipeline_fd_error(std::uint64_t seed, int coords = 200,
                                     double epsilon = 1e-5) {
  FdProblem prob = make_fd_problem(seed);
  std::vector<double> flat = prob.params.flatten();
  std::vector<double> analytic = fd_analytic_grad(prob);
  auto loss_fn = [&prob](const std::vector<double> &theta) {
    dilo::nn::EncoderParamsT<double> p = prob.params;
    p.unflatten(theta);
    return fd_loss(prob, p);
  };
  return dilo::nn::finite_diff_check(loss_fn, flat, analytic, epsilon, coords,
                                     dilo::mix64(seed ^ 0xc00dULL));
}

} // namespace dilo_tests

#endif
