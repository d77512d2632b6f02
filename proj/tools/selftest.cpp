// Built-in verification: gradient checks and metric oracles, runnable from
// a deployed binary without the test suite.

#include <cmath>
#include <cstdio>
#include <vector>

#include "dilo/contrastive.hpp"
#include "dilo/saliency.hpp"
#include "dilo/superpixel.hpp"

#include "fd_harness.hpp"
#include "oracles.hpp"

namespace {

int failures = 0;

void report(const char *name, bool ok, double value, const char *detail) {
  std::printf("[%s] %s: %.3g %s\n", ok ? "PASS" : "FAIL", name, value, detail);
  if (!ok)
    ++failures;
}

dilo::Image random_image(int h, int w, std::uint64_t seed) {
  dilo::Image img(h, w, 3);
  dilo::Rng rng(seed);
  for (auto &v : img.data)
    v = static_cast<float>(rng.uniform());
  return img;
}

void check_geodesic() {
  dilo::Image img = random_image(48, 48, 11);
  auto labeling = dilo::slic_segment(img, 40, 10.0f, 5);
  auto graph = dilo::build_region_graph(img, labeling);
  auto geo = dilo::geodesic_distances(graph);

  std::vector<std::array<int, 2>> edges;
  std::vector<double> weights;
  for (int i = 0; i < graph.region_count; ++i)
    for (const auto &[j, w] : graph.adjacency[i])
      if (i < j) {
        edges.push_back({i, j});
        weights.push_back(w);
      }
  auto fw = oracles::floyd_warshall(graph.region_count, edges, weights);
  double max_err = 0.0;
  for (int i = 0; i < graph.region_count; ++i)
    for (int j = 0; j < graph.region_count; ++j)
      max_err = std::max(max_err, std::abs(geo[i][j] - fw[i][j]));
  report("geodesic vs floyd-warshall", max_err < 1e-12, max_err, "(< 1e-12)");
}

void check_rbd_solver() {
  dilo::Rng rng(7);
  const int n = 20;
  std::vector<double> w_bg(n), w_fg(n);
  for (int i = 0; i < n; ++i) {
    w_bg[i] = rng.uniform();
    w_fg[i] = rng.uniform();
  }
  std::vector<std::array<int, 2>> edges;
  std::vector<double> weights;
  for (int i = 0; i + 1 < n; ++i) {
    edges.push_back({i, i + 1});
    weights.push_back(rng.uniform(0.1, 1.0));
  }
  for (int e = 0; e < 15; ++e) {
    int a = rng.uniform_int(0, n - 1), b = rng.uniform_int(0, n - 1);
    if (a == b)
      continue;
    edges.push_back({a, b});
    weights.push_back(rng.uniform(0.1, 1.0));
  }
  auto s = dilo::solve_background_optimization(w_bg, w_fg, edges, weights);

  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n);
  for (int i = 0; i < n; ++i) {
    a[i][i] = w_bg[i] + w_fg[i];
    b[i] = w_fg[i];
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    int i = edges[e][0], j = edges[e][1];
    a[i][i] += weights[e];
    a[j][j] += weights[e];
    a[i][j] -= weights[e];
    a[j][i] -= weights[e];
  }
  auto ref = oracles::gauss_solve(a, b);
  double max_err = 0.0;
  for (int i = 0; i < n; ++i)
    max_err = std::max(max_err, std::abs(s[i] - ref[i]));
  report("rbd solve vs gauss-jordan", max_err < 1e-8, max_err, "(< 1e-8)");
}

void check_absorption() {
  // Single transient with one absorbing neighbor, deterministic move.
  auto t1 = dilo::absorption_times({{0.0}});
  bool ok = std::abs(t1[0] - 1.0) < 1e-12;
  // T1 -> T2 -> A chain.
  auto t2 = dilo::absorption_times({{0.0, 1.0}, {0.0, 0.0}});
  ok = ok && std::abs(t2[0] - 2.0) < 1e-12 && std::abs(t2[1] - 1.0) < 1e-12;
  report("absorption time hand cases", ok, ok ? 0.0 : 1.0, "(exact)");
}

void check_metrics() {
  dilo::Mask gt(4, 4), pred(4, 4);
  for (int i = 0; i < 8; ++i)
    gt.data[i] = 1.0f;
  for (auto &v : pred.data)
    v = 1.0f;
  double f = dilo::f_beta(pred, gt);
  double expect = (1.3 * 0.5 * 1.0) / (0.3 * 0.5 + 1.0);
  bool ok = f == expect && dilo::mae(pred, gt) == 0.5;
  dilo::Mask perfect = gt;
  ok = ok && dilo::f_beta(perfect, gt) == 1.0 && dilo::mae(perfect, gt) == 0.0;
  report("f_beta / mae hand cases", ok, f, "(== 13/23, 0.5652...)");
}

void check_probs() {
  dilo::Rng rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    int dim = rng.uniform_int(4, 32);
    int k = rng.uniform_int(0, 24);
    auto unit = [&]() {
      std::vector<double> v(dim);
      for (auto &x : v)
        x = rng.normal();
      return dilo::l2_normalize(v);
    };
    std::vector<double> q = unit(), pos = unit();
    std::vector<std::vector<double>> negs;
    for (int i = 0; i < k; ++i)
      negs.push_back(unit());
    double tau = rng.uniform(0.05, 1.0);
    auto p = dilo::probs(q, pos, negs, tau);

    std::vector<double> logits(1 + k);
    auto dot = [&](const std::vector<double> &a, const std::vector<double> &b) {
      double s = 0.0;
      for (std::size_t d = 0; d < a.size(); ++d)
        s += a[d] * b[d];
      return s;
    };
    logits[0] = dot(q, pos) / tau;
    for (int i = 0; i < k; ++i)
      logits[1 + i] = dot(q, negs[i]) / tau;
    auto ref = oracles::softmax_bruteforce(logits);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      worst = std::max(worst, std::abs(p[i] - ref[i]));
      sum += p[i];
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  report("probs vs brute-force softmax", worst < 1e-9, worst, "(< 1e-9)");
}

void check_gradients() {
  double err = dilo_tests::full_pipeline_fd_error(3, 120);
  report("encoder+nce finite differences", err < 1e-4, err, "(< 1e-4)");
}

} // namespace

int dilo_run_selftest() {
  check_metrics();
  check_absorption();
  check_geodesic();
  check_rbd_solver();
  check_probs();
  check_gradients();
  if (failures)
    std::printf("selftest: %d check(s) failed\n", failures);
  else
    std::printf("selftest: all checks passed\n");
  return failures == 0 ? 0 : 2;
}
