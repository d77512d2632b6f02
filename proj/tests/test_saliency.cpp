#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dilo/rng.hpp"
#include "dilo/saliency.hpp"
#include "dilo/shapesworld.hpp"
#include "oracles.hpp"

using namespace dilo;

namespace {

Image uniform_image(int h, int w, float v) {
  Image img(h, w, 3);
  for (auto &x : img.data)
    x = v;
  return img;
}

} // namespace

// ---------------------------------------------------------------------------
// geodesic saliency

TEST_CASE("gs: distinct center on a uniform border attains the maximum") {
  const int n = 48;
  Image img = uniform_image(n, n, 0.2f);
  for (int y = 18; y < 30; ++y)
    for (int x = 18; x < 30; ++x) {
      img.at(y, x, 0) = 0.9f;
      img.at(y, x, 1) = 0.1f;
      img.at(y, x, 2) = 0.1f;
    }
  SaliencyMap map = saliency_gs(img);
  float center = map.mask.at(n / 2, n / 2);
  CHECK(center == 1.0f);
  CHECK(map.mask.at(0, 0) == 0.0f);
}

TEST_CASE("gs: uniform image maps to all zero") {
  SaliencyMap map = saliency_gs(uniform_image(32, 32, 0.6f));
  for (float v : map.mask.data)
    CHECK(v == 0.0f);
}

TEST_CASE("gs separates foreground from background on generated scenes") {
  int ok = 0;
  const int total = 100;
#pragma omp parallel for schedule(dynamic) reduction(+ : ok)
  for (int i = 0; i < total; ++i) {
    auto rec = shapesworld::generate_scene(mix64(505 + i));
    SaliencyMap map = saliency_gs(rec.image);
    double in = 0, out = 0;
    std::size_t nin = 0, nout = 0;
    for (std::size_t p = 0; p < map.mask.data.size(); ++p) {
      if (rec.gt_mask.data[p] == 1.0f) {
        in += map.mask.data[p];
        ++nin;
      } else {
        out += map.mask.data[p];
        ++nout;
      }
    }
    ok += (in / nin > out / nout);
  }
  CHECK(ok >= 95);
}

// ---------------------------------------------------------------------------
// absorbing-chain saliency

TEST_CASE("absorption times: hand-built chains") {
  // One transient state that always moves to the absorbing state.
  auto t1 = absorption_times({{0.0}});
  CHECK(t1[0] == doctest::Approx(1.0).epsilon(1e-12));
  // T1 -> T2 -> A deterministic chain: times (2, 1).
  auto t2 = absorption_times({{0.0, 1.0}, {0.0, 0.0}});
  CHECK(t2[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(t2[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("absorption times are strictly positive and match simulation") {
  // Random substochastic transient matrix over 12 states; at least one
  // state leaks to the absorbing sink, and the graph is connected.
  Rng rng(77);
  const int n = 12;
  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  std::vector<std::vector<std::pair<int, double>>> chain(n);
  for (int i = 0; i < n; ++i) {
    std::vector<double> w(n + 1, 0.0);
    for (int j = 0; j < n; ++j)
      if (j != i && (std::abs(i - j) <= 2))
        w[j] = rng.uniform(0.1, 1.0);
    w[n] = (i % 3 == 0) ? rng.uniform(0.2, 0.6) : 0.0; // absorbing mass
    double sum = 0.0;
    for (double v : w)
      sum += v;
    for (int j = 0; j <= n; ++j) {
      double p = w[j] / sum;
      if (p > 0)
        chain[i].emplace_back(j, p);
      if (j < n)
        q[i][j] = p;
    }
  }
  auto t = absorption_times(q);
  auto sim = oracles::simulate_absorption(chain, n, 200000, 9);
  for (int i = 0; i < n; ++i) {
    CHECK(t[i] > 0.0);
    CHECK(t[i] == doctest::Approx(sim[i]).epsilon(0.03));
  }
}

TEST_CASE("mc: scene smoke test, map in [0,1] and deterministic") {
  auto rec = shapesworld::generate_scene(31);
  SaliencyMap a = saliency_mc(rec.image);
  SaliencyMap b = saliency_mc(rec.image);
  CHECK(a.mask.data == b.mask.data);
  float mx = 0;
  for (float v : a.mask.data) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
    mx = std::max(mx, v);
  }
  CHECK(mx == 1.0f);
}

// ---------------------------------------------------------------------------
// boundary connectivity and the RBD optimization

TEST_CASE("boundary connectivity: all regions at distance zero") {
  const int n = 8, b = 3;
  RegionGraph g;
  g.region_count = n;
  g.boundary.assign(n, 0);
  for (int i = 0; i < b; ++i)
    g.boundary[i] = 1;
  std::vector<std::vector<double>> geo(n, std::vector<double>(n, 0.0));
  SaliencyParams params;
  auto bnd = boundary_connectivity(g, geo, params);
  for (int i = 0; i < n; ++i)
    CHECK(bnd[i] == doctest::Approx(b / std::sqrt(double(n))).epsilon(1e-12));
}

TEST_CASE("boundary connectivity: isolated region decays to zero") {
  const int n = 6;
  RegionGraph g;
  g.region_count = n;
  g.boundary.assign(n, 1);
  g.boundary[5] = 0;
  // Region 5 infinitely far from everyone else (numerically: huge).
  std::vector<std::vector<double>> geo(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    geo[5][i] = geo[i][5] = 100.0;
  }
  geo[5][5] = 0.0;
  SaliencyParams params;
  auto bnd = boundary_connectivity(g, geo, params);
  CHECK(bnd[5] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("boundary connectivity: 3-region hand computation") {
  RegionGraph g;
  g.region_count = 3;
  g.boundary = {1, 0, 0};
  std::vector<std::vector<double>> geo = {
      {0.0, 0.1, 0.3}, {0.1, 0.0, 0.2}, {0.3, 0.2, 0.0}};
  SaliencyParams params; // sigma_clr = 0.1
  auto bnd = boundary_connectivity(g, geo, params);
  double s = 2.0 * 0.1 * 0.1;
  // region 1: area = exp(-.01/s)+1+exp(-.04/s), len = exp(-.01/s)
  double a1 = std::exp(-0.01 / s) + 1.0 + std::exp(-0.04 / s);
  double l1 = std::exp(-0.01 / s);
  CHECK(bnd[1] == doctest::Approx(l1 / std::sqrt(a1)).epsilon(1e-12));
  double a0 = 1.0 + std::exp(-0.01 / s) + std::exp(-0.09 / s);
  CHECK(bnd[0] == doctest::Approx(1.0 / std::sqrt(a0)).epsilon(1e-12));
}

TEST_CASE("rbd optimization: degenerate weight patterns") {
  // One region, full foreground weight, no smoothing: cost minimized at 1.
  auto s1 = solve_background_optimization({0.0}, {1.0}, {}, {});
  CHECK(s1[0] == doctest::Approx(1.0).epsilon(1e-12));
  // Background weight only: everything goes to 0.
  auto s0 = solve_background_optimization({0.5, 0.8, 0.3}, {0.0, 0.0, 0.0},
                                          {{0, 1}, {1, 2}}, {0.2, 0.2});
  for (double v : s0)
    CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rbd optimization matches a dense oracle and beats random probes") {
  Rng rng(2029);
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
    weights.push_back(rng.uniform(0.05, 1.0));
  }
  for (int e = 0; e < 12; ++e) {
    int a = rng.uniform_int(0, n - 1), b = rng.uniform_int(0, n - 1);
    if (a == b)
      continue;
    edges.push_back({a, b});
    weights.push_back(rng.uniform(0.05, 1.0));
  }
  auto s = solve_background_optimization(w_bg, w_fg, edges, weights);

  // dense direct solve
  std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
  std::vector<double> b(n);
  for (int i = 0; i < n; ++i) {
    l[i][i] = w_bg[i] + w_fg[i];
    b[i] = w_fg[i];
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    int i = edges[e][0], j = edges[e][1];
    l[i][i] += weights[e];
    l[j][j] += weights[e];
    l[i][j] -= weights[e];
    l[j][i] -= weights[e];
  }
  auto ref = oracles::gauss_solve(l, b);
  for (int i = 0; i < n; ++i)
    CHECK(std::abs(s[i] - ref[i]) < 1e-8);

  auto objective = [&](const std::vector<double> &v) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      acc += w_bg[i] * v[i] * v[i] + w_fg[i] * (v[i] - 1.0) * (v[i] - 1.0);
    for (std::size_t e = 0; e < edges.size(); ++e) {
      double d = v[edges[e][0]] - v[edges[e][1]];
      acc += weights[e] * d * d;
    }
    return acc;
  };
  double best = objective(s);
  std::vector<double> probe(n);
  for (int trial = 0; trial < 10000; ++trial) {
    for (auto &v : probe)
      v = rng.uniform();
    CHECK(best <= objective(probe) + 1e-12);
  }
}

TEST_CASE("rbd: uniform image maps to all zero") {
  SaliencyMap map = saliency_rbd(uniform_image(32, 32, 0.4f));
  for (float v : map.mask.data)
    CHECK(v == 0.0f);
}

TEST_CASE("saliency maps are deterministic and normalized") {
  auto rec = shapesworld::generate_scene(57);
  for (auto method : {SaliencyMethod::GS, SaliencyMethod::MC, SaliencyMethod::RBD}) {
    SaliencyMap a = compute_saliency(method, rec.image);
    SaliencyMap b = compute_saliency(method, rec.image);
    CHECK(a.mask.data == b.mask.data);
    float lo = 1.0f, hi = 0.0f;
    for (float v : a.mask.data) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    CHECK(lo == 0.0f);
    CHECK(hi == 1.0f);
  }
}

// ---------------------------------------------------------------------------
// binarize and metrics

TEST_CASE("binarize basics and the adaptive threshold cap") {
  Mask zeros(4, 4, 0.0f);
  Mask bin = binarize(zeros, 0.5);
  for (float v : bin.data)
    CHECK(v == 0.0f);

  Mask anything(4, 4, 0.37f);
  Mask ones = binarize(anything, 0.0);
  for (float v : ones.data)
    CHECK(v == 1.0f);

  // Bimodal half 0.2 / half 0.8: mean 0.5, threshold = min(1.0, 0.9) = 0.9,
  // so everything falls below it.
  Mask bimodal(4, 4);
  for (int i = 0; i < 8; ++i)
    bimodal.data[i] = 0.2f;
  for (int i = 8; i < 16; ++i)
    bimodal.data[i] = 0.8f;
  CHECK(adaptive_threshold(bimodal) == doctest::Approx(0.9));
  Mask b2 = binarize(bimodal, adaptive_threshold(bimodal));
  for (float v : b2.data)
    CHECK(v == 0.0f);

  CHECK_THROWS_AS(binarize(zeros, 1.5), parameter_error);
}

TEST_CASE("f_beta and mae hand values") {
  Mask gt(4, 4), pred(4, 4);
  for (int i = 0; i < 8; ++i)
    gt.data[i] = 1.0f;

  // Perfect prediction.
  CHECK(f_beta(gt, gt) == 1.0);
  CHECK(mae(gt, gt) == 0.0);

  // All-ones vs half foreground: P = 0.5, R = 1.
  for (auto &v : pred.data)
    v = 1.0f;
  CHECK(f_beta(pred, gt) == (1.3 * 0.5 * 1.0) / (0.3 * 0.5 + 1.0));
  CHECK(f_beta(pred, gt) == doctest::Approx(0.565217).epsilon(1e-5));
  CHECK(mae(pred, gt) == 0.5);

  // Complement: F = 0, MAE = 1.
  Mask comp(4, 4);
  for (std::size_t i = 0; i < comp.data.size(); ++i)
    comp.data[i] = 1.0f - gt.data[i];
  CHECK(f_beta(comp, gt) == 0.0);
  CHECK(mae(comp, gt) == 1.0);

  // Empty ground truth is a metric error.
  Mask empty(4, 4, 0.0f);
  CHECK_THROWS_AS(f_beta(pred, empty), metric_error);
  // Non-binary ground truth rejected.
  Mask soft(4, 4, 0.5f);
  CHECK_THROWS_AS(f_beta(pred, soft), parameter_error);
}

TEST_CASE("f_beta agrees with the brute-force oracle and is monotone under "
          "pixel-wise improvement") {
  Rng rng(404);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 24;
    Mask gt(1, n), pred(1, n), better(1, n);
    int pos = 0;
    for (int i = 0; i < n; ++i) {
      gt.data[i] = rng.bernoulli(0.4) ? 1.0f : 0.0f;
      pos += (gt.data[i] == 1.0f);
      pred.data[i] = static_cast<float>(rng.uniform());
      // move toward the truth by a random fraction
      better.data[i] = pred.data[i] +
                       static_cast<float>(rng.uniform()) *
                           (gt.data[i] - pred.data[i]);
    }
    if (pos == 0)
      continue;
    double f = f_beta(pred, gt);
    CHECK(f == doctest::Approx(oracles::max_f_beta(pred.data, gt.data, 0.3))
                   .epsilon(1e-12));
    CHECK(f_beta(better, gt) >= f - 1e-12);
  }
}
