#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "dilo/rng.hpp"
#include "dilo/superpixel.hpp"
#include "oracles.hpp"

using namespace dilo;

namespace {

Image uniform_image(int h, int w, float r, float g, float b) {
  Image img(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      img.at(y, x, 0) = r;
      img.at(y, x, 1) = g;
      img.at(y, x, 2) = b;
    }
  return img;
}

Image random_image(int h, int w, std::uint64_t seed) {
  Image img(h, w, 3);
  Rng rng(seed);
  for (auto &v : img.data)
    v = static_cast<float>(rng.uniform());
  return img;
}

} // namespace

TEST_CASE("slic on a uniform image with k=4 gives four near-quadrants") {
  Image img = uniform_image(64, 64, 0.4f, 0.6f, 0.2f);
  SuperpixelLabeling lab = slic_segment(img, 4, 1.0f, 10);
  REQUIRE(lab.region_count == 4);
  std::map<int, int> areas;
  for (int id : lab.labels)
    areas[id]++;
  for (const auto &[id, count] : areas) {
    double frac = count / 4096.0;
    CHECK(frac == doctest::Approx(0.25).epsilon(0.2)); // 0.25 +- 0.05
  }
}

TEST_CASE("slic separates a red/blue half split") {
  const int n = 32;
  Image img(n, n, 3);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      img.at(y, x, 0) = x < n / 2 ? 1.0f : 0.0f;
      img.at(y, x, 2) = x < n / 2 ? 0.0f : 1.0f;
    }
  SuperpixelLabeling lab = slic_segment(img, 2, 1.0f, 10);
  // Majority-map each region to a half, then count agreement.
  std::map<int, std::array<int, 2>> votes;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      votes[lab.at(y, x)][x < n / 2 ? 0 : 1]++;
  int agree = 0;
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const auto &v = votes[lab.at(y, x)];
      int assigned = v[1] > v[0];
      agree += (assigned == (x >= n / 2));
    }
  CHECK(agree >= n * n * 95 / 100);
}

TEST_CASE("slic with zero iterations is the plain grid") {
  Image img = random_image(48, 48, 3);
  SuperpixelLabeling lab = slic_segment(img, 16, 10.0f, 0);
  // 16 regions in a 4x4 grid of 12x12 blocks.
  REQUIRE(lab.region_count == 16);
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      int gy = y / 12, gx = x / 12;
      CHECK(lab.at(y, x) == lab.at(gy * 12, gx * 12));
    }
}

TEST_CASE("slic parameter validation") {
  Image img = random_image(32, 32, 4);
  CHECK_THROWS_AS(slic_segment(img, 3, 1.0f, 5), parameter_error);
  CHECK_THROWS_AS(slic_segment(img, 32 * 32 + 1, 1.0f, 5), parameter_error);
  CHECK_THROWS_AS(slic_segment(random_image(8, 8, 5), 4, 1.0f, 5),
                  parameter_error);
}

TEST_CASE("slic is deterministic and labels stay 4-connected and non-empty") {
  Image img = random_image(40, 40, 11);
  SuperpixelLabeling a = slic_segment(img, 30, 1.0f, 10);
  SuperpixelLabeling b = slic_segment(img, 30, 1.0f, 10);
  CHECK(a.labels == b.labels);

  // Every id non-empty, components connected per id.
  std::vector<int> count(a.region_count, 0);
  for (int id : a.labels)
    ++count[id];
  for (int c : count)
    CHECK(c > 0);
  // Region areas sum to the image.
  // 4-connectivity: flood fill from the first pixel of each region must
  // cover all of it.
  for (int r = 0; r < a.region_count; ++r) {
    std::size_t first = 0;
    while (a.labels[first] != r)
      ++first;
    std::vector<std::size_t> stack{first};
    std::vector<char> seen(a.labels.size(), 0);
    seen[first] = 1;
    int covered = 0;
    while (!stack.empty()) {
      std::size_t p = stack.back();
      stack.pop_back();
      ++covered;
      int y = static_cast<int>(p) / 40, x = static_cast<int>(p) % 40;
      const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        int ny = y + dy[k], nx = x + dx[k];
        if (ny < 0 || ny >= 40 || nx < 0 || nx >= 40)
          continue;
        std::size_t q = static_cast<std::size_t>(ny) * 40 + nx;
        if (!seen[q] && a.labels[q] == r) {
          seen[q] = 1;
          stack.push_back(q);
        }
      }
    }
    CHECK(covered == count[r]);
  }
}

TEST_CASE("region graph of a two-region split") {
  const int n = 32;
  Image img(n, n, 3);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      img.at(y, x, 0) = x < n / 2 ? 1.0f : 0.0f;
  SuperpixelLabeling lab;
  lab.height = n;
  lab.width = n;
  lab.labels.resize(n * n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      lab.labels[y * n + x] = x < n / 2 ? 0 : 1;
  lab.region_count = 2;

  RegionGraph g = build_region_graph(img, lab);
  REQUIRE(g.region_count == 2);
  CHECK(g.adjacency[0].size() == 1);
  CHECK(g.adjacency[1].size() == 1);
  CHECK(g.boundary[0] == 1);
  CHECK(g.boundary[1] == 1);
  CHECK(g.area_fraction[0] == doctest::Approx(0.5));
  CHECK(g.area_fraction[1] == doctest::Approx(0.5));
}

TEST_CASE("region graph of a 3x3 grid has grid adjacency") {
  const int n = 48;
  Image img = uniform_image(n, n, 0.5f, 0.5f, 0.5f);
  SuperpixelLabeling lab;
  lab.height = n;
  lab.width = n;
  lab.labels.resize(n * n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x)
      lab.labels[y * n + x] = (y / 16) * 3 + (x / 16);
  lab.region_count = 9;
  RegionGraph g = build_region_graph(img, lab);
  CHECK(g.adjacency[0].size() == 2); // corner
  CHECK(g.adjacency[2].size() == 2);
  CHECK(g.adjacency[4].size() == 4); // center
  CHECK(g.boundary[4] == 0);
  CHECK(g.boundary[1] == 1);
}

TEST_CASE("region mean color equals the arithmetic per-pixel mean") {
  Image img = random_image(40, 40, 21);
  SuperpixelLabeling lab = slic_segment(img, 25, 1.0f, 10);
  RegionGraph g = build_region_graph(img, lab);
  Image labimg = rgb_to_lab(img);
  std::vector<std::array<double, 3>> sums(g.region_count, {0, 0, 0});
  std::vector<int> counts(g.region_count, 0);
  for (int y = 0; y < 40; ++y)
    for (int x = 0; x < 40; ++x) {
      int r = lab.at(y, x);
      for (int c = 0; c < 3; ++c)
        sums[r][c] += labimg.at(y, x, c);
      counts[r]++;
    }
  double total_area = 0.0;
  for (int r = 0; r < g.region_count; ++r) {
    for (int c = 0; c < 3; ++c)
      CHECK(g.mean_lab[r][c] == doctest::Approx(sums[r][c] / counts[r])
                                    .epsilon(1e-12));
    total_area += g.area_fraction[r];
  }
  CHECK(total_area == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("build_region_graph rejects mismatched dims") {
  Image img = random_image(32, 32, 2);
  SuperpixelLabeling lab = slic_segment(random_image(40, 40, 2), 10, 1.0f, 5);
  CHECK_THROWS_AS(build_region_graph(img, lab), dimension_error);
}

TEST_CASE("geodesic distances: hand cases") {
  // Path graph A-B-C with weights 0.3, 0.4.
  RegionGraph g;
  g.region_count = 3;
  g.mean_lab.assign(3, {0, 0, 0});
  g.centroid.assign(3, {0, 0});
  g.area_fraction.assign(3, 1.0 / 3);
  g.boundary.assign(3, 1);
  g.adjacency = {{{1, 0.3}}, {{0, 0.3}, {2, 0.4}}, {{1, 0.4}}};
  auto d = geodesic_distances(g);
  CHECK(d[0][2] == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(d[0][0] == 0.0);

  // Triangle with weights 1,1,3: across the heavy edge the path relaxes
  // through the third node.
  RegionGraph t;
  t.region_count = 3;
  t.mean_lab.assign(3, {0, 0, 0});
  t.centroid.assign(3, {0, 0});
  t.area_fraction.assign(3, 1.0 / 3);
  t.boundary.assign(3, 1);
  t.adjacency = {{{1, 1.0}, {2, 3.0}}, {{0, 1.0}, {2, 1.0}}, {{0, 3.0}, {1, 1.0}}};
  auto dt = geodesic_distances(t);
  CHECK(dt[0][2] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("geodesic distances match Floyd-Warshall on a 50-node graph") {
  Rng rng(31);
  const int n = 50;
  RegionGraph g;
  g.region_count = n;
  g.mean_lab.assign(n, {0, 0, 0});
  g.centroid.assign(n, {0, 0});
  g.area_fraction.assign(n, 1.0 / n);
  g.boundary.assign(n, 0);
  g.adjacency.assign(n, {});
  std::vector<std::array<int, 2>> edges;
  std::vector<double> weights;
  auto connect = [&](int a, int b, double w) {
    g.adjacency[a].emplace_back(b, w);
    g.adjacency[b].emplace_back(a, w);
    edges.push_back({a, b});
    weights.push_back(w);
  };
  for (int i = 1; i < n; ++i)
    connect(rng.uniform_int(0, i - 1), i, rng.uniform(0.05, 1.0));
  for (int e = 0; e < 60; ++e) {
    int a = rng.uniform_int(0, n - 1), b = rng.uniform_int(0, n - 1);
    if (a != b)
      connect(a, b, rng.uniform(0.05, 1.0));
  }
  auto d = geodesic_distances(g);
  auto ref = oracles::floyd_warshall(n, edges, weights);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      CHECK(std::abs(d[i][j] - ref[i][j]) < 1e-12);
      // symmetry and triangle inequality
      CHECK(d[i][j] == doctest::Approx(d[j][i]).epsilon(1e-12));
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < 12; ++k)
        CHECK(d[i][j] <= d[i][k] + d[k][j] + 1e-12);
}
