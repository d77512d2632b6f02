#include "dilo/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace dilo {

double RegionGraph::color_distance(int a, int b) const {
  double dx = mean_lab[a][0] - mean_lab[b][0];
  double dy = mean_lab[a][1] - mean_lab[b][1];
  double dz = mean_lab[a][2] - mean_lab[b][2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

namespace {

struct Center {
  double l = 0, a = 0, b = 0;
  double y = 0, x = 0;
};

/// Relabel to 0..count-1 preserving first-occurrence (raster) order, and
/// merge every non-largest connected component of a label into its largest
/// adjacent region.
SuperpixelLabeling enforce_connectivity(SuperpixelLabeling lab) {
  const int h = lab.height, w = lab.width;
  const std::size_t n = static_cast<std::size_t>(h) * w;

  // Connected components of equal label, 4-neighborhood.
  std::vector<int> comp(n, -1);
  std::vector<std::size_t> comp_size;
  std::vector<int> comp_label;
  std::vector<std::size_t> stack;
  int ncomp = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0)
      continue;
    int id = ncomp++;
    comp_label.push_back(lab.labels[s]);
    comp_size.push_back(0);
    stack.clear();
    stack.push_back(s);
    comp[s] = id;
    while (!stack.empty()) {
      std::size_t p = stack.back();
      stack.pop_back();
      ++comp_size[id];
      int y = static_cast<int>(p) / w, x = static_cast<int>(p) % w;
      const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        int ny = y + dy[k], nx = x + dx[k];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w)
          continue;
        std::size_t q = static_cast<std::size_t>(ny) * w + nx;
        if (comp[q] < 0 && lab.labels[q] == lab.labels[p]) {
          comp[q] = id;
          stack.push_back(q);
        }
      }
    }
  }

  // Keep the largest component per label; everything else is an orphan.
  std::vector<int> main_comp(lab.region_count, -1);
  for (int c = 0; c < ncomp; ++c) {
    int l = comp_label[c];
    if (main_comp[l] < 0 || comp_size[c] > comp_size[main_comp[l]])
      main_comp[l] = c;
  }
  std::vector<std::uint8_t> orphan(ncomp, 0);
  for (int c = 0; c < ncomp; ++c)
    orphan[c] = (main_comp[comp_label[c]] != c);

  // Iteratively merge orphans into the largest adjacent non-orphan
  // component. Every orphan touches some other component, and merging in
  // rounds terminates because each round clears all orphans adjacent to a
  // kept component.
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<std::size_t> best_nb(ncomp, 0);
    std::vector<int> best_comp(ncomp, -1);
    for (std::size_t p = 0; p < n; ++p) {
      int cp = comp[p];
      if (!orphan[cp])
        continue;
      int y = static_cast<int>(p) / w, x = static_cast<int>(p) % w;
      const int dy[4] = {-1, 1, 0, 0}, dx[4] = {0, 0, -1, 1};
      for (int k = 0; k < 4; ++k) {
        int ny = y + dy[k], nx = x + dx[k];
        if (ny < 0 || ny >= h || nx < 0 || nx >= w)
          continue;
        int cq = comp[static_cast<std::size_t>(ny) * w + nx];
        if (cq == cp || orphan[cq])
          continue;
        if (best_comp[cp] < 0 || comp_size[cq] > best_nb[cp] ||
            (comp_size[cq] == best_nb[cp] && cq < best_comp[cp])) {
          best_nb[cp] = comp_size[cq];
          best_comp[cp] = cq;
        }
      }
    }
    std::vector<int> remap(ncomp);
    for (int c = 0; c < ncomp; ++c)
      remap[c] = c;
    for (int c = 0; c < ncomp; ++c) {
      if (orphan[c] && best_comp[c] >= 0) {
        remap[c] = best_comp[c];
        orphan[c] = 0;
        changed = true;
      }
    }
    if (changed) {
      for (std::size_t p = 0; p < n; ++p)
        comp[p] = remap[comp[p]];
      // Recompute sizes for the next round.
      std::fill(comp_size.begin(), comp_size.end(), 0);
      for (std::size_t p = 0; p < n; ++p)
        ++comp_size[comp[p]];
    }
  }

  // Compact ids in raster order of first occurrence.
  std::vector<int> newid(ncomp, -1);
  int next = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (newid[comp[p]] < 0)
      newid[comp[p]] = next++;
    lab.labels[p] = newid[comp[p]];
  }
  lab.region_count = next;
  return lab;
}

} // namespace

SuperpixelLabeling slic_segment(const Image &img, int region_target,
                                float compactness, int iterations) {
  const int h = img.height, w = img.width;
  if (h < 16 || w < 16)
    throw parameter_error("slic_segment: image must be at least 16x16");
  if (region_target < 4)
    throw parameter_error("slic_segment: region target must be >= 4");
  if (static_cast<long long>(region_target) > static_cast<long long>(h) * w)
    throw parameter_error("slic_segment: region target exceeds pixel count");
  if (iterations < 0)
    throw parameter_error("slic_segment: negative iteration count");

  Image lab = rgb_to_lab(img);
  const double S =
      std::sqrt(static_cast<double>(h) * w / static_cast<double>(region_target));

  // ceil keeps nx*ny >= k so small targets still split the image.
  int nx = std::max(1, static_cast<int>(std::ceil(w / S)));
  int ny = std::max(1, static_cast<int>(std::ceil(h / S)));
  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx) * ny);
  for (int gy = 0; gy < ny; ++gy)
    for (int gx = 0; gx < nx; ++gx) {
      Center c;
      c.y = (gy + 0.5) * h / ny;
      c.x = (gx + 0.5) * w / nx;
      int py = std::min(h - 1, static_cast<int>(c.y));
      int px = std::min(w - 1, static_cast<int>(c.x));
      c.l = lab.at(py, px, 0);
      c.a = lab.at(py, px, 1);
      c.b = lab.at(py, px, 2);
      centers.push_back(c);
    }
  const int k = static_cast<int>(centers.size());

  SuperpixelLabeling out;
  out.height = h;
  out.width = w;
  out.labels.assign(static_cast<std::size_t>(h) * w, -1);
  out.region_count = k;

  // Initial assignment: nearest center spatially (the grid itself).
  {
    std::vector<double> best(static_cast<std::size_t>(h) * w,
                             std::numeric_limits<double>::infinity());
    for (int ci = 0; ci < k; ++ci) {
      const Center &c = centers[ci];
      int y0 = std::max(0, static_cast<int>(c.y - 2 * S)),
          y1 = std::min(h - 1, static_cast<int>(c.y + 2 * S));
      int x0 = std::max(0, static_cast<int>(c.x - 2 * S)),
          x1 = std::min(w - 1, static_cast<int>(c.x + 2 * S));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          double dy = y + 0.5 - c.y, dx = x + 0.5 - c.x;
          double d = dy * dy + dx * dx;
          std::size_t p = static_cast<std::size_t>(y) * w + x;
          if (d < best[p]) {
            best[p] = d;
            out.labels[p] = ci;
          }
        }
    }
  }

  std::vector<double> dist(static_cast<std::size_t>(h) * w);
  for (int it = 0; it < iterations; ++it) {
    std::fill(dist.begin(), dist.end(),
              std::numeric_limits<double>::infinity());
    for (int ci = 0; ci < k; ++ci) {
      const Center &c = centers[ci];
      int y0 = std::max(0, static_cast<int>(c.y - 2 * S)),
          y1 = std::min(h - 1, static_cast<int>(c.y + 2 * S));
      int x0 = std::max(0, static_cast<int>(c.x - 2 * S)),
          x1 = std::min(w - 1, static_cast<int>(c.x + 2 * S));
      for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
          double dl = lab.at(y, x, 0) - c.l;
          double da = lab.at(y, x, 1) - c.a;
          double db = lab.at(y, x, 2) - c.b;
          double d_lab = std::sqrt(dl * dl + da * da + db * db);
          double dy = y + 0.5 - c.y, dx = x + 0.5 - c.x;
          double d_xy = std::sqrt(dy * dy + dx * dx);
          double d = d_lab + compactness * d_xy / S;
          std::size_t p = static_cast<std::size_t>(y) * w + x;
          if (d < dist[p]) {
            dist[p] = d;
            out.labels[p] = ci;
          }
        }
    }
    // Update centers.
    std::vector<Center> acc(k);
    std::vector<std::size_t> cnt(k, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        int ci = out.labels[static_cast<std::size_t>(y) * w + x];
        if (ci < 0)
          continue;
        acc[ci].l += lab.at(y, x, 0);
        acc[ci].a += lab.at(y, x, 1);
        acc[ci].b += lab.at(y, x, 2);
        acc[ci].y += y + 0.5;
        acc[ci].x += x + 0.5;
        ++cnt[ci];
      }
    for (int ci = 0; ci < k; ++ci) {
      if (cnt[ci] == 0)
        continue; // keep the stale center; connectivity pass cleans up
      double inv = 1.0 / static_cast<double>(cnt[ci]);
      centers[ci].l = acc[ci].l * inv;
      centers[ci].a = acc[ci].a * inv;
      centers[ci].b = acc[ci].b * inv;
      centers[ci].y = acc[ci].y * inv;
      centers[ci].x = acc[ci].x * inv;
    }
  }

  return enforce_connectivity(std::move(out));
}

RegionGraph build_region_graph(const Image &img,
                               const SuperpixelLabeling &labeling) {
  const int h = img.height, w = img.width;
  if (h != labeling.height || w != labeling.width)
    throw dimension_error("build_region_graph: labeling dims do not match image");
  const int k = labeling.region_count;

  Image lab = rgb_to_lab(img);
  RegionGraph g;
  g.region_count = k;
  g.mean_lab.assign(k, {0, 0, 0});
  g.centroid.assign(k, {0, 0});
  g.area_fraction.assign(k, 0.0);
  g.boundary.assign(k, 0);
  g.adjacency.assign(k, {});

  std::vector<std::size_t> cnt(k, 0);
  std::vector<std::vector<std::uint8_t>> adj(k, std::vector<std::uint8_t>(k, 0));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      int r = labeling.at(y, x);
      g.mean_lab[r][0] += lab.at(y, x, 0);
      g.mean_lab[r][1] += lab.at(y, x, 1);
      g.mean_lab[r][2] += lab.at(y, x, 2);
      g.centroid[r][0] += (x + 0.5) / w;
      g.centroid[r][1] += (y + 0.5) / h;
      ++cnt[r];
      if (y == 0 || y == h - 1 || x == 0 || x == w - 1)
        g.boundary[r] = 1;
      if (x + 1 < w) {
        int r2 = labeling.at(y, x + 1);
        if (r2 != r)
          adj[r][r2] = adj[r2][r] = 1;
      }
      if (y + 1 < h) {
        int r2 = labeling.at(y + 1, x);
        if (r2 != r)
          adj[r][r2] = adj[r2][r] = 1;
      }
    }

  const double total = static_cast<double>(h) * w;
  for (int r = 0; r < k; ++r) {
    if (cnt[r] == 0)
      throw internal_error("build_region_graph: empty region id " +
                           std::to_string(r));
    double inv = 1.0 / static_cast<double>(cnt[r]);
    for (auto &v : g.mean_lab[r])
      v *= inv;
    for (auto &v : g.centroid[r])
      v *= inv;
    g.area_fraction[r] = static_cast<double>(cnt[r]) / total;
  }
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b)
      if (adj[a][b])
        g.adjacency[a].emplace_back(b, g.color_distance(a, b));
  return g;
}

std::vector<double> geodesic_from(const RegionGraph &graph,
                                  const std::vector<int> &sources) {
  const int k = graph.region_count;
  std::vector<double> dist(k, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  for (int s : sources) {
    dist[s] = 0.0;
    pq.emplace(0.0, s);
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u])
      continue;
    for (const auto &[v, w] : graph.adjacency[u]) {
      double nd = d + w;
      if (nd < dist[v]) {
        dist[v] = nd;
        pq.emplace(nd, v);
      }
    }
  }
  for (double d : dist)
    if (!std::isfinite(d))
      throw internal_error("geodesic_from: graph is not connected");
  return dist;
}

std::vector<std::vector<double>> geodesic_distances(const RegionGraph &graph) {
  const int k = graph.region_count;
  std::vector<std::vector<double>> d(k);
  for (int s = 0; s < k; ++s)
    d[s] = geodesic_from(graph, {s});
  return d;
}

} // namespace dilo
