#include "dilo/saliency.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dilo {

std::string to_string(SaliencyMethod m) {
  switch (m) {
  case SaliencyMethod::GS:
    return "gs";
  case SaliencyMethod::MC:
    return "mc";
  case SaliencyMethod::RBD:
    return "rbd";
  }
  return "?";
}

SaliencyMethod saliency_method_from_string(const std::string &s) {
  if (s == "gs" || s == "GS")
    return SaliencyMethod::GS;
  if (s == "mc" || s == "MC")
    return SaliencyMethod::MC;
  if (s == "rbd" || s == "RBD")
    return SaliencyMethod::RBD;
  throw parameter_error("unknown saliency method: " + s);
}

namespace {

/// Span normalization with the constant-map convention (constant -> 0).
void span_normalize(std::vector<double> &v) {
  auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  double lo = *mn, hi = *mx;
  if (hi - lo < 1e-12) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  double inv = 1.0 / (hi - lo);
  for (auto &x : v)
    x = (x - lo) * inv;
}

Mask upsample(const SuperpixelLabeling &labeling,
              const std::vector<double> &region_scores) {
  Mask m(labeling.height, labeling.width);
  const std::size_t n = m.pixel_count();
  for (std::size_t i = 0; i < n; ++i)
    m.data[i] = static_cast<float>(region_scores[labeling.labels[i]]);
  return m;
}

std::vector<int> boundary_set(const RegionGraph &g) {
  std::vector<int> b;
  for (int r = 0; r < g.region_count; ++r)
    if (g.boundary[r])
      b.push_back(r);
  return b;
}

/// The cited background-detection construction closes the graph by
/// connecting every pair of boundary regions, so background appearing on
/// opposite sides of the image stays geodesically coherent. (For the
/// geodesic-saliency method this is a no-op: boundary regions are already
/// distance-zero sources.)
RegionGraph with_boundary_ring(const RegionGraph &g) {
  RegionGraph out = g;
  const std::vector<int> b = boundary_set(g);
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = i + 1; j < b.size(); ++j) {
      if (g.adjacent(b[i], b[j]))
        continue;
      double d = g.color_distance(b[i], b[j]);
      out.adjacency[b[i]].emplace_back(b[j], d);
      out.adjacency[b[j]].emplace_back(b[i], d);
    }
  return out;
}

/// Adjacency extended with pairs that share a neighbor (2-hop).
std::vector<std::vector<int>> two_hop_neighbors(const RegionGraph &g) {
  const int k = g.region_count;
  std::vector<std::vector<std::uint8_t>> seen(k,
                                              std::vector<std::uint8_t>(k, 0));
  for (int i = 0; i < k; ++i)
    for (const auto &[j, w] : g.adjacency[i]) {
      seen[i][j] = 1;
      for (const auto &[j2, w2] : g.adjacency[j])
        if (j2 != i)
          seen[i][j2] = 1;
    }
  std::vector<std::vector<int>> out(k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (seen[i][j])
        out[i].push_back(j);
  return out;
}

struct Precomputed {
  SuperpixelLabeling labeling;
  RegionGraph graph;
};

Precomputed segment(const Image &img, const SaliencyParams &p) {
  if (img.channels != 3)
    throw dimension_error("saliency: expected a 3-channel image");
  Precomputed pc;
  pc.labeling = slic_segment(img, p.slic);
  pc.graph = build_region_graph(img, pc.labeling);
  return pc;
}

} // namespace

std::vector<double>
absorption_times(const std::vector<std::vector<double>> &q) {
  const int n = static_cast<int>(q.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(q[i].size()) != n)
      throw dimension_error("absorption_times: Q is not square");
    for (int j = 0; j < n; ++j)
      a(i, j) -= q[i][j];
  }
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd t = lu.solve(ones);
  // High-contrast regions can make exit probabilities (and so the times)
  // astronomically large; the solve stays backward stable, so judge the
  // residual relative to the solution scale.
  double resid = (a * t - ones).lpNorm<Eigen::Infinity>();
  double scale = std::max(1.0, t.lpNorm<Eigen::Infinity>());
  if (!t.allFinite() || resid / scale > 1e-9)
    throw internal_error("absorption_times: I-Q is singular or ill-conditioned"
                         " (relative residual " +
                         std::to_string(resid / scale) + ")");
  return std::vector<double>(t.data(), t.data() + n);
}

std::vector<double>
solve_background_optimization(const std::vector<double> &w_bg,
                              const std::vector<double> &w_fg,
                              const std::vector<std::array<int, 2>> &edges,
                              const std::vector<double> &edge_weights) {
  const int n = static_cast<int>(w_bg.size());
  if (w_fg.size() != w_bg.size() || edges.size() != edge_weights.size())
    throw dimension_error("solve_background_optimization: size mismatch");
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b(n);
  for (int i = 0; i < n; ++i) {
    l(i, i) = w_bg[i] + w_fg[i];
    b(i) = w_fg[i];
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    int i = edges[e][0], j = edges[e][1];
    double w = edge_weights[e];
    l(i, i) += w;
    l(j, j) += w;
    l(i, j) -= w;
    l(j, i) -= w;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(l);
  Eigen::VectorXd s = ldlt.solve(b);
  double resid = (l * s - b).lpNorm<Eigen::Infinity>();
  if (!s.allFinite() || resid >= 1e-8) {
    std::ostringstream os;
    os << "solve_background_optimization: solver residual " << resid
       << " exceeds 1e-8";
    throw internal_error(os.str());
  }
  return std::vector<double>(s.data(), s.data() + n);
}

SaliencyMap saliency_gs(const Image &img, const SaliencyParams &params) {
  Precomputed pc = segment(img, params);
  // Virtual background node at distance 0 from every boundary region:
  // region saliency is the multi-source geodesic distance from the
  // boundary set.
  std::vector<double> scores = geodesic_from(pc.graph, boundary_set(pc.graph));
  span_normalize(scores);
  return {upsample(pc.labeling, scores), SaliencyMethod::GS, params};
}

SaliencyMap saliency_mc(const Image &img, const SaliencyParams &params) {
  Precomputed pc = segment(img, params);
  const RegionGraph &g = pc.graph;
  const int n = g.region_count;
  const std::vector<int> bset = boundary_set(g);
  const auto ext = two_hop_neighbors(g);
  const double denom = 2.0 * params.sigma_clr * params.sigma_clr;

  // Transient states are all regions; each boundary region additionally
  // gets an absorbing duplicate reachable from itself and from its
  // extended neighborhood.
  std::vector<std::uint8_t> is_ext(n, 0);
  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j : ext[i]) {
      double d = g.color_distance(i, j);
      q[i][j] = std::exp(-d * d / denom);
      row_sum += q[i][j];
    }
    for (int m = 0; m < n; ++m)
      is_ext[m] = 0;
    for (int j : ext[i])
      is_ext[j] = 1;
    for (int b : bset) {
      if (b == i || is_ext[b]) {
        double d = g.color_distance(i, b);
        row_sum += std::exp(-d * d / denom);
      }
    }
    if (row_sum <= 0.0)
      throw internal_error("saliency_mc: isolated transient state");
    for (int j = 0; j < n; ++j)
      q[i][j] /= row_sum;
  }

  std::vector<double> t = absorption_times(q);
  span_normalize(t);
  return {upsample(pc.labeling, t), SaliencyMethod::MC, params};
}

std::vector<double> boundary_connectivity(
    const RegionGraph &graph, const std::vector<std::vector<double>> &geo,
    const SaliencyParams &params) {
  const int n = graph.region_count;
  const double denom = 2.0 * params.sigma_clr * params.sigma_clr;
  std::vector<double> bndcon(n);
  for (int p = 0; p < n; ++p) {
    double area = 0.0, len = 0.0;
    for (int i = 0; i < n; ++i) {
      double k = std::exp(-geo[p][i] * geo[p][i] / denom);
      area += k;
      if (graph.boundary[i])
        len += k;
    }
    bndcon[p] = len / std::sqrt(area);
  }
  return bndcon;
}

SaliencyMap saliency_rbd(const Image &img, const SaliencyParams &params) {
  Precomputed pc = segment(img, params);
  const RegionGraph &g = pc.graph;
  const int n = g.region_count;

  RegionGraph ringed = with_boundary_ring(g);
  std::vector<std::vector<double>> geo = geodesic_distances(ringed);
  std::vector<double> bndcon = boundary_connectivity(ringed, geo, params);

  std::vector<double> w_bg(n);
  for (int i = 0; i < n; ++i)
    w_bg[i] = 1.0 - std::exp(-bndcon[i] * bndcon[i] /
                             (2.0 * params.sigma_bnd * params.sigma_bnd));

  // Background-weighted contrast.
  const double spa_denom = 2.0 * params.sigma_spa * params.sigma_spa;
  std::vector<double> w_fg(n, 0.0);
  for (int p = 0; p < n; ++p) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == p)
        continue;
      double dx = g.centroid[p][0] - g.centroid[i][0];
      double dy = g.centroid[p][1] - g.centroid[i][1];
      double d_spa2 = dx * dx + dy * dy;
      acc += g.color_distance(p, i) * std::exp(-d_spa2 / spa_denom) * w_bg[i];
    }
    w_fg[p] = acc;
  }
  span_normalize(w_fg);

  std::vector<std::array<int, 2>> edges;
  std::vector<double> weights;
  const double clr_denom = 2.0 * params.sigma_clr * params.sigma_clr;
  for (int i = 0; i < n; ++i)
    for (const auto &[j, d] : g.adjacency[i])
      if (i < j) {
        edges.push_back({i, j});
        weights.push_back(std::exp(-d * d / clr_denom) + params.mu);
      }

  std::vector<double> s =
      solve_background_optimization(w_bg, w_fg, edges, weights);
  for (auto &v : s)
    v = std::clamp(v, 0.0, 1.0);
  span_normalize(s);
  return {upsample(pc.labeling, s), SaliencyMethod::RBD, params};
}

SaliencyMap compute_saliency(SaliencyMethod method, const Image &img,
                             const SaliencyParams &params) {
  switch (method) {
  case SaliencyMethod::GS:
    return saliency_gs(img, params);
  case SaliencyMethod::MC:
    return saliency_mc(img, params);
  case SaliencyMethod::RBD:
    return saliency_rbd(img, params);
  }
  throw parameter_error("compute_saliency: bad method");
}

Mask binarize(const Mask &map, double threshold) {
  if (threshold < 0.0 || threshold > 1.0)
    throw parameter_error("binarize: threshold must be in [0,1]");
  Mask out(map.height, map.width);
  for (std::size_t i = 0; i < map.data.size(); ++i)
    out.data[i] = map.data[i] >= threshold ? 1.0f : 0.0f;
  return out;
}

double adaptive_threshold(const Mask &map) {
  double mean = 0.0;
  for (float v : map.data)
    mean += v;
  mean /= static_cast<double>(map.data.size());
  return std::min(2.0 * mean, 0.9);
}

double f_beta(const Mask &pred, const Mask &gt, double beta2) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw dimension_error("f_beta: mask dims differ");
  std::size_t n = gt.data.size(), gt_pos = 0;
  for (float v : gt.data) {
    if (v != 0.0f && v != 1.0f)
      throw parameter_error("f_beta: ground truth must be binary");
    gt_pos += (v == 1.0f);
  }
  if (gt_pos == 0)
    throw metric_error("f_beta: ground truth has no foreground");

  double best = 0.0;
  for (int i = 0; i < 256; ++i) {
    double t = i / 255.0;
    std::size_t tp = 0, fp = 0;
    for (std::size_t p = 0; p < n; ++p) {
      if (pred.data[p] >= t) {
        if (gt.data[p] == 1.0f)
          ++tp;
        else
          ++fp;
      }
    }
    double precision = (tp + fp == 0)
                           ? 1.0
                           : static_cast<double>(tp) / static_cast<double>(tp + fp);
    double recall = static_cast<double>(tp) / static_cast<double>(gt_pos);
    double denom = beta2 * precision + recall;
    double f = denom == 0.0 ? 0.0 : (1.0 + beta2) * precision * recall / denom;
    best = std::max(best, f);
  }
  return best;
}

double mae(const Mask &pred, const Mask &gt) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw dimension_error("mae: mask dims differ");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.data.size(); ++i)
    acc += std::abs(static_cast<double>(pred.data[i]) - gt.data[i]);
  return acc / static_cast<double>(pred.data.size());
}

} // namespace dilo
