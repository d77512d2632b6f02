#ifndef DILO_SUPERPIXEL_HPP
#define DILO_SUPERPIXEL_HPP

#include <array>
#include <utility>
#include <vector>

#include "dilo/image.hpp"

namespace dilo {

/// Per-pixel region ids, 0..region_count-1, each region non-empty and
/// 4-connected.
struct SuperpixelLabeling {
  int height = 0;
  int width = 0;
  std::vector<int> labels;
  int region_count = 0;

  int at(int y, int x) const {
    return labels[static_cast<std::size_t>(y) * width + x];
  }
};

/// Region adjacency graph over a superpixel labeling. Mean colors are in
/// rescaled Lab; centroids in normalized [0,1]^2 coordinates; d_app on an
/// edge is the Euclidean distance between the two mean colors.
struct RegionGraph {
  int region_count = 0;
  std::vector<std::array<double, 3>> mean_lab;
  std::vector<std::array<double, 2>> centroid;
  std::vector<double> area_fraction;
  std::vector<std::uint8_t> boundary; // region touches the image border
  std::vector<std::vector<std::pair<int, double>>> adjacency; // (region, d_app)

  bool adjacent(int a, int b) const {
    for (const auto &[n, w] : adjacency[a])
      if (n == b)
        return true;
    return false;
  }
  double color_distance(int a, int b) const; // d_app between any two regions
};

struct SlicParams {
  int region_target = 200; // k
  float compactness = 1.0f;
  int iterations = 10;
};

/// SLIC superpixels: k-means style clustering in (Lab, xy) with distance
/// D = d_lab + compactness * d_xy / S, S = sqrt(HW/k), grid initialization,
/// and a final connectivity pass that merges orphaned components into their
/// largest neighbor. Deterministic. iterations=0 returns the plain grid.
SuperpixelLabeling slic_segment(const Image &img, int region_target,
                                float compactness, int iterations);

inline SuperpixelLabeling slic_segment(const Image &img,
                                       const SlicParams &p = {}) {
  return slic_segment(img, p.region_target, p.compactness, p.iterations);
}

RegionGraph build_region_graph(const Image &img,
                               const SuperpixelLabeling &labeling);

/// All-pairs geodesic color distance: minimum over paths of the summed edge
/// d_app. Row p is the distance from region p. Symmetric, zero diagonal.
std::vector<std::vector<double>> geodesic_distances(const RegionGraph &graph);

/// Single-source variant; extra_sources are seeded at distance 0 as well
/// (used for the virtual background node of the geodesic saliency method).
std::vector<double> geodesic_from(const RegionGraph &graph,
                                  const std::vector<int> &sources);

} // namespace dilo

#endif
