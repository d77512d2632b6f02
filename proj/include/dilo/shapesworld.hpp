#ifndef DILO_SHAPESWORLD_HPP
#define DILO_SHAPESWORLD_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "dilo/image.hpp"

namespace dilo {

/// Procedural 64x64 scenes: one shape on one procedural background, with
/// the exact rasterized shape support as ground truth. Shape class and
/// background family are drawn independently, so background-probe accuracy
/// on this data is a pure invariance measure.
namespace shapesworld {

constexpr int kSceneSize = 64;
constexpr int kShapeClasses = 8;     // circle square triangle star ring
                                     // cross crescent diamond
constexpr int kBackgroundFamilies = 6; // linear radial checker stripes
                                       // noise uniform

extern const char *const kShapeNames[kShapeClasses];
extern const char *const kBackgroundNames[kBackgroundFamilies];

struct SceneRecord {
  Image image;            // 64x64x3
  Mask gt_mask;           // binary
  int shape_class = 0;    // 0..7
  int background_family = 0; // 0..5
  std::uint64_t scene_id = 0;
  std::uint64_t seed = 0;
};

/// Deterministic in the seed. Shape gets a random class, color, scale,
/// position and rotation; the background a random family and parameters.
/// Rejection-samples until the foreground covers 8-40% of pixels and the
/// fg/bg mean-Lab distance is at least 0.15 (100 tries, then throws
/// generation_error). Class and family are fixed before the retry loop so
/// their marginals stay uniform.
SceneRecord generate_scene(std::uint64_t seed);

struct ManifestRow {
  std::uint64_t scene_id = 0;
  int shape_class = 0;
  int background_family = 0;
  std::uint64_t seed = 0;
};

/// Writes images/NNNNNN.png, masks/NNNNNN.png and manifest.csv under
/// out_dir, returning the manifest rows.
std::vector<ManifestRow> generate_dataset(int n, std::uint64_t seed,
                                          const std::string &out_dir);

/// Deterministic 90/10 split by scene-id hash rank; exact up to rounding.
std::vector<std::uint8_t> train_split(const std::vector<std::uint64_t> &ids,
                                      double train_fraction = 0.9);

struct Dataset {
  std::vector<SceneRecord> scenes;
  std::vector<std::uint8_t> is_train;

  std::vector<int> train_indices() const;
  std::vector<int> val_indices() const;
};

std::vector<ManifestRow> read_manifest(const std::string &dir);
Dataset load_dataset(const std::string &dir);

} // namespace shapesworld
} // namespace dilo

#endif
