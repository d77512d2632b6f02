#ifndef DILO_AUGMENT_HPP
#define DILO_AUGMENT_HPP

#include <string>
#include <utility>
#include <vector>

#include "dilo/image.hpp"
#include "dilo/rng.hpp"
#include "dilo/saliency.hpp"

namespace dilo {

enum class BlendMode { None, Gaussian, Mix };
enum class BackgroundKind { Grayscale, TextureDir, DatasetCrops };

std::string to_string(BlendMode m);
BlendMode blend_mode_from_string(const std::string &s);
std::string to_string(BackgroundKind k);

/// Supplies replacement backgrounds. Grayscale needs no assets; the other
/// two keep a pool of images loaded up front.
class BackgroundProvider {
public:
  static BackgroundProvider grayscale();
  /// Pool = every PNG in the directory, sorted by filename.
  static BackgroundProvider texture_dir(const std::string &dir);
  static BackgroundProvider dataset_crops(std::vector<Image> pool);

  BackgroundKind kind() const { return kind_; }
  std::size_t pool_size() const { return pool_.size(); }

  /// Grayscale: constant image at a uniform random level. TextureDir:
  /// random crop of a random texture, resized. DatasetCrops: random pool
  /// member, resized.
  Image sample(int h, int w, Rng &rng) const;

private:
  BackgroundKind kind_ = BackgroundKind::Grayscale;
  std::vector<Image> pool_;
};

/// Random square crops kept only when their mean RBD saliency is below
/// 0.1. Tries at most 50*count crops; a shortfall is reported on stderr,
/// zero acceptances throw config_error.
std::vector<Image> harvest_no_saliency_crops(const std::string &dataset_dir,
                                             int count, std::uint64_t seed,
                                             const SaliencyParams &params = {});

struct AugmentationConfig {
  double aug_ratio = 0.3; // probability of copy-paste per view
  BlendMode blend = BlendMode::Mix;
  BackgroundKind background = BackgroundKind::Grayscale;
  std::string background_dir; // TextureDir / DatasetCrops asset path
  SaliencyMethod saliency_method = SaliencyMethod::RBD;
  double flip_prob = 0.5;
  double crop_scale_min = 0.2;
  double crop_scale_max = 1.0;
  double jitter_brightness = 0.4;
  double jitter_contrast = 0.4;
  double jitter_saturation = 0.4;
  double jitter_hue = 0.1;
  double gray_prob = 0.2;
  int output_size = 64;
  std::uint64_t seed = 0;

  void validate() const;
};

/// None: identity. Gaussian: blur with sigma = 2px truncated at 3 sigma
/// (replicate padding). Mix: fair per-call coin between the two.
Mask blend_mask(const Mask &binary_mask, BlendMode mode, Rng &rng);

/// out = alpha*fg + (1-alpha)*bg, per pixel and channel.
Image copy_paste(const Image &fg, const Mask &alpha, const Image &bg);

/// Random resized crop, horizontal flip, color jitter (brightness,
/// contrast, saturation, hue in that order), random grayscale. The RNG
/// draw sequence is fixed regardless of the strengths, so a zeroed config
/// consumes the same stream.
Image standard_augs(const Image &img, const AugmentationConfig &cfg, Rng &rng);

/// The two-view pipeline: per view, copy-paste with probability aug_ratio
/// (binarize saliency at the adaptive threshold, blend, sample background,
/// composite), otherwise keep the full image for context; then
/// standard_augs. Both views come from the same source image.
std::pair<Image, Image> augment_pair(const Image &img,
                                     const SaliencyMap &saliency,
                                     const AugmentationConfig &cfg,
                                     const BackgroundProvider &provider,
                                     Rng &rng);

/// Single view of the pair (exposed for tests and the augment CLI).
Image augment_view(const Image &img, const SaliencyMap &saliency,
                   const AugmentationConfig &cfg,
                   const BackgroundProvider &provider, Rng &rng);

// Raster helpers shared with the diagnostics code.
Image resize_bilinear(const Image &img, int out_h, int out_w);
Image crop(const Image &img, int y0, int x0, int h, int w);
Image hflip(const Image &img);
void rgb_to_hsv(float r, float g, float b, float &h, float &s, float &v);
void hsv_to_rgb(float h, float s, float v, float &r, float &g, float &b);

} // namespace dilo

#endif
