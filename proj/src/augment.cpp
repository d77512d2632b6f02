#include "dilo/augment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "dilo/png_io.hpp"

namespace dilo {

std::string to_string(BlendMode m) {
  switch (m) {
  case BlendMode::None:
    return "none";
  case BlendMode::Gaussian:
    return "gaussian";
  case BlendMode::Mix:
    return "mix";
  }
  return "?";
}

BlendMode blend_mode_from_string(const std::string &s) {
  if (s == "none")
    return BlendMode::None;
  if (s == "gaussian")
    return BlendMode::Gaussian;
  if (s == "mix")
    return BlendMode::Mix;
  throw parameter_error("unknown blend mode: " + s);
}

std::string to_string(BackgroundKind k) {
  switch (k) {
  case BackgroundKind::Grayscale:
    return "gray";
  case BackgroundKind::TextureDir:
    return "texture";
  case BackgroundKind::DatasetCrops:
    return "crops";
  }
  return "?";
}

void AugmentationConfig::validate() const {
  if (aug_ratio < 0.0 || aug_ratio > 1.0)
    throw parameter_error("aug_ratio must be in [0,1]");
  if (!(crop_scale_min > 0.0 && crop_scale_min <= crop_scale_max &&
        crop_scale_max <= 1.0))
    throw parameter_error("crop_scale_range must be within (0,1]");
  if (flip_prob < 0.0 || flip_prob > 1.0 || gray_prob < 0.0 || gray_prob > 1.0)
    throw parameter_error("probabilities must be in [0,1]");
  if (output_size < 8)
    throw parameter_error("output_size too small");
}

// ---------------------------------------------------------------------------
// raster helpers

Image crop(const Image &img, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || y0 + h > img.height || x0 + w > img.width)
    throw dimension_error("crop: window outside image");
  Image out(h, w, img.channels);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return out;
}

Image resize_bilinear(const Image &img, int out_h, int out_w) {
  Image out(out_h, out_w, img.channels);
  const double sy = static_cast<double>(img.height) / out_h;
  const double sx = static_cast<double>(img.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double wy = fy - y0;
    int y0c = std::clamp(y0, 0, img.height - 1);
    int y1c = std::clamp(y0 + 1, 0, img.height - 1);
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double wx = fx - x0;
      int x0c = std::clamp(x0, 0, img.width - 1);
      int x1c = std::clamp(x0 + 1, 0, img.width - 1);
      for (int c = 0; c < img.channels; ++c) {
        double top = (1.0 - wx) * img.at(y0c, x0c, c) + wx * img.at(y0c, x1c, c);
        double bot = (1.0 - wx) * img.at(y1c, x0c, c) + wx * img.at(y1c, x1c, c);
        out.at(y, x, c) = static_cast<float>((1.0 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

Image hflip(const Image &img) {
  Image out(img.height, img.width, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
  return out;
}

void rgb_to_hsv(float r, float g, float b, float &h, float &s, float &v) {
  float mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  float d = mx - mn;
  s = mx == 0.f ? 0.f : d / mx;
  if (d == 0.f) {
    h = 0.f;
    return;
  }
  if (mx == r)
    h = (g - b) / d + (g < b ? 6.f : 0.f);
  else if (mx == g)
    h = (b - r) / d + 2.f;
  else
    h = (r - g) / d + 4.f;
  h /= 6.f;
}

void hsv_to_rgb(float h, float s, float v, float &r, float &g, float &b) {
  h = h - std::floor(h);
  float i = std::floor(h * 6.f);
  float f = h * 6.f - i;
  float p = v * (1.f - s);
  float q = v * (1.f - f * s);
  float t = v * (1.f - (1.f - f) * s);
  switch (static_cast<int>(i) % 6) {
  case 0: r = v; g = t; b = p; break;
  case 1: r = q; g = v; b = p; break;
  case 2: r = p; g = v; b = t; break;
  case 3: r = p; g = q; b = v; break;
  case 4: r = t; g = p; b = v; break;
  default: r = v; g = p; b = q; break;
  }
}

// ---------------------------------------------------------------------------
// background providers

BackgroundProvider BackgroundProvider::grayscale() {
  BackgroundProvider p;
  p.kind_ = BackgroundKind::Grayscale;
  return p;
}

BackgroundProvider BackgroundProvider::texture_dir(const std::string &dir) {
  namespace fs = std::filesystem;
  BackgroundProvider p;
  p.kind_ = BackgroundKind::TextureDir;
  std::vector<std::string> paths;
  std::error_code ec;
  for (const auto &e : fs::directory_iterator(dir, ec))
    if (e.is_regular_file() && e.path().extension() == ".png")
      paths.push_back(e.path().string());
  if (ec)
    throw io_error("texture_dir: cannot read " + dir + ": " + ec.message());
  std::sort(paths.begin(), paths.end());
  for (const auto &path : paths) {
    Image img = png_read(path);
    p.pool_.push_back(img.channels == 3 ? std::move(img) : gray_to_rgb(img));
  }
  if (p.pool_.empty())
    throw config_error("texture_dir: no PNG textures found in " + dir);
  return p;
}

BackgroundProvider BackgroundProvider::dataset_crops(std::vector<Image> pool) {
  if (pool.empty())
    throw config_error("dataset_crops: empty crop pool");
  BackgroundProvider p;
  p.kind_ = BackgroundKind::DatasetCrops;
  p.pool_ = std::move(pool);
  return p;
}

Image BackgroundProvider::sample(int h, int w, Rng &rng) const {
  switch (kind_) {
  case BackgroundKind::Grayscale: {
    float level = static_cast<float>(rng.uniform());
    return Image(h, w, 3, level);
  }
  case BackgroundKind::TextureDir: {
    if (pool_.empty())
      throw config_error("BackgroundProvider: texture pool is empty");
    const Image &tex = pool_[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(pool_.size()) - 1))];
    // Random square window, between 30% and 100% of the short side.
    int side = std::min(tex.height, tex.width);
    int cs = std::max(1, static_cast<int>(std::lround(
                             side * rng.uniform(0.3, 1.0))));
    int y0 = rng.uniform_int(0, tex.height - cs);
    int x0 = rng.uniform_int(0, tex.width - cs);
    return resize_bilinear(crop(tex, y0, x0, cs, cs), h, w);
  }
  case BackgroundKind::DatasetCrops: {
    if (pool_.empty())
      throw config_error("BackgroundProvider: crop pool is empty");
    const Image &c = pool_[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(pool_.size()) - 1))];
    return resize_bilinear(c, h, w);
  }
  }
  throw internal_error("BackgroundProvider: bad kind");
}

std::vector<Image> harvest_no_saliency_crops(const std::string &dataset_dir,
                                             int count, std::uint64_t seed,
                                             const SaliencyParams &params) {
  if (count <= 0)
    throw config_error("harvest_no_saliency_crops: count must be positive");
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  fs::path imgdir = fs::path(dataset_dir) / "images";
  if (!fs::is_directory(imgdir))
    imgdir = dataset_dir;
  for (const auto &e : fs::directory_iterator(imgdir))
    if (e.is_regular_file() && e.path().extension() == ".png")
      paths.push_back(e.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty())
    throw config_error("harvest_no_saliency_crops: no images in " +
                       dataset_dir);

  Rng rng(seed);
  std::vector<Image> pool;
  const long long budget = 50LL * count;
  for (long long attempt = 0;
       attempt < budget && static_cast<int>(pool.size()) < count; ++attempt) {
    const std::string &path = paths[static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<int>(paths.size()) - 1))];
    Image img = png_read(path);
    if (img.channels == 1)
      img = gray_to_rgb(img);
    int side = std::min(img.height, img.width);
    int cs = std::max(16, static_cast<int>(std::lround(
                              side * rng.uniform(0.4, 0.8))));
    cs = std::min(cs, side);
    int y0 = rng.uniform_int(0, img.height - cs);
    int x0 = rng.uniform_int(0, img.width - cs);
    Image window = crop(img, y0, x0, cs, cs);
    SaliencyMap sal = saliency_rbd(window, params);
    double mean = 0.0;
    for (float v : sal.mask.data)
      mean += v;
    mean /= static_cast<double>(sal.mask.data.size());
    if (mean < 0.1)
      pool.push_back(std::move(window));
  }
  if (pool.empty())
    throw config_error("harvest_no_saliency_crops: no crop passed the "
                       "saliency filter");
  if (static_cast<int>(pool.size()) < count)
    std::cerr << "harvest_no_saliency_crops: collected " << pool.size()
              << " of " << count << " crops before exhausting the budget\n";
  return pool;
}

// ---------------------------------------------------------------------------
// blending and compositing

namespace {

std::vector<float> gaussian_kernel(double sigma) {
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (auto &v : k)
    v = static_cast<float>(v / sum);
  return k;
}

Mask gaussian_blur(const Mask &m, double sigma) {
  const std::vector<float> k = gaussian_kernel(sigma);
  const int radius = static_cast<int>(k.size() / 2);
  const int h = m.height, w = m.width;
  Mask tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        int xx = std::clamp(x + i, 0, w - 1); // replicate padding
        acc += k[i + radius] * m.at(y, xx);
      }
      tmp.at(y, x) = static_cast<float>(acc);
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        int yy = std::clamp(y + i, 0, h - 1);
        acc += k[i + radius] * tmp.at(yy, x);
      }
      out.at(y, x) = std::clamp(static_cast<float>(acc), 0.0f, 1.0f);
    }
  return out;
}

} // namespace

Mask blend_mask(const Mask &binary_mask, BlendMode mode, Rng &rng) {
  switch (mode) {
  case BlendMode::None:
    return binary_mask;
  case BlendMode::Gaussian:
    return gaussian_blur(binary_mask, 2.0);
  case BlendMode::Mix:
    return rng.bernoulli(0.5) ? gaussian_blur(binary_mask, 2.0) : binary_mask;
  }
  throw parameter_error("blend_mask: bad mode");
}

Image copy_paste(const Image &fg, const Mask &alpha, const Image &bg) {
  if (!fg.same_dims(bg) || fg.height != alpha.height || fg.width != alpha.width)
    throw dimension_error("copy_paste: dimension mismatch");
  Image out(fg.height, fg.width, fg.channels);
  const std::size_t n = fg.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    float a = alpha.data[i];
    for (int c = 0; c < fg.channels; ++c)
      out.data[i * fg.channels + c] = a * fg.data[i * fg.channels + c] +
                                      (1.0f - a) * bg.data[i * fg.channels + c];
  }
  return out;
}

// ---------------------------------------------------------------------------
// standard augmentations

namespace {

Image random_resized_crop(const Image &img, const AugmentationConfig &cfg,
                          Rng &rng) {
  const int h = img.height, w = img.width;
  const double area = static_cast<double>(h) * w;
  int cy = -1, cx = -1, ch = 0, cw = 0;
  for (int attempt = 0; attempt < 10; ++attempt) {
    double target = rng.uniform(cfg.crop_scale_min, cfg.crop_scale_max) * area;
    double aspect = rng.uniform(3.0 / 4.0, 4.0 / 3.0);
    int tw = static_cast<int>(std::lround(std::sqrt(target * aspect)));
    int th = static_cast<int>(std::lround(std::sqrt(target / aspect)));
    if (tw >= 1 && th >= 1 && tw <= w && th <= h) {
      cy = rng.uniform_int(0, h - th);
      cx = rng.uniform_int(0, w - tw);
      ch = th;
      cw = tw;
      break;
    }
  }
  if (cy < 0) { // fallback: centered square of the short side
    int side = std::min(h, w);
    cy = (h - side) / 2;
    cx = (w - side) / 2;
    ch = cw = side;
  }
  return resize_bilinear(crop(img, cy, cx, ch, cw), cfg.output_size,
                         cfg.output_size);
}

void clamp01(Image &img) {
  for (auto &v : img.data)
    v = std::clamp(v, 0.0f, 1.0f);
}

float luma_mean(const Image &img) {
  double acc = 0.0;
  const std::size_t n = img.pixel_count();
  for (std::size_t i = 0; i < n; ++i)
    acc += 0.299 * img.data[3 * i] + 0.587 * img.data[3 * i + 1] +
           0.114 * img.data[3 * i + 2];
  return static_cast<float>(acc / static_cast<double>(n));
}

} // namespace

Image standard_augs(const Image &img, const AugmentationConfig &cfg, Rng &rng) {
  if (img.height < cfg.output_size || img.width < cfg.output_size)
    throw dimension_error("standard_augs: image smaller than output size");
  Image out = random_resized_crop(img, cfg, rng);

  if (rng.uniform() < cfg.flip_prob)
    out = hflip(out);

  // Brightness, contrast, saturation, hue, in that order; the draws always
  // happen so the stream does not depend on the strengths.
  float fb = static_cast<float>(
      rng.uniform(1.0 - cfg.jitter_brightness, 1.0 + cfg.jitter_brightness));
  float fc = static_cast<float>(
      rng.uniform(1.0 - cfg.jitter_contrast, 1.0 + cfg.jitter_contrast));
  float fs = static_cast<float>(
      rng.uniform(1.0 - cfg.jitter_saturation, 1.0 + cfg.jitter_saturation));
  float dh = static_cast<float>(rng.uniform(-cfg.jitter_hue, cfg.jitter_hue));
  bool to_gray = rng.uniform() < cfg.gray_prob;

  for (auto &v : out.data)
    v *= fb;
  clamp01(out);

  float mean = luma_mean(out);
  for (auto &v : out.data)
    v = mean + fc * (v - mean);
  clamp01(out);

  const std::size_t n = out.pixel_count();
  for (std::size_t i = 0; i < n; ++i) {
    float l = 0.299f * out.data[3 * i] + 0.587f * out.data[3 * i + 1] +
              0.114f * out.data[3 * i + 2];
    for (int c = 0; c < 3; ++c)
      out.data[3 * i + c] = l + fs * (out.data[3 * i + c] - l);
  }
  clamp01(out);

  if (dh != 0.0f) {
    for (std::size_t i = 0; i < n; ++i) {
      float hh, ss, vv;
      rgb_to_hsv(out.data[3 * i], out.data[3 * i + 1], out.data[3 * i + 2],
                 hh, ss, vv);
      hsv_to_rgb(hh + dh, ss, vv, out.data[3 * i], out.data[3 * i + 1],
                 out.data[3 * i + 2]);
    }
    clamp01(out);
  }

  if (to_gray)
    out = gray_to_rgb(to_grayscale(out));
  return out;
}

Image augment_view(const Image &img, const SaliencyMap &saliency,
                   const AugmentationConfig &cfg,
                   const BackgroundProvider &provider, Rng &rng) {
  Image composed;
  if (rng.uniform() < cfg.aug_ratio) {
    Mask binary = binarize(saliency.mask, adaptive_threshold(saliency.mask));
    Mask alpha = blend_mask(binary, cfg.blend, rng);
    Image bg = provider.sample(img.height, img.width, rng);
    composed = copy_paste(img, alpha, bg);
  } else {
    composed = img; // context preservation: keep the original full image
  }
  return standard_augs(composed, cfg, rng);
}

std::pair<Image, Image> augment_pair(const Image &img,
                                     const SaliencyMap &saliency,
                                     const AugmentationConfig &cfg,
                                     const BackgroundProvider &provider,
                                     Rng &rng) {
  Image q = augment_view(img, saliency, cfg, provider, rng);
  Image k = augment_view(img, saliency, cfg, provider, rng);
  return {std::move(q), std::move(k)};
}

} // namespace dilo
