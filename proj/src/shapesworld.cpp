#include "dilo/shapesworld.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dilo/png_io.hpp"
#include "dilo/rng.hpp"

namespace dilo {
namespace shapesworld {

const char *const kShapeNames[kShapeClasses] = {
    "circle", "square", "triangle", "star",
    "ring",   "cross",  "crescent", "diamond"};
const char *const kBackgroundNames[kBackgroundFamilies] = {
    "linear_gradient", "radial_gradient", "checker",
    "stripes",         "value_noise",     "uniform"};

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Rgb {
  double r, g, b;
};

Rgb random_color(Rng &rng) {
  return {rng.uniform(), rng.uniform(), rng.uniform()};
}

Rgb lerp(const Rgb &a, const Rgb &b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t,
          a.b + (b.b - a.b) * t};
}

// ---- shape membership tests, in the shape's local frame ----------------

bool in_polygon(double qx, double qy, const std::vector<std::array<double, 2>> &v) {
  bool inside = false;
  std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((v[i][1] > qy) != (v[j][1] > qy)) {
      double xint =
          v[j][0] + (qy - v[j][1]) / (v[i][1] - v[j][1]) * (v[i][0] - v[j][0]);
      if (qx < xint)
        inside = !inside;
    }
  }
  return inside;
}

struct ShapeGeometry {
  int cls = 0;
  double cx = 0, cy = 0, radius = 0, rotation = 0;
  std::vector<std::array<double, 2>> polygon; // for triangle / star
};

// Approximate area of each shape as a multiple of radius^2; the rejection
// loop absorbs the rasterization error.
double area_constant(int cls) {
  switch (cls) {
  case 0: return kPi;          // circle
  case 1: return 4.0;          // square, half extent r
  case 2: return 1.299;        // equilateral triangle, circumradius r
  case 3: return 1.3225;       // 5-point star, inner radius 0.45r
  case 4: return kPi * 0.6975; // ring, inner radius 0.55r
  case 5: return 2.31;         // cross, arm half width 0.35r
  case 6: return 1.41;         // crescent
  case 7: return 1.2;          // diamond, half diagonals r and 0.6r
  }
  return kPi;
}

// Largest distance from center to any shape point, per unit radius.
double extent_factor(int cls) {
  switch (cls) {
  case 1: return std::sqrt(2.0);
  case 5: return std::sqrt(1.0 + 0.35 * 0.35);
  default: return 1.0;
  }
}

ShapeGeometry make_geometry(int cls, double cx, double cy, double radius,
                            double rotation) {
  ShapeGeometry g{cls, cx, cy, radius, rotation, {}};
  if (cls == 2) { // triangle: circumradius r, vertices every 120 degrees
    for (int k = 0; k < 3; ++k) {
      double a = kPi / 2 + k * 2.0 * kPi / 3.0;
      g.polygon.push_back({radius * std::cos(a), radius * std::sin(a)});
    }
  } else if (cls == 3) { // star: alternating outer/inner vertices
    for (int k = 0; k < 10; ++k) {
      double rr = (k % 2 == 0) ? radius : 0.45 * radius;
      double a = kPi / 2 + k * kPi / 5.0;
      g.polygon.push_back({rr * std::cos(a), rr * std::sin(a)});
    }
  }
  return g;
}

bool inside_shape(const ShapeGeometry &g, double px, double py) {
  double dx = px - g.cx, dy = py - g.cy;
  double c = std::cos(-g.rotation), s = std::sin(-g.rotation);
  double qx = c * dx - s * dy;
  double qy = s * dx + c * dy;
  double r = g.radius;
  switch (g.cls) {
  case 0:
    return qx * qx + qy * qy <= r * r;
  case 1:
    return std::abs(qx) <= r && std::abs(qy) <= r;
  case 2:
  case 3:
    return in_polygon(qx, qy, g.polygon);
  case 4: {
    double d2 = qx * qx + qy * qy;
    double rin = 0.55 * r;
    return d2 <= r * r && d2 >= rin * rin;
  }
  case 5:
    return (std::abs(qx) <= r && std::abs(qy) <= 0.35 * r) ||
           (std::abs(qy) <= r && std::abs(qx) <= 0.35 * r);
  case 6: {
    if (qx * qx + qy * qy > r * r)
      return false;
    double ox = qx - 0.55 * r;
    double rin = 0.8 * r;
    return ox * ox + qy * qy >= rin * rin;
  }
  case 7:
    return std::abs(qx) / r + std::abs(qy) / (0.6 * r) <= 1.0;
  }
  return false;
}

// ---- background families ------------------------------------------------

Image render_background(int family, Rng &rng, std::array<Rgb, 2> &palette) {
  const int n = kSceneSize;
  Image img(n, n, 3);
  Rgb c0 = random_color(rng), c1 = random_color(rng);
  palette = {c0, c1};
  auto put = [&](int y, int x, const Rgb &c) {
    img.at(y, x, 0) = static_cast<float>(c.r);
    img.at(y, x, 1) = static_cast<float>(c.g);
    img.at(y, x, 2) = static_cast<float>(c.b);
  };
  switch (family) {
  case 0: { // linear gradient
    double a = rng.uniform(0.0, 2.0 * kPi);
    double dx = std::cos(a), dy = std::sin(a);
    double lo = std::min({0.0, dx * (n - 1)}) + std::min(0.0, dy * (n - 1));
    double hi = std::max({0.0, dx * (n - 1)}) + std::max(0.0, dy * (n - 1));
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double t = (dx * x + dy * y - lo) / (hi - lo);
        put(y, x, lerp(c0, c1, t));
      }
    break;
  }
  case 1: { // radial gradient
    double uy = rng.uniform(0.0, n), ux = rng.uniform(0.0, n);
    double maxd = 0.0;
    for (int cy : {0, n})
      for (int cx : {0, n})
        maxd = std::max(maxd, std::hypot(cy - uy, cx - ux));
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double t = std::hypot(y + 0.5 - uy, x + 0.5 - ux) / maxd;
        put(y, x, lerp(c0, c1, std::min(1.0, t)));
      }
    break;
  }
  case 2: { // checker
    int cell = rng.uniform_int(2, 3);
    int oy = rng.uniform_int(0, cell - 1), ox = rng.uniform_int(0, cell - 1);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        int par = ((x + ox) / cell + (y + oy) / cell) & 1;
        put(y, x, par ? c1 : c0);
      }
    break;
  }
  case 3: { // stripes
    double period = rng.uniform(10.0, 18.0);
    double a = rng.uniform(0.0, kPi);
    double off = rng.uniform(0.0, period);
    double dx = std::cos(a), dy = std::sin(a);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double t = dx * x + dy * y + off;
        double f = t / period - std::floor(t / period);
        put(y, x, f < 0.5 ? c0 : c1);
      }
    break;
  }
  case 4: { // two-octave value noise on a random lattice
    int g1 = rng.uniform_int(3, 5);
    int g2 = g1 * 2;
    auto lattice = [&](int g) {
      std::vector<double> v(static_cast<std::size_t>(g + 1) * (g + 1));
      for (auto &x : v)
        x = rng.uniform();
      return v;
    };
    std::vector<double> l1 = lattice(g1), l2 = lattice(g2);
    auto sample = [&](const std::vector<double> &l, int g, double u,
                      double v) {
      double fu = u * g, fv = v * g;
      int iu = std::min(g - 1, static_cast<int>(fu));
      int iv = std::min(g - 1, static_cast<int>(fv));
      double au = fu - iu, av = fv - iv;
      auto at = [&](int yy, int xx) {
        return l[static_cast<std::size_t>(yy) * (g + 1) + xx];
      };
      return (1 - av) * ((1 - au) * at(iv, iu) + au * at(iv, iu + 1)) +
             av * ((1 - au) * at(iv + 1, iu) + au * at(iv + 1, iu + 1));
    };
    std::vector<double> field(static_cast<std::size_t>(n) * n);
    double mn = 1e9, mx = -1e9;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double u = (x + 0.5) / n, v = (y + 0.5) / n;
        double t = 0.65 * sample(l1, g1, u, v) + 0.35 * sample(l2, g2, u, v);
        field[static_cast<std::size_t>(y) * n + x] = t;
        mn = std::min(mn, t);
        mx = std::max(mx, t);
      }
    double inv = mx > mn ? 1.0 / (mx - mn) : 0.0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double t = (field[static_cast<std::size_t>(y) * n + x] - mn) * inv;
        put(y, x, lerp(c0, c1, t));
      }
    break;
  }
  case 5: // uniform color
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        put(y, x, c0);
    break;
  default:
    throw parameter_error("render_background: bad family");
  }
  return img;
}

double lab_distance(const std::array<double, 3> &a,
                    const std::array<double, 3> &b) {
  double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
  return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2);
}

std::array<double, 3> lab_of(const Rgb &c) {
  Image px(1, 1, 3);
  px.data = {static_cast<float>(c.r), static_cast<float>(c.g),
             static_cast<float>(c.b)};
  Image lab = rgb_to_lab(px);
  return {lab.data[0], lab.data[1], lab.data[2]};
}

} // namespace

SceneRecord generate_scene(std::uint64_t seed) {
  Rng rng(seed);
  SceneRecord rec;
  rec.seed = seed;
  rec.shape_class = rng.uniform_int(0, kShapeClasses - 1);
  rec.background_family = rng.uniform_int(0, kBackgroundFamilies - 1);

  const int n = kSceneSize;
  const double total = static_cast<double>(n) * n;

  for (int attempt = 0; attempt < 100; ++attempt) {
    std::array<Rgb, 2> palette;
    Image bg = render_background(rec.background_family, rng, palette);
    Rgb shape_color = random_color(rng);
    // The shape must contrast with each palette color, not only with the
    // background mean, or it can blend into one stripe/checker phase.
    if (lab_distance(lab_of(shape_color), lab_of(palette[0])) < 0.15 ||
        lab_distance(lab_of(shape_color), lab_of(palette[1])) < 0.15)
      continue;

    double frac = rng.uniform(0.10, 0.36);
    double radius = std::sqrt(frac * total / area_constant(rec.shape_class));
    double ext = extent_factor(rec.shape_class) * radius;
    double lo = ext + 2.0, hi = n - ext - 2.0;
    if (lo >= hi)
      continue;
    double cx = rng.uniform(lo, hi), cy = rng.uniform(lo, hi);
    double rot = rng.uniform(0.0, 2.0 * kPi);
    ShapeGeometry geom =
        make_geometry(rec.shape_class, cx, cy, radius, rot);

    Mask mask(n, n);
    std::size_t fg = 0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        if (inside_shape(geom, x + 0.5, y + 0.5)) {
          mask.at(y, x) = 1.0f;
          ++fg;
        }
    double area = fg / total;
    if (area < 0.08 || area > 0.40)
      continue;

    Image img = bg;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        if (mask.at(y, x) == 1.0f) {
          img.at(y, x, 0) = static_cast<float>(shape_color.r);
          img.at(y, x, 1) = static_cast<float>(shape_color.g);
          img.at(y, x, 2) = static_cast<float>(shape_color.b);
        }

    // fg/bg contrast in rescaled Lab.
    Image lab = rgb_to_lab(img);
    std::array<double, 3> fg_mean{0, 0, 0}, bg_mean{0, 0, 0};
    std::size_t nbg = 0;
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        std::array<double, 3> v{lab.at(y, x, 0), lab.at(y, x, 1),
                                lab.at(y, x, 2)};
        if (mask.at(y, x) == 1.0f) {
          for (int c = 0; c < 3; ++c)
            fg_mean[c] += v[c];
        } else {
          for (int c = 0; c < 3; ++c)
            bg_mean[c] += v[c];
          ++nbg;
        }
      }
    for (int c = 0; c < 3; ++c) {
      fg_mean[c] /= static_cast<double>(fg);
      bg_mean[c] /= static_cast<double>(nbg);
    }
    if (lab_distance(fg_mean, bg_mean) < 0.15)
      continue;

    rec.image = std::move(img);
    rec.gt_mask = std::move(mask);
    return rec;
  }
  throw generation_error("generate_scene: rejection budget exhausted for seed " +
                         std::to_string(seed));
}

std::vector<ManifestRow> generate_dataset(int n, std::uint64_t seed,
                                          const std::string &out_dir) {
  if (n < 1)
    throw parameter_error("generate_dataset: n must be >= 1");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  fs::create_directories(fs::path(out_dir) / "masks", ec);
  if (ec)
    throw io_error("generate_dataset: cannot create " + out_dir + ": " +
                   ec.message());

  std::vector<ManifestRow> manifest(n);
  std::vector<SceneRecord> scenes(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (int i = 0; i < n; ++i)
    scenes[i] = generate_scene(mix64(seed + static_cast<std::uint64_t>(i)));

  std::ofstream mf(fs::path(out_dir) / "manifest.csv");
  if (!mf)
    throw io_error("generate_dataset: cannot write manifest in " + out_dir);
  mf << "scene_id,shape_class,background_family,seed\n";
  char name[32];
  for (int i = 0; i < n; ++i) {
    SceneRecord &rec = scenes[i];
    rec.scene_id = static_cast<std::uint64_t>(i);
    std::snprintf(name, sizeof(name), "%06d.png", i);
    png_write((fs::path(out_dir) / "images" / name).string(), rec.image);
    mask_write((fs::path(out_dir) / "masks" / name).string(), rec.gt_mask);
    manifest[i] = {rec.scene_id, rec.shape_class, rec.background_family,
                   rec.seed};
    mf << rec.scene_id << ',' << rec.shape_class << ','
       << rec.background_family << ',' << rec.seed << '\n';
  }
  return manifest;
}

std::vector<std::uint8_t> train_split(const std::vector<std::uint64_t> &ids,
                                      double train_fraction) {
  const std::size_t n = ids.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    std::uint64_t ha = mix64(ids[a]), hb = mix64(ids[b]);
    return ha != hb ? ha < hb : ids[a] < ids[b];
  });
  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(n)));
  std::vector<std::uint8_t> is_train(n, 0);
  for (std::size_t r = 0; r < n_train && r < n; ++r)
    is_train[order[r]] = 1;
  return is_train;
}

std::vector<int> Dataset::train_indices() const {
  std::vector<int> v;
  for (std::size_t i = 0; i < scenes.size(); ++i)
    if (is_train[i])
      v.push_back(static_cast<int>(i));
  return v;
}

std::vector<int> Dataset::val_indices() const {
  std::vector<int> v;
  for (std::size_t i = 0; i < scenes.size(); ++i)
    if (!is_train[i])
      v.push_back(static_cast<int>(i));
  return v;
}

std::vector<ManifestRow> read_manifest(const std::string &dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "manifest.csv");
  if (!mf)
    throw io_error("read_manifest: cannot open manifest.csv in " + dir);
  std::string line;
  std::getline(mf, line); // header
  std::vector<ManifestRow> rows;
  while (std::getline(mf, line)) {
    if (line.empty())
      continue;
    ManifestRow r;
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    r.scene_id = std::stoull(tok);
    std::getline(ss, tok, ',');
    r.shape_class = std::stoi(tok);
    std::getline(ss, tok, ',');
    r.background_family = std::stoi(tok);
    std::getline(ss, tok, ',');
    r.seed = std::stoull(tok);
    rows.push_back(r);
  }
  return rows;
}

Dataset load_dataset(const std::string &dir) {
  namespace fs = std::filesystem;
  std::vector<ManifestRow> rows = read_manifest(dir);
  Dataset ds;
  ds.scenes.resize(rows.size());
  char name[32];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    SceneRecord &rec = ds.scenes[i];
    rec.scene_id = rows[i].scene_id;
    rec.shape_class = rows[i].shape_class;
    rec.background_family = rows[i].background_family;
    rec.seed = rows[i].seed;
    std::snprintf(name, sizeof(name), "%06llu.png",
                  static_cast<unsigned long long>(rec.scene_id));
    rec.image = png_read((fs::path(dir) / "images" / name).string());
    rec.gt_mask = mask_read((fs::path(dir) / "masks" / name).string());
  }
  std::vector<std::uint64_t> ids;
  ids.reserve(rows.size());
  for (const auto &r : rows)
    ids.push_back(r.scene_id);
  ds.is_train = train_split(ids);
  return ds;
}

} // namespace shapesworld
} // namespace dilo
