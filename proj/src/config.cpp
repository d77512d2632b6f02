#include "dilo/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "dilo/rng.hpp"

namespace dilo {

namespace {

std::string trim(const std::string &s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos)
    return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string &s, const std::string &key) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size())
      throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw config_error("config: bad number for '" + key + "': " + s);
  }
}

long long parse_int(const std::string &s, const std::string &key) {
  try {
    std::size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size())
      throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw config_error("config: bad integer for '" + key + "': " + s);
  }
}

std::string fmt_int_list(const std::vector<int> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i)
      out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string &s, const std::string &key) {
  std::vector<int> out;
  if (trim(s).empty())
    return out;
  std::istringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    out.push_back(static_cast<int>(parse_int(trim(tok), key)));
  return out;
}

std::string background_to_string(BackgroundKind k) { return to_string(k); }

BackgroundKind background_from_string(const std::string &s) {
  if (s == "gray")
    return BackgroundKind::Grayscale;
  if (s == "texture")
    return BackgroundKind::TextureDir;
  if (s == "crops")
    return BackgroundKind::DatasetCrops;
  throw config_error("config: unknown background kind: " + s);
}

struct Field {
  std::string section;
  std::string key;
  std::function<std::string(const RunConfig &)> get;
  std::function<void(RunConfig &, const std::string &)> set;
};

std::vector<Field> fields() {
  std::vector<Field> f;
  auto add = [&](const char *sec, const char *key, auto get, auto set) {
    f.push_back({sec, key, get, set});
  };

  add("dataset", "dir",
      [](const RunConfig &c) { return c.dataset_dir; },
      [](RunConfig &c, const std::string &v) { c.dataset_dir = v; });

  add("saliency", "sigma_clr",
      [](const RunConfig &c) { return fmt_double(c.saliency.sigma_clr); },
      [](RunConfig &c, const std::string &v) {
        c.saliency.sigma_clr = parse_double(v, "sigma_clr");
      });
  add("saliency", "sigma_bnd",
      [](const RunConfig &c) { return fmt_double(c.saliency.sigma_bnd); },
      [](RunConfig &c, const std::string &v) {
        c.saliency.sigma_bnd = parse_double(v, "sigma_bnd");
      });
  add("saliency", "sigma_spa",
      [](const RunConfig &c) { return fmt_double(c.saliency.sigma_spa); },
      [](RunConfig &c, const std::string &v) {
        c.saliency.sigma_spa = parse_double(v, "sigma_spa");
      });
  add("saliency", "mu",
      [](const RunConfig &c) { return fmt_double(c.saliency.mu); },
      [](RunConfig &c, const std::string &v) {
        c.saliency.mu = parse_double(v, "mu");
      });
  add("saliency", "slic_k",
      [](const RunConfig &c) { return std::to_string(c.saliency.slic.region_target); },
      [](RunConfig &c, const std::string &v) {
        c.saliency.slic.region_target = static_cast<int>(parse_int(v, "slic_k"));
      });
  add("saliency", "slic_compactness",
      [](const RunConfig &c) {
        return fmt_double(c.saliency.slic.compactness);
      },
      [](RunConfig &c, const std::string &v) {
        c.saliency.slic.compactness =
            static_cast<float>(parse_double(v, "slic_compactness"));
      });
  add("saliency", "slic_iters",
      [](const RunConfig &c) { return std::to_string(c.saliency.slic.iterations); },
      [](RunConfig &c, const std::string &v) {
        c.saliency.slic.iterations = static_cast<int>(parse_int(v, "slic_iters"));
      });

  add("augment", "ratio",
      [](const RunConfig &c) { return fmt_double(c.aug.aug_ratio); },
      [](RunConfig &c, const std::string &v) {
        c.aug.aug_ratio = parse_double(v, "ratio");
      });
  add("augment", "blend",
      [](const RunConfig &c) { return to_string(c.aug.blend); },
      [](RunConfig &c, const std::string &v) {
        c.aug.blend = blend_mode_from_string(v);
      });
  add("augment", "background",
      [](const RunConfig &c) { return background_to_string(c.aug.background); },
      [](RunConfig &c, const std::string &v) {
        c.aug.background = background_from_string(v);
      });
  add("augment", "background_dir",
      [](const RunConfig &c) { return c.aug.background_dir; },
      [](RunConfig &c, const std::string &v) { c.aug.background_dir = v; });
  add("augment", "saliency_method",
      [](const RunConfig &c) { return to_string(c.aug.saliency_method); },
      [](RunConfig &c, const std::string &v) {
        c.aug.saliency_method = saliency_method_from_string(v);
      });
  add("augment", "flip_prob",
      [](const RunConfig &c) { return fmt_double(c.aug.flip_prob); },
      [](RunConfig &c, const std::string &v) {
        c.aug.flip_prob = parse_double(v, "flip_prob");
      });
  add("augment", "crop_scale_min",
      [](const RunConfig &c) { return fmt_double(c.aug.crop_scale_min); },
      [](RunConfig &c, const std::string &v) {
        c.aug.crop_scale_min = parse_double(v, "crop_scale_min");
      });
  add("augment", "crop_scale_max",
      [](const RunConfig &c) { return fmt_double(c.aug.crop_scale_max); },
      [](RunConfig &c, const std::string &v) {
        c.aug.crop_scale_max = parse_double(v, "crop_scale_max");
      });
  add("augment", "jitter_brightness",
      [](const RunConfig &c) { return fmt_double(c.aug.jitter_brightness); },
      [](RunConfig &c, const std::string &v) {
        c.aug.jitter_brightness = parse_double(v, "jitter_brightness");
      });
  add("augment", "jitter_contrast",
      [](const RunConfig &c) { return fmt_double(c.aug.jitter_contrast); },
      [](RunConfig &c, const std::string &v) {
        c.aug.jitter_contrast = parse_double(v, "jitter_contrast");
      });
  add("augment", "jitter_saturation",
      [](const RunConfig &c) { return fmt_double(c.aug.jitter_saturation); },
      [](RunConfig &c, const std::string &v) {
        c.aug.jitter_saturation = parse_double(v, "jitter_saturation");
      });
  add("augment", "jitter_hue",
      [](const RunConfig &c) { return fmt_double(c.aug.jitter_hue); },
      [](RunConfig &c, const std::string &v) {
        c.aug.jitter_hue = parse_double(v, "jitter_hue");
      });
  add("augment", "gray_prob",
      [](const RunConfig &c) { return fmt_double(c.aug.gray_prob); },
      [](RunConfig &c, const std::string &v) {
        c.aug.gray_prob = parse_double(v, "gray_prob");
      });
  add("augment", "output_size",
      [](const RunConfig &c) { return std::to_string(c.aug.output_size); },
      [](RunConfig &c, const std::string &v) {
        c.aug.output_size = static_cast<int>(parse_int(v, "output_size"));
      });

  add("contrastive", "tau",
      [](const RunConfig &c) { return fmt_double(c.contrastive.tau); },
      [](RunConfig &c, const std::string &v) {
        c.contrastive.tau = parse_double(v, "tau");
      });
  add("contrastive", "dim",
      [](const RunConfig &c) { return std::to_string(c.contrastive.dim); },
      [](RunConfig &c, const std::string &v) {
        c.contrastive.dim = static_cast<int>(parse_int(v, "dim"));
      });
  add("contrastive", "queue",
      [](const RunConfig &c) {
        return std::to_string(c.contrastive.queue_capacity);
      },
      [](RunConfig &c, const std::string &v) {
        c.contrastive.queue_capacity = static_cast<int>(parse_int(v, "queue"));
      });
  add("contrastive", "momentum",
      [](const RunConfig &c) { return fmt_double(c.contrastive.momentum); },
      [](RunConfig &c, const std::string &v) {
        c.contrastive.momentum = parse_double(v, "momentum");
      });

  add("trainer", "epochs",
      [](const RunConfig &c) { return std::to_string(c.schedule.epochs); },
      [](RunConfig &c, const std::string &v) {
        c.schedule.epochs = static_cast<int>(parse_int(v, "epochs"));
      });
  add("trainer", "lr",
      [](const RunConfig &c) { return fmt_double(c.schedule.lr); },
      [](RunConfig &c, const std::string &v) {
        c.schedule.lr = parse_double(v, "lr");
      });
  add("trainer", "decay_epochs",
      [](const RunConfig &c) { return fmt_int_list(c.schedule.decay_epochs); },
      [](RunConfig &c, const std::string &v) {
        c.schedule.decay_epochs = parse_int_list(v, "decay_epochs");
      });
  add("trainer", "decay_factor",
      [](const RunConfig &c) { return fmt_double(c.schedule.decay_factor); },
      [](RunConfig &c, const std::string &v) {
        c.schedule.decay_factor = parse_double(v, "decay_factor");
      });
  add("trainer", "batch",
      [](const RunConfig &c) { return std::to_string(c.schedule.batch_size); },
      [](RunConfig &c, const std::string &v) {
        c.schedule.batch_size = static_cast<int>(parse_int(v, "batch"));
      });
  add("trainer", "sgd_momentum",
      [](const RunConfig &c) { return fmt_double(c.schedule.sgd_momentum); },
      [](RunConfig &c, const std::string &v) {
        c.schedule.sgd_momentum = parse_double(v, "sgd_momentum");
      });
  add("trainer", "weight_decay",
      [](const RunConfig &c) { return fmt_double(c.schedule.weight_decay); },
      [](RunConfig &c, const std::string &v) {
        c.schedule.weight_decay = parse_double(v, "weight_decay");
      });
  add("trainer", "seed",
      [](const RunConfig &c) { return std::to_string(c.seed); },
      [](RunConfig &c, const std::string &v) {
        c.seed = static_cast<std::uint64_t>(parse_int(v, "seed"));
      });

  add("probe", "epochs",
      [](const RunConfig &c) { return std::to_string(c.probe.epochs); },
      [](RunConfig &c, const std::string &v) {
        c.probe.epochs = static_cast<int>(parse_int(v, "epochs"));
      });
  add("probe", "lr",
      [](const RunConfig &c) { return fmt_double(c.probe.lr); },
      [](RunConfig &c, const std::string &v) {
        c.probe.lr = parse_double(v, "lr");
      });
  add("probe", "decay_every",
      [](const RunConfig &c) { return std::to_string(c.probe.decay_every); },
      [](RunConfig &c, const std::string &v) {
        c.probe.decay_every = static_cast<int>(parse_int(v, "decay_every"));
      });
  add("probe", "decay_factor",
      [](const RunConfig &c) { return fmt_double(c.probe.decay_factor); },
      [](RunConfig &c, const std::string &v) {
        c.probe.decay_factor = parse_double(v, "decay_factor");
      });
  add("probe", "batch",
      [](const RunConfig &c) { return std::to_string(c.probe.batch_size); },
      [](RunConfig &c, const std::string &v) {
        c.probe.batch_size = static_cast<int>(parse_int(v, "batch"));
      });
  return f;
}

} // namespace

RunConfig RunConfig::parse(const std::string &text) {
  RunConfig cfg;
  const std::vector<Field> reg = fields();
  std::istringstream ss(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';')
      continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw config_error("config: malformed section at line " +
                           std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      bool known = false;
      for (const auto &f : reg)
        known = known || f.section == section;
      if (!known)
        throw config_error("config: unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw config_error("config: expected key = value at line " +
                         std::to_string(lineno));
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    bool matched = false;
    for (const auto &f : reg)
      if (f.section == section && f.key == key) {
        f.set(cfg, value);
        matched = true;
        break;
      }
    if (!matched)
      throw config_error("config: unknown key '" + key + "' in section [" +
                         section + "]");
  }
  return cfg;
}

RunConfig RunConfig::parse_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw io_error("config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string RunConfig::serialize() const {
  const std::vector<Field> reg = fields();
  std::string out;
  std::string current;
  for (const auto &f : reg) {
    if (f.section != current) {
      if (!out.empty())
        out += '\n';
      out += "[" + f.section + "]\n";
      current = f.section;
    }
    out += f.key + " = " + f.get(*this) + "\n";
  }
  return out;
}

std::string RunConfig::digest() const {
  std::string s = serialize();
  std::uint64_t h = 0x811c9dc5ULL;
  for (unsigned char c : s)
    h = mix64(h ^ c);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions opts;
  opts.aug = aug;
  opts.aug.seed = seed;
  opts.contrastive = contrastive;
  opts.saliency = saliency;
  opts.schedule = schedule;
  opts.seed = seed;
  return opts;
}

} // namespace dilo
