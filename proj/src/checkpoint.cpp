#include "dilo/checkpoint.hpp"

#include <bit>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace dilo {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

void save_checkpoint(const std::string &dir, const nn::EncoderParams &params,
                     const CheckpointMeta &meta) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);

  nlohmann::json manifest;
  manifest["format"] = "dilo-checkpoint-v1";
  manifest["global_seed"] = meta.global_seed;
  manifest["step"] = meta.step;
  manifest["embed_dim"] = params.embed_dim;

  std::ofstream bin(fs::path(dir) / "checkpoint.f32", std::ios::binary);
  if (!bin)
    throw io_error("save_checkpoint: cannot write in " + dir);
  std::uint64_t offset = 0;
  nlohmann::json tensors = nlohmann::json::array();
  auto names = nn::EncoderParams::tensor_names();
  auto ts = params.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const auto &t = *ts[i];
    std::uint64_t bytes = t.size() * sizeof(float);
    nlohmann::json entry;
    entry["name"] = names[i];
    entry["shape"] = t.shape;
    entry["offset"] = offset;
    entry["bytes"] = bytes;
    tensors.push_back(entry);
    bin.write(reinterpret_cast<const char *>(t.ptr()),
              static_cast<std::streamsize>(bytes));
    offset += bytes;
  }
  manifest["tensors"] = tensors;
  if (!bin)
    throw io_error("save_checkpoint: short write in " + dir);
  bin.close();

  std::ofstream mf(fs::path(dir) / "checkpoint.json");
  if (!mf)
    throw io_error("save_checkpoint: cannot write manifest in " + dir);
  mf << manifest.dump(2) << '\n';
}

nn::EncoderParams load_checkpoint(const std::string &dir,
                                  CheckpointMeta *meta) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "checkpoint.json");
  if (!mf)
    throw io_error("load_checkpoint: cannot open manifest in " + dir);
  nlohmann::json manifest;
  try {
    mf >> manifest;
  } catch (const nlohmann::json::exception &e) {
    throw io_error("load_checkpoint: bad manifest in " + dir + ": " + e.what());
  }
  if (manifest.value("format", "") != "dilo-checkpoint-v1")
    throw io_error("load_checkpoint: unknown checkpoint format in " + dir);

  nn::EncoderParams params =
      nn::EncoderParams::zeros(manifest.value("embed_dim", nn::kDefaultEmbedDim));
  if (meta) {
    meta->global_seed = manifest.value("global_seed", std::uint64_t{0});
    meta->step = manifest.value("step", std::uint64_t{0});
  }

  std::ifstream bin(fs::path(dir) / "checkpoint.f32", std::ios::binary);
  if (!bin)
    throw io_error("load_checkpoint: cannot open checkpoint.f32 in " + dir);
  auto names = nn::EncoderParams::tensor_names();
  auto ts = params.tensors();
  for (const auto &entry : manifest.at("tensors")) {
    std::string name = entry.at("name");
    std::size_t idx = ts.size();
    for (std::size_t i = 0; i < names.size(); ++i)
      if (name == names[i])
        idx = i;
    if (idx == ts.size())
      throw io_error("load_checkpoint: unknown tensor '" + name + "' in " + dir);
    auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape != ts[idx]->shape)
      throw io_error("load_checkpoint: shape mismatch for '" + name + "' in " +
                     dir);
    bin.seekg(static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    bin.read(reinterpret_cast<char *>(ts[idx]->ptr()),
             static_cast<std::streamsize>(entry.at("bytes").get<std::uint64_t>()));
    if (!bin)
      throw io_error("load_checkpoint: truncated checkpoint.f32 in " + dir);
  }
  return params;
}

} // namespace dilo
