#ifndef DILO_CHECKPOINT_HPP
#define DILO_CHECKPOINT_HPP

#include <cstdint>
#include <string>

#include "dilo/nn.hpp"

namespace dilo {

/// Checkpoints are a little-endian IEEE-754 float32 flat buffer
/// (checkpoint.f32) plus a JSON manifest (checkpoint.json) recording layer
/// name, shape, offset, byte length, the global seed and the step count.
struct CheckpointMeta {
  std::uint64_t global_seed = 0;
  std::uint64_t step = 0;
};

void save_checkpoint(const std::string &dir, const nn::EncoderParams &params,
                     const CheckpointMeta &meta);

nn::EncoderParams load_checkpoint(const std::string &dir,
                                  CheckpointMeta *meta = nullptr);

} // namespace dilo

#endif
