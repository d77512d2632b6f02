#ifndef DILO_CONFIG_HPP
#define DILO_CONFIG_HPP

#include <string>

#include "dilo/diagnose.hpp"
#include "dilo/trainer.hpp"

namespace dilo {

/// Every knob of a run in one flat key = value file with sections.
/// Unknown sections or keys are rejected; serialize/parse round-trips
/// exactly, so effective configs diff cleanly across ablations.
struct RunConfig {
  std::string dataset_dir;
  SaliencyParams saliency;
  AugmentationConfig aug;
  ContrastiveConfig contrastive;
  TrainSchedule schedule;
  ProbeConfig probe;
  std::uint64_t seed = 1;

  static RunConfig parse(const std::string &text);
  static RunConfig parse_file(const std::string &path);
  std::string serialize() const;
  /// 16-hex-digit digest of the serialized form.
  std::string digest() const;

  /// TrainOptions with the master seed wired through.
  TrainOptions train_options() const;

  bool operator==(const RunConfig &o) const {
    return serialize() == o.serialize();
  }
};

} // namespace dilo

#endif
