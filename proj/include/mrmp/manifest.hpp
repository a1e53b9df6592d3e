#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mrmp/data.hpp"
#include "mrmp/distribution.hpp"
#include "mrmp/gcn.hpp"
#include "mrmp/training.hpp"

namespace mrmp {

/// Fully resolved run configuration; written next to every checkpoint so a
/// run can be reproduced (or extrapolated from) without the original flags.
struct RunManifest {
  std::string mode = "mrmp";  // srmp | mrmp | mp | l1 | dense
  std::string data = "synth";
  std::string out;
  std::string precision = "f64";
  TargetPrior prior = TargetPrior::gaussian();
  std::vector<real> rates;
  real lambda = 10.0;
  real lambda1 = 0.0;  // l1 mode only
  int epochs = 300;
  int batch = 64;
  int bins = 100;
  real lr0 = 1e-2;
  real sigma0 = 1.0;
  real sigma_max = 1e6;
  int sigma_epochs = 0;  // epochs to reach sigma_max; 0 = all epochs
  std::uint64_t seed = 0;
  int threads = 0;
  int finetune_epochs = 0;  // mp mode only
  GcnConfig model;
  int chunks = 4;
  int knn = 3;
  real test_fraction = 0.3;
  SynthSpec synth;

  // FNV-1a of the canonical JSON serialization (hash field excluded).
  std::string config_hash() const;

  std::string to_json() const;
  static RunManifest from_json(const std::string& text);

  void save(const std::string& path) const;
  static RunManifest load(const std::string& path);

  TrainConfig train_config() const;
  SigmaSchedule sigma_schedule() const;
};

std::uint64_t fnv1a64(const std::string& text);

}  // namespace mrmp
