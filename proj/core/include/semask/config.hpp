/* Copyright 2026 The semask Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SEMASK_CONFIG_HPP_
#define SEMASK_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "semask/augment.hpp"
#include "semask/decode.hpp"
#include "semask/features.hpp"
#include "semask/model.hpp"
#include "semask/train.hpp"

namespace semask {

// Everything a pipeline run needs, read from `key = value` lines grouped
// under [features], [augment], [model], [train] and [decode]. '#' starts a
// comment. In [model], `preset` (desk, tiny, paper_960h) is applied before
// the other keys regardless of their order. The model vocabulary size comes
// from the vocabulary file, not from the config.
struct RunConfig {
  FeatureConfig features;
  bool normalize = true;
  std::vector<double> speed_factors{1.0};
  MaskConfig augment;
  ModelConfig model;
  TrainConfig train;
  DecodeConfig decode;

  RunConfig();
  void validate() const;
};

RunConfig parse_run_config(std::string_view text);
RunConfig read_run_config(const std::filesystem::path& path);
std::string serialize_run_config(const RunConfig& cfg);

}  // namespace semask

#endif  // SEMASK_CONFIG_HPP_
