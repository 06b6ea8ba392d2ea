#pragma once

// Versioned binary network container (magic "VSRC"): kind, length-prefixed
// config text, named tensor table, optional optimizer-state table, trailing
// CRC-32. Save->load->save is byte-identical.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vsr/models.hpp"
#include "vsr/tensor.hpp"

namespace vsr {

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

struct CheckpointData {
  std::string kind;  // generator | discriminator | featurenet
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<NamedTensor> tensors;
  bool has_optimizer = false;
  std::vector<NamedTensor> optimizer;

  const NamedTensor* find(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);

// CRC-32 (IEEE, reflected); crc32("123456789") == 0xCBF43926.
std::uint32_t crc32(const unsigned char* data, std::size_t len);

// Model glue. with_optimizer additionally stores per-parameter ADAM moments
// ("opt.<name>.m"/".v") and the step counter ("opt.step").
CheckpointData generator_to_checkpoint(const Generator& g, bool with_optimizer = false,
                                       std::int64_t step = 0);
Generator generator_from_checkpoint(const CheckpointData& data, std::int64_t* step = nullptr);

CheckpointData discriminator_to_checkpoint(Discriminator& d, bool with_optimizer = false,
                                           std::int64_t step = 0);
Discriminator discriminator_from_checkpoint(const CheckpointData& data,
                                            std::int64_t* step = nullptr);

CheckpointData featurenet_to_checkpoint(const FeatureNet& fn);
FeatureNet featurenet_from_checkpoint(const CheckpointData& data);

// Spec honoring weight_file: loads the checkpoint when set, else seeded init.
FeatureNet make_feature_net(const FeatureNetSpec& spec);

}  // namespace vsr
